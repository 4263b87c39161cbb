//! Reader and writer for the input document format.
//!
//! The format is a relaxed TOML subset: optional top-level `key = value` pairs,
//! followed by array-of-table headers such as `[[primitive]]`, `[[model]]` and
//! `[[probe]]`. Key/value pairs may be separated by newlines or plain
//! whitespace, so `[[primitive]] kind="point" re=0.0 im=0.0` is one valid line.
//! Values are strings, numbers (including `inf`, `-inf`, `+inf`), booleans,
//! bracketed arrays and `{ ... }` inline tables. `#` starts a comment.

use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("syntax error at {pos}: {message}")]
pub struct SyntaxError {
    pub pos: Position,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Str(String),
    Bool(bool),
    Array(Vec<Value>),
    Table(Table),
}

impl Value {
    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Number(_) => "number",
            Value::Str(_) => "string",
            Value::Bool(_) => "boolean",
            Value::Array(_) => "array",
            Value::Table(_) => "table",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: Value,
    pub pos: Position,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub entries: Vec<Entry>,
    pub pos: Option<Position>,
}

impl Table {
    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub header: String,
    pub table: Table,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Document {
    pub top: Table,
    pub sections: Vec<Section>,
}

impl Document {
    pub fn sections_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Section> + 'a {
        self.sections.iter().filter(move |s| s.header == name)
    }
}

struct Cursor<'a> {
    chars: Vec<char>,
    idx: usize,
    line: usize,
    col: usize,
    _src: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Cursor {
            chars: src.chars().collect(),
            idx: 0,
            line: 1,
            col: 1,
            _src: src,
        }
    }

    fn pos(&self) -> Position {
        Position {
            line: self.line,
            column: self.col,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.idx).copied()
    }

    fn peek_at(&self, off: usize) -> Option<char> {
        self.chars.get(self.idx + off).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.idx += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, SyntaxError> {
        Err(SyntaxError {
            pos: self.pos(),
            message: message.into(),
        })
    }

    /// Skip whitespace (including newlines) and comments.
    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn expect(&mut self, want: char) -> Result<(), SyntaxError> {
        match self.peek() {
            Some(c) if c == want => {
                self.bump();
                Ok(())
            }
            Some(c) => self.err(format!("expected `{want}`, found `{c}`")),
            None => self.err(format!("expected `{want}`, found end of input")),
        }
    }

    fn ident(&mut self) -> Result<String, SyntaxError> {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' || c == '-' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        if s.is_empty() {
            return match self.peek() {
                Some(c) => self.err(format!("expected a key, found `{c}`")),
                None => self.err("expected a key, found end of input"),
            };
        }
        Ok(s)
    }

    fn value(&mut self) -> Result<Value, SyntaxError> {
        self.skip_trivia();
        match self.peek() {
            Some('"') => self.string().map(Value::Str),
            Some('[') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    if self.peek() == Some(']') {
                        self.bump();
                        break;
                    }
                    items.push(self.value()?);
                    self.skip_trivia();
                    match self.peek() {
                        Some(',') => {
                            self.bump();
                        }
                        Some(']') => {
                            self.bump();
                            break;
                        }
                        Some(c) => return self.err(format!("expected `,` or `]` in array, found `{c}`")),
                        None => return self.err("unterminated array"),
                    }
                }
                Ok(Value::Array(items))
            }
            Some('{') => {
                let pos = self.pos();
                self.bump();
                let mut table = Table {
                    entries: Vec::new(),
                    pos: Some(pos),
                };
                loop {
                    self.skip_trivia();
                    if self.peek() == Some('}') {
                        self.bump();
                        break;
                    }
                    let entry = self.entry()?;
                    push_unique(&mut table, entry)?;
                    self.skip_trivia();
                    match self.peek() {
                        Some(',') => {
                            self.bump();
                        }
                        Some('}') => {
                            self.bump();
                            break;
                        }
                        Some(c) => return self.err(format!("expected `,` or `}}` in inline table, found `{c}`")),
                        None => return self.err("unterminated inline table"),
                    }
                }
                Ok(Value::Table(table))
            }
            Some(c) if c == '+' || c == '-' || c == '.' || c.is_ascii_digit() || c == 'i' || c == 'n' => {
                self.number()
            }
            Some('t') | Some('f') => {
                let pos = self.pos();
                let word = self.ident()?;
                match word.as_str() {
                    "true" => Ok(Value::Bool(true)),
                    "false" => Ok(Value::Bool(false)),
                    _ => Err(SyntaxError {
                        pos,
                        message: format!("unexpected token `{word}`"),
                    }),
                }
            }
            Some(c) => self.err(format!("unexpected character `{c}` where a value was expected")),
            None => self.err("expected a value, found end of input"),
        }
    }

    fn string(&mut self) -> Result<String, SyntaxError> {
        self.expect('"')?;
        let mut s = String::new();
        loop {
            match self.bump() {
                Some('"') => return Ok(s),
                Some('\\') => match self.bump() {
                    Some('n') => s.push('\n'),
                    Some('t') => s.push('\t'),
                    Some('"') => s.push('"'),
                    Some('\\') => s.push('\\'),
                    Some(c) => return self.err(format!("unknown escape `\\{c}`")),
                    None => return self.err("unterminated string"),
                },
                Some('\n') | None => return self.err("unterminated string"),
                Some(c) => s.push(c),
            }
        }
    }

    fn number(&mut self) -> Result<Value, SyntaxError> {
        let pos = self.pos();
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.' | '_') {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        let cleaned: String = s.chars().filter(|&c| c != '_').collect();
        let body = cleaned.trim_start_matches(['+', '-']);
        let negative = cleaned.starts_with('-');
        let parsed = match body {
            "inf" => Some(f64::INFINITY),
            "nan" => Some(f64::NAN),
            _ if body.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-'))
                && body.starts_with(|c: char| c.is_ascii_digit() || c == '.') =>
            {
                body.parse::<f64>().ok()
            }
            _ => None,
        };
        match parsed {
            Some(v) => Ok(Value::Number(if negative { -v } else { v })),
            None => Err(SyntaxError {
                pos,
                message: format!("invalid number `{s}`"),
            }),
        }
    }

    fn entry(&mut self) -> Result<Entry, SyntaxError> {
        let pos = self.pos();
        let key = self.ident()?;
        self.skip_inline_ws();
        self.expect('=')?;
        let value = self.value()?;
        Ok(Entry { key, value, pos })
    }

    fn skip_inline_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c == ' ' || c == '\t' {
                self.bump();
            } else {
                break;
            }
        }
    }
}

fn push_unique(table: &mut Table, entry: Entry) -> Result<(), SyntaxError> {
    if table.get(&entry.key).is_some() {
        return Err(SyntaxError {
            pos: entry.pos,
            message: format!("duplicate key `{}`", entry.key),
        });
    }
    table.entries.push(entry);
    Ok(())
}

/// Parse a document into its raw tables.
pub fn parse_document(text: &str) -> Result<Document, SyntaxError> {
    let mut cur = Cursor::new(text);
    let mut doc = Document::default();
    loop {
        cur.skip_trivia();
        match cur.peek() {
            None => break,
            Some('[') => {
                let pos = cur.pos();
                if cur.peek_at(1) != Some('[') {
                    return cur.err("only array-of-table headers `[[name]]` are supported");
                }
                cur.bump();
                cur.bump();
                cur.skip_inline_ws();
                let name = cur.ident()?;
                cur.skip_inline_ws();
                cur.expect(']')?;
                cur.expect(']')?;
                doc.sections.push(Section {
                    header: name,
                    table: Table {
                        entries: Vec::new(),
                        pos: Some(pos),
                    },
                });
            }
            Some(_) => {
                let entry = cur.entry()?;
                let table = match doc.sections.last_mut() {
                    Some(s) => &mut s.table,
                    None => &mut doc.top,
                };
                push_unique(table, entry)?;
                // Entries must be separated by whitespace or a comment.
                match cur.peek() {
                    None => {}
                    Some(c) if c.is_whitespace() || c == '#' => {}
                    Some(c) => return cur.err(format!("expected whitespace after value, found `{c}`")),
                }
            }
        }
    }
    Ok(doc)
}

/// Format a float so that it reads back bit-identically.
pub fn format_number(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v:?}")
    }
}

pub fn format_value(v: &Value) -> String {
    match v {
        Value::Number(x) => format_number(*x),
        Value::Str(s) => format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n")),
        Value::Bool(b) => b.to_string(),
        Value::Array(items) => {
            let inner: Vec<String> = items.iter().map(format_value).collect();
            format!("[{}]", inner.join(", "))
        }
        Value::Table(t) => {
            let inner: Vec<String> = t
                .entries
                .iter()
                .map(|e| format!("{} = {}", e.key, format_value(&e.value)))
                .collect();
            format!("{{ {} }}", inner.join(", "))
        }
    }
}

/// Typed accessors used by the semantic layers; errors name the key and position.
pub mod access {
    use super::{Entry, Position, Table, Value};

    #[derive(Debug, Clone, PartialEq)]
    pub struct FieldError {
        pub pos: Option<Position>,
        pub message: String,
    }

    impl std::fmt::Display for FieldError {
        fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
            match self.pos {
                Some(p) => write!(f, "at {p}: {}", self.message),
                None => write!(f, "{}", self.message),
            }
        }
    }

    fn err(pos: Option<Position>, message: String) -> FieldError {
        FieldError { pos, message }
    }

    pub fn reject_unknown(table: &Table, allowed: &[&str], what: &str) -> Result<(), FieldError> {
        for e in &table.entries {
            if !allowed.contains(&e.key.as_str()) {
                return Err(err(
                    Some(e.pos),
                    format!("unknown key `{}` for {what}; expected one of {}", e.key, allowed.join(", ")),
                ));
            }
        }
        Ok(())
    }

    pub fn required<'a>(table: &'a Table, key: &str, what: &str) -> Result<&'a Entry, FieldError> {
        table
            .get(key)
            .ok_or_else(|| err(table.pos, format!("missing key `{key}` for {what}")))
    }

    pub fn number(entry: &Entry) -> Result<f64, FieldError> {
        match &entry.value {
            Value::Number(x) => Ok(*x),
            other => Err(err(
                Some(entry.pos),
                format!("`{}` must be a number, found {}", entry.key, other.type_name()),
            )),
        }
    }

    pub fn string(entry: &Entry) -> Result<&str, FieldError> {
        match &entry.value {
            Value::Str(s) => Ok(s),
            other => Err(err(
                Some(entry.pos),
                format!("`{}` must be a string, found {}", entry.key, other.type_name()),
            )),
        }
    }

    pub fn number_list(entry: &Entry) -> Result<Vec<f64>, FieldError> {
        match &entry.value {
            Value::Array(items) => items
                .iter()
                .map(|v| match v {
                    Value::Number(x) => Ok(*x),
                    other => Err(err(
                        Some(entry.pos),
                        format!("`{}` must contain numbers, found {}", entry.key, other.type_name()),
                    )),
                })
                .collect(),
            other => Err(err(
                Some(entry.pos),
                format!("`{}` must be an array, found {}", entry.key, other.type_name()),
            )),
        }
    }

    pub fn nonneg_integer(entry: &Entry) -> Result<u64, FieldError> {
        let x = number(entry)?;
        if x.is_finite() && x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(53) {
            Ok(x as u64)
        } else {
            Err(err(
                Some(entry.pos),
                format!("`{}` must be a nonnegative integer, found {x}", entry.key),
            ))
        }
    }
}
