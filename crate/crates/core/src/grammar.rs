//! Grammar for bracketed keyword-argument call expressions.
//!
//! The surface syntax is the bracketed list form emitted by function-calling
//! models: `[func1(key=value, ...), func2(...)]`. Function names may contain
//! interior spaces (`Market Trends API(...)`); arguments are keyword-only;
//! values are strings, numbers, booleans, `None`/`null`, lists, mappings, or
//! nested calls. Numbers keep their exact source lexeme so parse→render→parse
//! is a fixed point; numeric comparison semantics live in [`crate::equivalence`].

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::format;
use core::fmt;
use core::fmt::Write as _;

/// A literal or structured argument value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    /// Text literal. Source quoting style is not preserved; rendering always
    /// double-quotes.
    Str(String),
    /// Numeric literal, lexeme-preserving.
    Number(Number),
    Bool(bool),
    Null,
    /// Ordered sequence; element order is significant.
    List(Vec<Value>),
    /// Ordered string-keyed pairs; source order is preserved, keys are unique.
    Mapping(Vec<(String, Value)>),
    /// A function call used as an argument value.
    Call(FunctionCall),
}

impl Value {
    pub fn str(s: impl Into<String>) -> Self {
        Value::Str(s.into())
    }

    /// Builds a numeric value, panicking on an invalid lexeme. Intended for
    /// construction from trusted literals; parsed input goes through
    /// [`Number::new`].
    pub fn number(lexeme: &str) -> Self {
        Value::Number(Number::new(lexeme).expect("invalid number lexeme"))
    }
}

/// Numeric literal wrapper that preserves the source lexeme byte-for-byte.
///
/// Equality is lexeme equality (structural); `1` and `1.0` are distinct here
/// and only unified by the equivalence policy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Number {
    lexeme: String,
}

impl Number {
    /// Validates and wraps a number lexeme: optional sign, decimal digits with
    /// optional fraction, optional exponent.
    pub fn new(lexeme: impl Into<String>) -> Option<Self> {
        let lexeme = lexeme.into();
        if is_number_lexeme(&lexeme) {
            Some(Number { lexeme })
        } else {
            None
        }
    }

    pub fn lexeme(&self) -> &str {
        &self.lexeme
    }

    /// True when the lexeme has neither a fraction nor an exponent.
    pub fn is_integer_lexeme(&self) -> bool {
        !self.lexeme.contains(['.', 'e', 'E'])
    }

    /// Lossy float view; large integers may lose precision, which is why
    /// integer-vs-integer comparison never goes through here.
    pub fn as_f64(&self) -> f64 {
        self.lexeme.parse::<f64>().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.lexeme)
    }
}

/// One function call: a name and an ordered keyword-argument list.
///
/// Invariants (enforced by the parser, expected of constructed values): the
/// name is non-empty after trimming and argument keys are unique.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionCall {
    pub name: String,
    pub args: Vec<(String, Value)>,
}

impl FunctionCall {
    pub fn new(name: impl Into<String>) -> Self {
        FunctionCall { name: name.into(), args: Vec::new() }
    }

    pub fn with_arg(mut self, key: impl Into<String>, value: Value) -> Self {
        self.args.push((key.into(), value));
        self
    }

    pub fn arg(&self, key: &str) -> Option<&Value> {
        self.args.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }
}

/// An ordered list of calls. The empty list is a legal, meaningful value: it
/// encodes "no call", which relevancy scoring depends on.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CallList {
    pub calls: Vec<FunctionCall>,
}

impl CallList {
    pub fn new(calls: Vec<FunctionCall>) -> Self {
        CallList { calls }
    }

    pub fn empty() -> Self {
        CallList { calls: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.calls.is_empty()
    }

    pub fn len(&self) -> usize {
        self.calls.len()
    }
}

impl From<Vec<FunctionCall>> for CallList {
    fn from(calls: Vec<FunctionCall>) -> Self {
        CallList { calls }
    }
}

/// Parse failure with the byte offset where it happened and a description of
/// what was expected there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub offset: usize,
    pub message: String,
}

impl SyntaxError {
    fn new(offset: usize, message: impl Into<String>) -> Self {
        SyntaxError { offset, message: message.into() }
    }
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at byte {}: {}", self.offset, self.message)
    }
}

impl core::error::Error for SyntaxError {}

/// Parses a call-list expression into its AST.
///
/// The surrounding `[...]` is optional. An empty expression (or `[]`) parses
/// to the empty [`CallList`]. Positional arguments, duplicate argument keys,
/// unbalanced brackets, and trailing garbage are all reported as
/// [`SyntaxError`]s; the parser never panics on arbitrary input.
pub fn parse_call_list(text: &str) -> Result<CallList, SyntaxError> {
    let mut p = Parser::new(text);
    p.skip_ws();
    let bracketed = p.eat(b'[');
    p.skip_ws();

    let mut calls = Vec::new();
    if bracketed {
        if !p.eat(b']') {
            if p.at_end() {
                return Err(p.err("expected `]` to close the call list"));
            }
            p.parse_calls_into(&mut calls)?;
            if !p.eat(b']') {
                return Err(p.err("expected `,` or `]`"));
            }
        }
    } else if !p.at_end() {
        p.parse_calls_into(&mut calls)?;
    }

    p.skip_ws();
    if !p.at_end() {
        return Err(p.err("trailing input after call list"));
    }
    Ok(CallList { calls })
}

/// Renders a call list in canonical form: `[name(k1=v1, k2=v2)]`,
/// double-quoted strings, capitalized `True`/`False`/`None`, a single space
/// after commas, arguments in source order. `parse_call_list` of the result
/// reproduces the input exactly.
pub fn render_call_list(list: &CallList) -> String {
    let mut out = String::from("[");
    for (i, call) in list.calls.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_call(&mut out, call);
    }
    out.push(']');
    out
}

/// Renders a single call without surrounding brackets.
pub fn render_call(call: &FunctionCall) -> String {
    let mut out = String::new();
    write_call(&mut out, call);
    out
}

/// Renders one value in call syntax (capitalized keywords, not JSON).
pub fn render_value(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value);
    out
}

fn write_call(out: &mut String, call: &FunctionCall) {
    out.push_str(&call.name);
    out.push('(');
    for (i, (key, value)) in call.args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(key);
        out.push('=');
        write_value(out, value);
    }
    out.push(')');
}

fn write_value(out: &mut String, value: &Value) {
    match value {
        Value::Str(s) => write_quoted(out, s),
        Value::Number(n) => out.push_str(n.lexeme()),
        Value::Bool(true) => out.push_str("True"),
        Value::Bool(false) => out.push_str("False"),
        Value::Null => out.push_str("None"),
        Value::List(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(out, item);
            }
            out.push(']');
        }
        Value::Mapping(entries) => {
            out.push('{');
            for (i, (key, item)) in entries.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_quoted(out, key);
                out.push_str(": ");
                write_value(out, item);
            }
            out.push('}');
        }
        Value::Call(call) => write_call(out, call),
    }
}

fn write_quoted(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

/// A section extracted from between `<TAG>` and `</TAG>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tagged<'a> {
    pub content: &'a str,
    /// Set when the closing tag was missing and content ran to end-of-text.
    pub truncated: bool,
}

/// Returns the content between the first `<TAG>` and the next `</TAG>`.
///
/// Absence of the opening tag yields `None` (absence is a value, not an
/// error). A missing closing tag yields the remainder of the text with
/// `truncated` set.
pub fn extract_tagged<'a>(text: &'a str, tag: &str) -> Option<Tagged<'a>> {
    let open = format!("<{tag}>");
    let close = format!("</{tag}>");
    let start = text.find(&open)? + open.len();
    match text[start..].find(&close) {
        Some(rel) => Some(Tagged { content: &text[start..start + rel], truncated: false }),
        None => Some(Tagged { content: &text[start..], truncated: true }),
    }
}

fn is_number_lexeme(s: &str) -> bool {
    let b = s.as_bytes();
    let mut i = 0;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        i += 1;
    }
    let int_digits = count_digits(b, i);
    i += int_digits;
    let mut frac_digits = 0;
    if i < b.len() && b[i] == b'.' {
        i += 1;
        frac_digits = count_digits(b, i);
        i += frac_digits;
    }
    if int_digits == 0 && frac_digits == 0 {
        return false;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        i += 1;
        if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
            i += 1;
        }
        let exp_digits = count_digits(b, i);
        if exp_digits == 0 {
            return false;
        }
        i += exp_digits;
    }
    i == b.len()
}

fn count_digits(b: &[u8], from: usize) -> usize {
    b[from..].iter().take_while(|c| c.is_ascii_digit()).count()
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src, bytes: src.as_bytes(), pos: 0 }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.bytes.len()
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, byte: u8) -> bool {
        if self.peek() == Some(byte) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn parse_calls_into(&mut self, calls: &mut Vec<FunctionCall>) -> Result<(), SyntaxError> {
        loop {
            calls.push(self.parse_call()?);
            self.skip_ws();
            if self.eat(b',') {
                self.skip_ws();
                continue;
            }
            return Ok(());
        }
    }

    fn err(&self, message: impl Into<String>) -> SyntaxError {
        let mut message = message.into();
        match self.peek() {
            Some(c) if c.is_ascii_graphic() || c == b' ' => {
                let _ = write!(message, ", found `{}`", c as char);
            }
            Some(_) => message.push_str(", found non-ASCII input"),
            None => message.push_str(", found end of input"),
        }
        SyntaxError::new(self.pos, message)
    }

    /// Scans a top-level function name: the maximal run excluding `(`, `[`,
    /// `]`, and commas, trimmed of surrounding whitespace.
    fn parse_call(&mut self) -> Result<FunctionCall, SyntaxError> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if matches!(c, b'(' | b'[' | b']' | b',') {
                break;
            }
            self.pos += 1;
        }
        let name = self.src[start..self.pos].trim();
        if name.is_empty() {
            return Err(SyntaxError::new(start, String::from("expected a function name")));
        }
        if !self.eat(b'(') {
            return Err(self.err(format!("expected `(` after function name `{name}`")));
        }
        self.parse_args(name.to_string())
    }

    fn parse_args(&mut self, name: String) -> Result<FunctionCall, SyntaxError> {
        let mut args: Vec<(String, Value)> = Vec::new();
        self.skip_ws();
        if self.eat(b')') {
            return Ok(FunctionCall { name, args });
        }
        loop {
            let (key, key_offset) = self.parse_arg_key()?;
            if args.iter().any(|(k, _)| *k == key) {
                return Err(SyntaxError::new(
                    key_offset,
                    format!("duplicate argument `{key}` in call to `{name}`"),
                ));
            }
            self.skip_ws();
            if !self.eat(b'=') {
                return Err(self.err(format!(
                    "expected `=` after argument name `{key}` (positional arguments are not supported)"
                )));
            }
            self.skip_ws();
            let value = self.parse_value()?;
            args.push((key, value));
            self.skip_ws();
            if self.eat(b',') {
                self.skip_ws();
                continue;
            }
            if self.eat(b')') {
                return Ok(FunctionCall { name, args });
            }
            return Err(self.err("expected `,` or `)` in argument list"));
        }
    }

    fn parse_arg_key(&mut self) -> Result<(String, usize), SyntaxError> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            let ok = c.is_ascii_alphanumeric()
                || c == b'_'
                || c == b'.'
                || c == b'$'
                || (c == b'-' && self.pos > start);
            if ok {
                self.pos += 1;
            } else {
                break;
            }
        }
        if self.pos == start {
            return Err(self.err(
                "expected an argument name (positional or non-identifier arguments are not supported)",
            ));
        }
        Ok((self.src[start..self.pos].to_string(), start))
    }

    fn parse_value(&mut self) -> Result<Value, SyntaxError> {
        match self.peek() {
            Some(b'"') | Some(b'\'') => self.parse_string().map(Value::Str),
            Some(b'[') => self.parse_list(),
            Some(b'{') => self.parse_mapping(),
            Some(_) => self.parse_bare_token(),
            None => Err(self.err("expected a value")),
        }
    }

    /// Handles nested calls, keywords, and numbers. A run of non-delimiter
    /// characters followed by `(` is a nested call (names may contain interior
    /// spaces); otherwise the trimmed run must be a keyword or number lexeme.
    fn parse_bare_token(&mut self) -> Result<Value, SyntaxError> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if matches!(c, b'(' | b')' | b'[' | b']' | b'{' | b'}' | b',' | b'=' | b'"' | b'\'') {
                break;
            }
            self.pos += 1;
        }
        let raw = &self.src[start..self.pos];
        let token = raw.trim();

        if self.peek() == Some(b'(') && !token.is_empty() {
            self.pos += 1; // consume `(`
            return self.parse_args(token.to_string()).map(Value::Call);
        }
        match token {
            "" => Err(self.err("expected a value")),
            "True" | "true" => Ok(Value::Bool(true)),
            "False" | "false" => Ok(Value::Bool(false)),
            "None" | "null" => Ok(Value::Null),
            t => match Number::new(t) {
                Some(n) => Ok(Value::Number(n)),
                None => Err(SyntaxError::new(
                    start,
                    format!("expected a value, found `{t}` (expressions are not evaluated)"),
                )),
            },
        }
    }

    fn parse_list(&mut self) -> Result<Value, SyntaxError> {
        self.pos += 1; // consume `[`
        let mut items = Vec::new();
        self.skip_ws();
        if self.eat(b']') {
            return Ok(Value::List(items));
        }
        loop {
            items.push(self.parse_value()?);
            self.skip_ws();
            if self.eat(b',') {
                self.skip_ws();
                continue;
            }
            if self.eat(b']') {
                return Ok(Value::List(items));
            }
            return Err(self.err("expected `,` or `]` in list"));
        }
    }

    fn parse_mapping(&mut self) -> Result<Value, SyntaxError> {
        self.pos += 1; // consume `{`
        let mut entries: Vec<(String, Value)> = Vec::new();
        self.skip_ws();
        if self.eat(b'}') {
            return Ok(Value::Mapping(entries));
        }
        loop {
            self.skip_ws();
            let key_offset = self.pos;
            let key = match self.peek() {
                Some(b'"') | Some(b'\'') => self.parse_string()?,
                _ => return Err(self.err("expected a quoted mapping key")),
            };
            if entries.iter().any(|(k, _)| *k == key) {
                return Err(SyntaxError::new(
                    key_offset,
                    format!("duplicate mapping key `{key}`"),
                ));
            }
            self.skip_ws();
            if !self.eat(b':') {
                return Err(self.err("expected `:` after mapping key"));
            }
            self.skip_ws();
            let value = self.parse_value()?;
            entries.push((key, value));
            self.skip_ws();
            if self.eat(b',') {
                continue;
            }
            if self.eat(b'}') {
                return Ok(Value::Mapping(entries));
            }
            return Err(self.err("expected `,` or `}` in mapping"));
        }
    }

    fn parse_string(&mut self) -> Result<String, SyntaxError> {
        let quote = self.bytes[self.pos];
        let open_offset = self.pos;
        self.pos += 1;
        let mut out = String::new();
        let mut chunk_start = self.pos;
        loop {
            match self.peek() {
                None => {
                    return Err(SyntaxError::new(
                        open_offset,
                        String::from("unterminated string literal"),
                    ));
                }
                Some(c) if c == quote => {
                    out.push_str(&self.src[chunk_start..self.pos]);
                    self.pos += 1;
                    return Ok(out);
                }
                Some(b'\\') => {
                    out.push_str(&self.src[chunk_start..self.pos]);
                    self.pos += 1;
                    let c = self.parse_escape()?;
                    out.push(c);
                    chunk_start = self.pos;
                }
                Some(_) => {
                    // Advance one full UTF-8 character.
                    let rest = &self.src[self.pos..];
                    let ch = rest.chars().next().expect("position is on a char boundary");
                    self.pos += ch.len_utf8();
                }
            }
        }
    }

    fn parse_escape(&mut self) -> Result<char, SyntaxError> {
        let c = match self.peek() {
            Some(c) => c,
            None => return Err(self.err("expected an escape sequence")),
        };
        self.pos += 1;
        Ok(match c {
            b'n' => '\n',
            b't' => '\t',
            b'r' => '\r',
            b'b' => '\u{0008}',
            b'f' => '\u{000c}',
            b'0' => '\0',
            b'\\' => '\\',
            b'/' => '/',
            b'"' => '"',
            b'\'' => '\'',
            b'u' => return self.parse_unicode_escape(),
            other => {
                self.pos -= 1;
                return Err(self.err(format!("unknown escape `\\{}`", other as char)));
            }
        })
    }

    fn parse_unicode_escape(&mut self) -> Result<char, SyntaxError> {
        let first = self.parse_hex4()?;
        // Combine UTF-16 surrogate pairs the way JSON escapes do.
        if (0xD800..=0xDBFF).contains(&first) {
            if self.eat(b'\\') && self.eat(b'u') {
                let second = self.parse_hex4()?;
                if (0xDC00..=0xDFFF).contains(&second) {
                    let combined = 0x10000 + ((first - 0xD800) << 10) + (second - 0xDC00);
                    return char::from_u32(combined).ok_or_else(|| self.err("invalid unicode escape"));
                }
            }
            return Err(self.err("unpaired surrogate in unicode escape"));
        }
        char::from_u32(first).ok_or_else(|| self.err("invalid unicode escape"))
    }

    fn parse_hex4(&mut self) -> Result<u32, SyntaxError> {
        let mut code: u32 = 0;
        for _ in 0..4 {
            let c = match self.peek() {
                Some(c) => c,
                None => return Err(self.err("expected four hex digits in unicode escape")),
            };
            let digit = match c {
                b'0'..=b'9' => (c - b'0') as u32,
                b'a'..=b'f' => (c - b'a' + 10) as u32,
                b'A'..=b'F' => (c - b'A' + 10) as u32,
                _ => return Err(self.err("expected four hex digits in unicode escape")),
            };
            code = code * 16 + digit;
            self.pos += 1;
        }
        Ok(code)
    }
}
