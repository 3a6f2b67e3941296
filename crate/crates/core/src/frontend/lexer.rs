//! Python tokenizer with INDENT/DEDENT synthesis and implicit line joining.

use super::ast::Span;
use super::SyntaxError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Name(String),
    Number(String),
    /// A string literal; `raw` is the full literal text including prefix and quotes.
    Str {
        raw: String,
    },
    Op(&'static str),
    Newline,
    Indent,
    Dedent,
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

const OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "!=", "%=", "&=", "**", "*=", "+=", "-=", "->", "//",
    "/=", ":=", "<<", "<=", "==", ">=", ">>", "@=", "^=", "|=", "!", "%", "&", "(", ")", "*",
    "+", ",", "-", ".", "/", ":", ";", "<", "=", ">", "@", "[", "]", "^", "{", "|", "}", "~",
];

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: u32,
    line_start: usize,
    tokens: Vec<Token>,
    indents: Vec<u32>,
    brackets: Vec<(u8, Span)>,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut lx = Lexer {
        src,
        bytes: src.as_bytes(),
        pos: 0,
        line: 1,
        line_start: 0,
        tokens: Vec::new(),
        indents: vec![0],
        brackets: Vec::new(),
    };
    lx.run()?;
    Ok(lx.tokens)
}

impl<'a> Lexer<'a> {
    fn col_of(&self, pos: usize) -> u32 {
        self.src[self.line_start..pos].chars().count() as u32
    }

    fn span(&self, start: usize, start_line: u32, start_col: u32) -> Span {
        Span {
            line: start_line,
            col: start_col,
            end_line: self.line,
            end_col: self.col_of(self.pos),
            start,
            end: self.pos,
        }
    }

    fn err(&self, msg: impl Into<String>) -> SyntaxError {
        SyntaxError {
            line: self.line,
            col: self.col_of(self.pos.min(self.src.len())),
            message: msg.into(),
        }
    }

    fn push(&mut self, tok: Tok, start: usize, line: u32, col: u32) {
        let span = self.span(start, line, col);
        self.tokens.push(Token { tok, span });
    }

    fn peek(&self, off: usize) -> Option<u8> {
        self.bytes.get(self.pos + off).copied()
    }

    fn newline(&mut self) {
        self.line += 1;
        self.line_start = self.pos;
    }

    fn run(&mut self) -> Result<(), SyntaxError> {
        let mut at_line_start = true;
        while self.pos < self.bytes.len() {
            if at_line_start && self.brackets.is_empty() {
                at_line_start = false;
                if self.handle_indentation()? {
                    at_line_start = true;
                    continue;
                }
            }
            let c = self.bytes[self.pos];
            match c {
                b' ' | b'\t' | b'\x0c' => self.pos += 1,
                b'\r' => self.pos += 1,
                b'\n' => {
                    let (start, line, col) = (self.pos, self.line, self.col_of(self.pos));
                    self.pos += 1;
                    if self.brackets.is_empty() {
                        let span = Span {
                            line,
                            col,
                            end_line: line,
                            end_col: col + 1,
                            start,
                            end: self.pos,
                        };
                        self.tokens.push(Token {
                            tok: Tok::Newline,
                            span,
                        });
                        at_line_start = true;
                    }
                    self.newline();
                }
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b'\\' => {
                    // explicit line continuation
                    let mut p = self.pos + 1;
                    if self.bytes.get(p) == Some(&b'\r') {
                        p += 1;
                    }
                    if self.bytes.get(p) == Some(&b'\n') {
                        self.pos = p + 1;
                        self.newline();
                    } else {
                        return Err(self.err("unexpected character after line continuation"));
                    }
                }
                b'0'..=b'9' => self.number()?,
                b'.' if matches!(self.peek(1), Some(b'0'..=b'9')) => self.number()?,
                b'"' | b'\'' => self.string(self.pos)?,
                _ if is_ident_start(self.src[self.pos..].chars().next().unwrap()) => {
                    self.name_or_string()?
                }
                _ => self.operator()?,
            }
        }
        if let Some(&(open, span)) = self.brackets.last() {
            return Err(SyntaxError {
                line: span.line,
                col: span.col,
                message: format!("'{}' was never closed", open as char),
            });
        }
        let end = self.src.len();
        let (line, col) = (self.line, self.col_of(end));
        if !matches!(
            self.tokens.last().map(|t| &t.tok),
            None | Some(Tok::Newline)
        ) {
            self.push(Tok::Newline, end, line, col);
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.push(Tok::Dedent, end, line, col);
        }
        self.push(Tok::Eof, end, line, col);
        Ok(())
    }

    /// Measures leading whitespace; returns true when the line is blank or a comment.
    fn handle_indentation(&mut self) -> Result<bool, SyntaxError> {
        let mut width = 0u32;
        let mut p = self.pos;
        while p < self.bytes.len() {
            match self.bytes[p] {
                b' ' => width += 1,
                b'\t' => width = (width / 8 + 1) * 8,
                b'\x0c' => width = 0,
                _ => break,
            }
            p += 1;
        }
        match self.bytes.get(p) {
            None => {
                self.pos = p;
                return Ok(true);
            }
            Some(b'#') => {
                while p < self.bytes.len() && self.bytes[p] != b'\n' {
                    p += 1;
                }
                self.pos = p;
                if p < self.bytes.len() {
                    self.pos += 1;
                    self.newline();
                }
                return Ok(true);
            }
            Some(b'\n') | Some(b'\r') => {
                while p < self.bytes.len() && self.bytes[p] != b'\n' {
                    p += 1;
                }
                self.pos = p;
                if p < self.bytes.len() {
                    self.pos += 1;
                    self.newline();
                }
                return Ok(true);
            }
            _ => {}
        }
        self.pos = p;
        let current = *self.indents.last().unwrap();
        let col = self.col_of(p);
        if width > current {
            self.indents.push(width);
            self.push(Tok::Indent, p, self.line, col);
        } else if width < current {
            while *self.indents.last().unwrap() > width {
                self.indents.pop();
                self.push(Tok::Dedent, p, self.line, col);
            }
            if *self.indents.last().unwrap() != width {
                return Err(self.err("unindent does not match any outer indentation level"));
            }
        }
        Ok(false)
    }

    fn number(&mut self) -> Result<(), SyntaxError> {
        let (start, line, col) = (self.pos, self.line, self.col_of(self.pos));
        let b = self.bytes;
        if b[self.pos] == b'0' && matches!(self.peek(1), Some(b'x' | b'X' | b'o' | b'O' | b'b' | b'B')) {
            self.pos += 2;
            while self.pos < b.len() && (b[self.pos].is_ascii_hexdigit() || b[self.pos] == b'_') {
                self.pos += 1;
            }
        } else {
            while self.pos < b.len() && (b[self.pos].is_ascii_digit() || b[self.pos] == b'_') {
                self.pos += 1;
            }
            if self.pos < b.len() && b[self.pos] == b'.' {
                self.pos += 1;
                while self.pos < b.len() && (b[self.pos].is_ascii_digit() || b[self.pos] == b'_') {
                    self.pos += 1;
                }
            }
            if self.pos < b.len() && (b[self.pos] == b'e' || b[self.pos] == b'E') {
                let mut p = self.pos + 1;
                if p < b.len() && (b[p] == b'+' || b[p] == b'-') {
                    p += 1;
                }
                if p < b.len() && b[p].is_ascii_digit() {
                    self.pos = p;
                    while self.pos < b.len() && (b[self.pos].is_ascii_digit() || b[self.pos] == b'_') {
                        self.pos += 1;
                    }
                }
            }
            if self.pos < b.len() && (b[self.pos] == b'j' || b[self.pos] == b'J') {
                self.pos += 1;
            }
        }
        let text = self.src[start..self.pos].to_string();
        self.push(Tok::Number(text), start, line, col);
        Ok(())
    }

    fn name_or_string(&mut self) -> Result<(), SyntaxError> {
        let start = self.pos;
        // string prefixes
        let mut p = self.pos;
        while p < self.bytes.len() && p - start < 2 && matches!(self.bytes[p].to_ascii_lowercase(), b'r' | b'b' | b'u' | b'f') {
            p += 1;
        }
        if p > start && matches!(self.bytes.get(p), Some(b'"' | b'\'')) {
            let prefix = self.src[start..p].to_ascii_lowercase();
            if matches!(prefix.as_str(), "r" | "b" | "u" | "f" | "rb" | "br" | "fr" | "rf") {
                return self.string(start);
            }
        }
        let (line, col) = (self.line, self.col_of(start));
        let rest = &self.src[self.pos..];
        let len: usize = rest
            .char_indices()
            .find(|&(_, ch)| !is_ident_continue(ch))
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        self.pos += len;
        let text = self.src[start..self.pos].to_string();
        self.push(Tok::Name(text), start, line, col);
        Ok(())
    }

    /// Scans a string literal whose prefix starts at `start` (quote at `self.pos` or after prefix).
    fn string(&mut self, start: usize) -> Result<(), SyntaxError> {
        let (line, col) = (self.line, self.col_of(start));
        let mut p = start;
        while !matches!(self.bytes[p], b'"' | b'\'') {
            p += 1;
        }
        let raw = self.src[start..p].to_ascii_lowercase().contains('r');
        let quote = self.bytes[p];
        let triple = self.bytes.get(p + 1) == Some(&quote) && self.bytes.get(p + 2) == Some(&quote);
        self.pos = p + if triple { 3 } else { 1 };
        loop {
            let Some(&c) = self.bytes.get(self.pos) else {
                return Err(SyntaxError {
                    line,
                    col,
                    message: "unterminated string literal".into(),
                });
            };
            if c == b'\\' && (!raw || self.bytes.get(self.pos + 1).is_some()) {
                if self.bytes.get(self.pos + 1) == Some(&b'\n') {
                    self.pos += 2;
                    self.newline();
                    continue;
                }
                self.pos += 2;
                continue;
            }
            if c == b'\n' {
                if !triple {
                    return Err(SyntaxError {
                        line,
                        col,
                        message: "unterminated string literal".into(),
                    });
                }
                self.pos += 1;
                self.newline();
                continue;
            }
            if c == quote {
                if triple {
                    if self.bytes.get(self.pos + 1) == Some(&quote)
                        && self.bytes.get(self.pos + 2) == Some(&quote)
                    {
                        self.pos += 3;
                        break;
                    }
                } else {
                    self.pos += 1;
                    break;
                }
            }
            self.pos += 1;
        }
        let raw_text = self.src[start..self.pos].to_string();
        self.push(Tok::Str { raw: raw_text }, start, line, col);
        Ok(())
    }

    fn operator(&mut self) -> Result<(), SyntaxError> {
        let (start, line, col) = (self.pos, self.line, self.col_of(self.pos));
        let rest = &self.src[self.pos..];
        let Some(op) = OPERATORS.iter().find(|op| rest.starts_with(**op)) else {
            let ch = rest.chars().next().unwrap();
            return Err(self.err(format!("invalid character '{ch}'")));
        };
        self.pos += op.len();
        let span = self.span(start, line, col);
        match *op {
            "(" | "[" | "{" => self.brackets.push((op.as_bytes()[0], span)),
            ")" | "]" | "}" => {
                let expected = match *op {
                    ")" => b'(',
                    "]" => b'[',
                    _ => b'{',
                };
                match self.brackets.pop() {
                    Some((open, _)) if open == expected => {}
                    _ => return Err(self.err(format!("unmatched '{op}'"))),
                }
            }
            _ => {}
        }
        self.tokens.push(Token {
            tok: Tok::Op(op),
            span,
        });
        Ok(())
    }
}

fn is_ident_start(c: char) -> bool {
    c == '_' || c.is_alphabetic()
}

fn is_ident_continue(c: char) -> bool {
    c == '_' || c.is_alphanumeric()
}
