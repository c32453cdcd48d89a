//! Minimal S-expression reader and writer shared by every text format.
//!
//! Atoms are bare tokens (any run of characters other than whitespace,
//! parentheses, `"` and `;`) or double-quoted strings with `\"` and `\\`
//! escapes. `;` starts a comment running to end of line.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexpr {
    Atom(String),
    List(Vec<Sexpr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at line {line}, column {column}")]
pub struct SyntaxError {
    pub message: String,
    pub line: usize,
    pub column: usize,
}

impl SyntaxError {
    pub fn new(message: impl Into<String>, pos: Pos) -> Self {
        SyntaxError { message: message.into(), line: pos.line, column: pos.column }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

/// A parsed expression together with the position it started at.
#[derive(Debug, Clone)]
pub struct Spanned {
    pub pos: Pos,
    pub node: Node,
}

#[derive(Debug, Clone)]
pub enum Node {
    Atom(String),
    List(Vec<Spanned>),
}

impl Spanned {
    pub fn to_sexpr(&self) -> Sexpr {
        match &self.node {
            Node::Atom(a) => Sexpr::Atom(a.clone()),
            Node::List(items) => Sexpr::List(items.iter().map(Spanned::to_sexpr).collect()),
        }
    }

    pub fn atom(&self) -> Option<&str> {
        match &self.node {
            Node::Atom(a) => Some(a),
            Node::List(_) => None,
        }
    }

    pub fn list(&self) -> Option<&[Spanned]> {
        match &self.node {
            Node::List(items) => Some(items),
            Node::Atom(_) => None,
        }
    }

    pub fn expect_atom(&self, what: &str) -> Result<&str, SyntaxError> {
        self.atom().ok_or_else(|| SyntaxError::new(format!("expected {what}"), self.pos))
    }

    pub fn expect_list(&self, what: &str) -> Result<&[Spanned], SyntaxError> {
        self.list().ok_or_else(|| SyntaxError::new(format!("expected {what}"), self.pos))
    }

    /// Splits `(head rest...)` into the head keyword and the remaining items.
    pub fn expect_form(&self, what: &str) -> Result<(&str, &[Spanned]), SyntaxError> {
        let items = self.expect_list(what)?;
        let head = items
            .first()
            .and_then(Spanned::atom)
            .ok_or_else(|| SyntaxError::new(format!("expected {what}"), self.pos))?;
        Ok((head, &items[1..]))
    }

    pub fn error(&self, message: impl Into<String>) -> SyntaxError {
        SyntaxError::new(message, self.pos)
    }
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl<'a> Reader<'a> {
    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.column = 1;
        } else {
            self.pos.column += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<Spanned, SyntaxError> {
        self.skip_trivia();
        let start = self.pos;
        match self.chars.peek().copied() {
            None => Err(SyntaxError::new("unexpected end of input", start)),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.chars.peek() {
                        None => return Err(SyntaxError::new("unclosed parenthesis", start)),
                        Some(')') => {
                            self.bump();
                            break;
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
                Ok(Spanned { pos: start, node: Node::List(items) })
            }
            Some(')') => Err(SyntaxError::new("unexpected ')'", start)),
            Some('"') => {
                self.bump();
                let mut text = String::new();
                loop {
                    match self.bump() {
                        None => return Err(SyntaxError::new("unterminated string", start)),
                        Some('"') => break,
                        Some('\\') => match self.bump() {
                            Some(c @ ('"' | '\\')) => text.push(c),
                            Some('n') => text.push('\n'),
                            _ => return Err(SyntaxError::new("bad escape in string", self.pos)),
                        },
                        Some(c) => text.push(c),
                    }
                }
                Ok(Spanned { pos: start, node: Node::Atom(text) })
            }
            Some(_) => {
                let mut text = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || matches!(c, '(' | ')' | '"' | ';') {
                        break;
                    }
                    text.push(c);
                    self.bump();
                }
                Ok(Spanned { pos: start, node: Node::Atom(text) })
            }
        }
    }
}

/// Parses exactly one expression; trailing non-comment input is an error.
pub fn parse(text: &str) -> Result<Spanned, SyntaxError> {
    let mut reader = Reader { chars: text.chars().peekable(), pos: Pos { line: 1, column: 1 } };
    let expr = reader.read()?;
    reader.skip_trivia();
    if reader.chars.peek().is_some() {
        return Err(SyntaxError::new("trailing input after expression", reader.pos));
    }
    Ok(expr)
}

/// Parses a sequence of expressions (used for multi-document files).
pub fn parse_many(text: &str) -> Result<Vec<Spanned>, SyntaxError> {
    let mut reader = Reader { chars: text.chars().peekable(), pos: Pos { line: 1, column: 1 } };
    let mut out = Vec::new();
    loop {
        reader.skip_trivia();
        if reader.chars.peek().is_none() {
            return Ok(out);
        }
        out.push(reader.read()?);
    }
}

fn needs_quotes(atom: &str) -> bool {
    atom.is_empty() || atom.chars().any(|c| c.is_whitespace() || matches!(c, '(' | ')' | '"' | ';' | '\\'))
}

/// Writes an atom, quoting it only when a bare token would not read back.
pub fn write_atom(out: &mut impl fmt::Write, atom: &str) -> fmt::Result {
    if !needs_quotes(atom) {
        return out.write_str(atom);
    }
    out.write_char('"')?;
    for c in atom.chars() {
        match c {
            '"' => out.write_str("\\\"")?,
            '\\' => out.write_str("\\\\")?,
            '\n' => out.write_str("\\n")?,
            c => out.write_char(c)?,
        }
    }
    out.write_char('"')
}

impl fmt::Display for Sexpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexpr::Atom(a) => write_atom(f, a),
            Sexpr::List(items) => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
        }
    }
}
