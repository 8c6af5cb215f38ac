//! Minimal S-expression reader and printer.
//!
//! Covers the subset of SMT-LIB surface syntax this crate emits and reads
//! back: plain atoms, `|`-quoted symbols, string literals, `;` comments.
//! Atoms keep their raw spelling (quoting included) so that printing a
//! parsed tree reproduces the input bytes.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SexpError {
    #[error("line {line}: unexpected end of input inside a list")]
    UnexpectedEof { line: usize },
    #[error("line {line}: unmatched `)`")]
    UnmatchedClose { line: usize },
    #[error("line {line}: unterminated {what}")]
    Unterminated { line: usize, what: &'static str },
}

impl Sexp {
    pub fn atom(s: impl Into<String>) -> Self {
        Sexp::Atom(s.into())
    }

    pub fn list(items: impl Into<Vec<Sexp>>) -> Self {
        Sexp::List(items.into())
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(s) => Some(s),
            Sexp::List(_) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::Atom(_) => None,
            Sexp::List(items) => Some(items),
        }
    }

    /// Atom content with `|` symbol quoting stripped.
    pub fn symbol(&self) -> Option<&str> {
        let raw = self.as_atom()?;
        if raw.len() >= 2 && raw.starts_with('|') && raw.ends_with('|') {
            Some(&raw[1..raw.len() - 1])
        } else {
            Some(raw)
        }
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(s) => f.write_str(s),
            Sexp::List(items) => {
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

/// Parses a whole input into the sequence of top-level S-expressions.
pub fn parse_all(text: &str) -> Result<Vec<Sexp>, SexpError> {
    let mut parser = Parser::new(text);
    let mut out = Vec::new();
    while let Some(sexp) = parser.next_sexp()? {
        out.push(sexp);
    }
    Ok(out)
}

struct Parser<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser { chars: text.chars().peekable(), line: 1 }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next();
        if c == Some('\n') {
            self.line += 1;
        }
        c
    }

    fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(&c) = self.chars.peek() {
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

    fn next_sexp(&mut self) -> Result<Option<Sexp>, SexpError> {
        self.skip_trivia();
        match self.chars.peek() {
            None => Ok(None),
            Some(')') => Err(SexpError::UnmatchedClose { line: self.line }),
            Some(_) => self.parse_one().map(Some),
        }
    }

    fn parse_one(&mut self) -> Result<Sexp, SexpError> {
        self.skip_trivia();
        match self.chars.peek() {
            None => Err(SexpError::UnexpectedEof { line: self.line }),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.chars.peek() {
                        None => return Err(SexpError::UnexpectedEof { line: self.line }),
                        Some(')') => {
                            self.bump();
                            return Ok(Sexp::List(items));
                        }
                        Some(_) => items.push(self.parse_one()?),
                    }
                }
            }
            Some(')') => Err(SexpError::UnmatchedClose { line: self.line }),
            Some('|') => self.quoted('|', "quoted symbol"),
            Some('"') => self.quoted('"', "string literal"),
            Some(_) => {
                let mut atom = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    atom.push(c);
                    self.bump();
                }
                Ok(Sexp::Atom(atom))
            }
        }
    }

    fn quoted(&mut self, delim: char, what: &'static str) -> Result<Sexp, SexpError> {
        let start = self.line;
        let mut atom = String::new();
        atom.push(self.bump().expect("peeked"));
        loop {
            match self.bump() {
                None => return Err(SexpError::Unterminated { line: start, what }),
                Some(c) => {
                    atom.push(c);
                    if c == delim {
                        return Ok(Sexp::Atom(atom));
                    }
                }
            }
        }
    }
}

/// Quotes `name` with `|...|` unless it is a simple SMT-LIB symbol.
pub fn fmt_symbol(name: &str) -> String {
    let simple = !name.is_empty()
        && !name.starts_with(|c: char| c.is_ascii_digit())
        && name.chars().all(|c| c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c));
    if simple {
        name.to_string()
    } else {
        format!("|{name}|")
    }
}
