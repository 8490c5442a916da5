//! Lexer for `.tcbc` source text.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Trait,
    Class,
    Interface,
    Implements,
    Abstract,
    MakeAbstract,
    If,
    Elseif,
    Else,
    New,
    Forall,
    Exists,
    True,
    False,
    AtPre,
    AtPost,
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    Dot,
    Plus,
    Minus,
    Star,
    Bang,
    Amp,
    Pipe,
    Assign,
    EqEq,
    Ne,
    Le,
    Ge,
    Lt,
    Gt,
    Arrow,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(name) => return write!(f, "identifier `{name}`"),
            Tok::Int(n) => return write!(f, "integer `{n}`"),
            Tok::Trait => "trait",
            Tok::Class => "class",
            Tok::Interface => "interface",
            Tok::Implements => "implements",
            Tok::Abstract => "abstract",
            Tok::MakeAbstract => "makeAbstract",
            Tok::If => "if",
            Tok::Elseif => "elseif",
            Tok::Else => "else",
            Tok::New => "new",
            Tok::Forall => "forall",
            Tok::Exists => "exists",
            Tok::True => "true",
            Tok::False => "false",
            Tok::AtPre => "@Pre",
            Tok::AtPost => "@Post",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Dot => ".",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Bang => "!",
            Tok::Amp => "&",
            Tok::Pipe => "|",
            Tok::Assign => "=",
            Tok::EqEq => "==",
            Tok::Ne => "!=",
            Tok::Le => "<=",
            Tok::Ge => ">=",
            Tok::Lt => "<",
            Tok::Gt => ">",
            Tok::Arrow => "==>",
            Tok::Eof => "end of input",
        };
        write!(f, "`{s}`")
    }
}

/// A token with its 1-based source position.
#[derive(Debug, Clone)]
pub struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

/// Parse failure with position and the tokens that would have been accepted.
#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
#[error("parse error at {line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
    pub expected: Vec<String>,
}

pub fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let bytes: Vec<char> = src.chars().collect();
    let mut i = 0usize;

    let err = |line: usize, col: usize, message: String| ParseError {
        line,
        col,
        message,
        expected: Vec::new(),
    };

    while i < bytes.len() {
        let c = bytes[i];
        let (tline, tcol) = (line, col);
        let mut push = |tok: Tok| {
            out.push(Spanned {
                tok,
                line: tline,
                col: tcol,
            })
        };
        match c {
            '\n' => {
                line += 1;
                col = 1;
                i += 1;
            }
            c if c.is_whitespace() => {
                col += 1;
                i += 1;
            }
            '/' if bytes.get(i + 1) == Some(&'/') => {
                while i < bytes.len() && bytes[i] != '\n' {
                    i += 1;
                }
            }
            '@' => {
                let mut j = i + 1;
                let mut word = String::new();
                while j < bytes.len() && bytes[j].is_ascii_alphanumeric() {
                    word.push(bytes[j]);
                    j += 1;
                }
                match word.as_str() {
                    "Pre" => push(Tok::AtPre),
                    "Post" => push(Tok::AtPost),
                    other => {
                        return Err(err(
                            line,
                            col,
                            format!("unknown annotation `@{other}` (expected @Pre or @Post)"),
                        ))
                    }
                }
                col += j - i;
                i = j;
            }
            '{' => {
                push(Tok::LBrace);
                i += 1;
                col += 1;
            }
            '}' => {
                push(Tok::RBrace);
                i += 1;
                col += 1;
            }
            '(' => {
                push(Tok::LParen);
                i += 1;
                col += 1;
            }
            ')' => {
                push(Tok::RParen);
                i += 1;
                col += 1;
            }
            '[' => {
                push(Tok::LBracket);
                i += 1;
                col += 1;
            }
            ']' => {
                push(Tok::RBracket);
                i += 1;
                col += 1;
            }
            ',' => {
                push(Tok::Comma);
                i += 1;
                col += 1;
            }
            ';' => {
                push(Tok::Semi);
                i += 1;
                col += 1;
            }
            ':' => {
                push(Tok::Colon);
                i += 1;
                col += 1;
            }
            '.' => {
                push(Tok::Dot);
                i += 1;
                col += 1;
            }
            '+' => {
                push(Tok::Plus);
                i += 1;
                col += 1;
            }
            '-' => {
                push(Tok::Minus);
                i += 1;
                col += 1;
            }
            '*' => {
                push(Tok::Star);
                i += 1;
                col += 1;
            }
            '&' => {
                push(Tok::Amp);
                i += 1;
                col += 1;
            }
            '|' => {
                push(Tok::Pipe);
                i += 1;
                col += 1;
            }
            '!' => {
                if bytes.get(i + 1) == Some(&'=') {
                    push(Tok::Ne);
                    i += 2;
                    col += 2;
                } else {
                    push(Tok::Bang);
                    i += 1;
                    col += 1;
                }
            }
            '=' => {
                if bytes.get(i + 1) == Some(&'=') && bytes.get(i + 2) == Some(&'>') {
                    push(Tok::Arrow);
                    i += 3;
                    col += 3;
                } else if bytes.get(i + 1) == Some(&'=') {
                    push(Tok::EqEq);
                    i += 2;
                    col += 2;
                } else {
                    push(Tok::Assign);
                    i += 1;
                    col += 1;
                }
            }
            '<' => {
                if bytes.get(i + 1) == Some(&'=') {
                    push(Tok::Le);
                    i += 2;
                    col += 2;
                } else {
                    push(Tok::Lt);
                    i += 1;
                    col += 1;
                }
            }
            '>' => {
                if bytes.get(i + 1) == Some(&'=') {
                    push(Tok::Ge);
                    i += 2;
                    col += 2;
                } else {
                    push(Tok::Gt);
                    i += 1;
                    col += 1;
                }
            }
            c if c.is_ascii_digit() => {
                let mut j = i;
                let mut word = String::new();
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    word.push(bytes[j]);
                    j += 1;
                }
                let n: i64 = word
                    .parse()
                    .map_err(|_| err(line, col, format!("integer literal out of range: {word}")))?;
                push(Tok::Int(n));
                col += j - i;
                i = j;
            }
            c if c.is_ascii_alphabetic() => {
                let mut j = i;
                let mut word = String::new();
                while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == '_') {
                    word.push(bytes[j]);
                    j += 1;
                }
                let tok = match word.as_str() {
                    "trait" => Tok::Trait,
                    "class" => Tok::Class,
                    "interface" => Tok::Interface,
                    "implements" => Tok::Implements,
                    "abstract" => Tok::Abstract,
                    "makeAbstract" => Tok::MakeAbstract,
                    "if" => Tok::If,
                    "elseif" => Tok::Elseif,
                    "else" => Tok::Else,
                    "new" => Tok::New,
                    "forall" => Tok::Forall,
                    "exists" => Tok::Exists,
                    "true" => Tok::True,
                    "false" => Tok::False,
                    _ => Tok::Ident(word),
                };
                push(tok);
                col += j - i;
                i = j;
            }
            '_' => {
                // Leading underscores are reserved for verifier-issued names.
                return Err(err(
                    line,
                    col,
                    "identifiers may not start with `_` (reserved)".to_string(),
                ));
            }
            other => {
                return Err(err(line, col, format!("unexpected character `{other}`")));
            }
        }
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}
