//! Minimal s-expression reader with source positions.

use std::fmt;

use super::PddlError;

/// Line/column position (both 1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sexp {
    Atom(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    pub fn pos(&self) -> Pos {
        match self {
            Sexp::Atom(_, p) | Sexp::List(_, p) => *p,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(s, _) => Some(s),
            Sexp::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(items, _) => Some(items),
            Sexp::Atom(..) => None,
        }
    }

    /// Head keyword of a list, e.g. `:action` for `(:action ...)`.
    pub fn head(&self) -> Option<&str> {
        self.as_list().and_then(|l| l.first()).and_then(Sexp::as_atom)
    }
}

/// Parse a single top-level s-expression. Comments start with `;`.
/// Symbols are case-folded to lowercase.
pub fn read(text: &str) -> Result<Sexp, PddlError> {
    let mut reader = Reader::new(text);
    reader.skip_trivia();
    let Some(_) = reader.peek() else {
        return Err(PddlError::Lex {
            pos: reader.pos(),
            msg: "empty input".into(),
        });
    };
    let sexp = reader.parse()?;
    reader.skip_trivia();
    if reader.peek().is_some() {
        return Err(PddlError::Lex {
            pos: reader.pos(),
            msg: "trailing input after top-level expression".into(),
        });
    }
    Ok(sexp)
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            chars: text.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
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

    fn parse(&mut self) -> Result<Sexp, PddlError> {
        self.skip_trivia();
        let start = self.pos();
        match self.peek() {
            None => Err(PddlError::Lex {
                pos: start,
                msg: "unexpected end of input".into(),
            }),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.peek() {
                        None => {
                            return Err(PddlError::Lex {
                                pos: start,
                                msg: "unclosed '('".into(),
                            })
                        }
                        Some(')') => {
                            self.bump();
                            return Ok(Sexp::List(items, start));
                        }
                        Some(_) => items.push(self.parse()?),
                    }
                }
            }
            Some(')') => Err(PddlError::Lex {
                pos: start,
                msg: "unexpected ')'".into(),
            }),
            Some(_) => {
                let mut sym = String::new();
                while let Some(c) = self.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    if !(c.is_ascii_alphanumeric() || "-_?:=".contains(c)) {
                        return Err(PddlError::Lex {
                            pos: self.pos(),
                            msg: format!("unexpected character {c:?}"),
                        });
                    }
                    sym.push(c.to_ascii_lowercase());
                    self.bump();
                }
                Ok(Sexp::Atom(sym, start))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_lists_with_positions() {
        let s = read("(a (b c)\n ; note\n d)").unwrap();
        let items = s.as_list().unwrap();
        assert_eq!(items.len(), 3);
        assert_eq!(items[1].head(), Some("b"));
        assert_eq!(items[2].pos(), Pos { line: 3, col: 2 });
    }

    #[test]
    fn unclosed_paren_reports_opening_position() {
        let err = read("\n  (a (b)").unwrap_err();
        match err {
            PddlError::Lex { pos, .. } => assert_eq!(pos, Pos { line: 2, col: 3 }),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_stray_characters() {
        assert!(read("(a \"b\")").is_err());
        assert!(read("(a) (b)").is_err());
    }
}
