use super::{Alphabet, Formula, LtlError};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Not,
    And,
    Or,
    Next,
    Until,
    Finally,
    Globally,
    LParen,
    RParen,
    True,
    False,
    Ident(String),
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, LtlError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'!' => Tok::Not,
            b'&' => Tok::And,
            b'|' => Tok::Or,
            b'X' => Tok::Next,
            b'U' => Tok::Until,
            b'F' => Tok::Finally,
            b'G' => Tok::Globally,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'a'..=b'z' | b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_lowercase() || bytes[i].is_ascii_digit() || bytes[i] == b'_')
                {
                    i += 1;
                }
                let word = &text[start..i];
                let tok = match word {
                    "true" => Tok::True,
                    "false" => Tok::False,
                    _ => Tok::Ident(word.to_string()),
                };
                out.push((start, tok));
                continue;
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(LtlError::Syntax { offset: i, message: format!("unexpected character `{ch}`") });
            }
        };
        out.push((i, tok));
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    alphabet: Option<&'a Alphabet>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(o, _)| *o).unwrap_or(self.end)
    }

    fn err(&self, message: impl Into<String>) -> LtlError {
        LtlError::Syntax { offset: self.offset(), message: message.into() }
    }

    fn or(&mut self) -> Result<Formula, LtlError> {
        let mut lhs = self.and()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            let rhs = self.and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, LtlError> {
        let mut lhs = self.until()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            let rhs = self.until()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Formula, LtlError> {
        let lhs = self.unary()?;
        if self.peek() == Some(&Tok::Until) {
            self.pos += 1;
            let rhs = self.until()?;
            return Ok(Formula::until(lhs, rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, LtlError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.err("unexpected end of input"));
        };
        let offset = self.offset();
        self.pos += 1;
        match tok {
            Tok::Not => Ok(Formula::not(self.unary()?)),
            Tok::Next => Ok(Formula::next(self.unary()?)),
            Tok::Finally => Ok(Formula::finally(self.unary()?)),
            Tok::Globally => Ok(Formula::globally(self.unary()?)),
            Tok::True => Ok(Formula::True),
            Tok::False => Ok(Formula::False),
            Tok::Ident(name) => {
                if let Some(ab) = self.alphabet {
                    if !ab.contains(&name) {
                        return Err(LtlError::UnknownAtom(name));
                    }
                }
                Ok(Formula::Atom(name))
            }
            Tok::LParen => {
                let inner = self.or()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Tok::RParen | Tok::And | Tok::Or | Tok::Until => {
                self.pos -= 1;
                Err(LtlError::Syntax { offset, message: "expected a formula".into() })
            }
        }
    }
}

fn parse_with(text: &str, alphabet: Option<&Alphabet>) -> Result<Formula, LtlError> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(LtlError::Syntax { offset: 0, message: "empty formula".into() });
    }
    let mut p = Parser { toks, pos: 0, end: text.len(), alphabet };
    let f = p.or()?;
    if p.pos != p.toks.len() {
        return Err(p.err("trailing input"));
    }
    Ok(f)
}

/// Parse `text`, requiring every atom to belong to `alphabet`.
pub fn parse(text: &str, alphabet: &Alphabet) -> Result<Formula, LtlError> {
    parse_with(text, Some(alphabet))
}

impl Formula {
    /// Parse without an alphabet check.
    pub fn parse_unchecked(text: &str) -> Result<Formula, LtlError> {
        parse_with(text, None)
    }
}

impl std::str::FromStr for Formula {
    type Err = LtlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Formula::parse_unchecked(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abc() -> Alphabet {
        Alphabet::new(["a", "b", "c"]).unwrap()
    }

    fn a() -> Formula {
        Formula::atom("a")
    }
    fn b() -> Formula {
        Formula::atom("b")
    }
    fn c() -> Formula {
        Formula::atom("c")
    }

    #[test]
    fn reach_avoid_formula() {
        let f = parse("F a & G !b", &abc()).unwrap();
        assert_eq!(f, Formula::and(Formula::finally(a()), Formula::globally(Formula::not(b()))));
    }

    #[test]
    fn single_atom() {
        assert_eq!(parse("a", &abc()).unwrap(), a());
    }

    #[test]
    fn t0_formula() {
        let f = parse("(GF(a & XFc)) & (G !b)", &abc()).unwrap();
        let left = Formula::globally(Formula::finally(Formula::and(a(), Formula::next(Formula::finally(c())))));
        let right = Formula::globally(Formula::not(b()));
        assert_eq!(f, Formula::and(left, right));
    }

    #[test]
    fn precedence() {
        let ab = abc();
        assert_eq!(parse("a | b & c", &ab).unwrap(), Formula::or(a(), Formula::and(b(), c())));
        assert_eq!(parse("a & b U c", &ab).unwrap(), Formula::and(a(), Formula::until(b(), c())));
        assert_eq!(parse("a U b U c", &ab).unwrap(), Formula::until(a(), Formula::until(b(), c())));
        assert_eq!(parse("!a U b", &ab).unwrap(), Formula::until(Formula::not(a()), b()));
        assert_eq!(parse("a & b & c", &ab).unwrap(), Formula::and(Formula::and(a(), b()), c()));
    }

    #[test]
    fn juxtaposed_unaries() {
        let ab = abc();
        assert_eq!(parse("GF a", &ab).unwrap(), Formula::globally(Formula::finally(a())));
        assert_eq!(parse("GFa", &ab).unwrap(), parse("G F a", &ab).unwrap());
        assert_eq!(parse("FGa", &ab).unwrap(), Formula::finally(Formula::globally(a())));
    }

    #[test]
    fn errors_carry_offsets() {
        let ab = abc();
        assert_eq!(parse("a & ", &ab), Err(LtlError::Syntax { offset: 4, message: "unexpected end of input".into() }));
        match parse("a # b", &ab) {
            Err(LtlError::Syntax { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("{other:?}"),
        }
        match parse("(a & b", &ab) {
            Err(LtlError::Syntax { offset, .. }) => assert_eq!(offset, 6),
            other => panic!("{other:?}"),
        }
        match parse("a b", &ab) {
            Err(LtlError::Syntax { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("", &ab), Err(LtlError::Syntax { offset: 0, .. })));
        assert!(matches!(parse("  ", &ab), Err(LtlError::Syntax { offset: 0, .. })));
    }

    #[test]
    fn unknown_atom() {
        assert_eq!(parse("F z", &abc()), Err(LtlError::UnknownAtom("z".into())));
    }

    #[test]
    fn print_round_trip() {
        let ab = abc();
        for text in [
            "F a & G !b",
            "(GF(a & XFc)) & (G !b)",
            "a U (b U c)",
            "(a U b) U c",
            "!(a | b) & X(c | true)",
            "(a | b) & c",
            "a | b & c",
            "G(a | b)",
        ] {
            let f = parse(text, &ab).unwrap();
            let printed = f.to_string();
            assert_eq!(parse(&printed, &ab).unwrap(), f, "{text} printed as {printed}");
        }
    }
}
