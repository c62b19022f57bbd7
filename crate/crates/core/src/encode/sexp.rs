//! Minimal SMT-LIB 2 s-expression reader.

use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    /// `|...|` symbol, stored without the bars.
    Quoted(String),
    Str(String),
    List(Vec<Sexp>),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("s-expression error at byte {pos}: {msg}")]
pub struct SexpError {
    pub pos: usize,
    pub msg: String,
}

impl Sexp {
    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(v) => Some(v),
            _ => None,
        }
    }

    /// Symbol name, quoted or not.
    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            Sexp::Atom(s) | Sexp::Quoted(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_atom(&self, a: &str) -> bool {
        matches!(self, Sexp::Atom(s) if s == a)
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(s) => f.write_str(s),
            Sexp::Quoted(s) => write!(f, "|{s}|"),
            Sexp::Str(s) => write!(f, "\"{}\"", s.replace('"', "\"\"")),
            Sexp::List(v) => {
                f.write_str("(")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
        }
    }
}

struct Reader<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn err<T>(&self, msg: &str) -> Result<T, SexpError> {
        Err(SexpError { pos: self.pos, msg: msg.to_string() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() {
            match self.src[self.pos] {
                b';' => {
                    while self.pos < self.src.len() && self.src[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn text(&self, from: usize, to: usize) -> String {
        String::from_utf8_lossy(&self.src[from..to]).into_owned()
    }

    fn read(&mut self) -> Result<Sexp, SexpError> {
        self.skip_ws();
        let Some(&c) = self.src.get(self.pos) else { return self.err("unexpected end of input") };
        match c {
            b'(' => {
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.src.get(self.pos) {
                        None => return self.err("unclosed list"),
                        Some(b')') => {
                            self.pos += 1;
                            return Ok(Sexp::List(items));
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            b')' => self.err("unexpected `)`"),
            b'|' => {
                let start = self.pos + 1;
                let Some(len) = self.src[start..].iter().position(|&b| b == b'|') else {
                    return self.err("unterminated quoted symbol");
                };
                self.pos = start + len + 1;
                Ok(Sexp::Quoted(self.text(start, start + len)))
            }
            b'"' => {
                let mut out = String::new();
                self.pos += 1;
                loop {
                    let Some(&b) = self.src.get(self.pos) else { return self.err("unterminated string") };
                    self.pos += 1;
                    if b == b'"' {
                        if self.src.get(self.pos) == Some(&b'"') {
                            out.push('"');
                            self.pos += 1;
                        } else {
                            return Ok(Sexp::Str(out));
                        }
                    } else {
                        out.push(b as char);
                    }
                }
            }
            _ => {
                let start = self.pos;
                while self.pos < self.src.len() {
                    let b = self.src[self.pos];
                    if b.is_ascii_whitespace() || matches!(b, b'(' | b')' | b'|' | b'"' | b';') {
                        break;
                    }
                    self.pos += 1;
                }
                Ok(Sexp::Atom(self.text(start, self.pos)))
            }
        }
    }
}

/// Parse one expression; trailing input is an error.
pub fn parse(src: &str) -> Result<Sexp, SexpError> {
    let mut all = parse_all(src)?;
    match all.len() {
        1 => Ok(all.pop().unwrap()),
        0 => Err(SexpError { pos: 0, msg: "empty input".into() }),
        _ => Err(SexpError { pos: 0, msg: "more than one expression".into() }),
    }
}

pub fn parse_all(src: &str) -> Result<Vec<Sexp>, SexpError> {
    let mut r = Reader { src: src.as_bytes(), pos: 0 };
    let mut out = Vec::new();
    loop {
        r.skip_ws();
        if r.pos >= r.src.len() {
            return Ok(out);
        }
        out.push(r.read()?);
    }
}

/// Value of a constant term: `#b..`, `#x..`, `(_ bvN w)`, numerals, `(- n)`,
/// `true`/`false`. Bit-vectors are returned as unsigned bit patterns.
pub fn constant_value(e: &Sexp) -> Option<i128> {
    match e {
        Sexp::Atom(a) => {
            if let Some(b) = a.strip_prefix("#b") {
                u128::from_str_radix(b, 2).ok().map(|v| v as i128)
            } else if let Some(h) = a.strip_prefix("#x") {
                u128::from_str_radix(h, 16).ok().map(|v| v as i128)
            } else if a == "true" {
                Some(1)
            } else if a == "false" {
                Some(0)
            } else {
                a.parse::<i128>().ok()
            }
        }
        Sexp::List(v) => match v.as_slice() {
            [m, x] if m.is_atom("-") => constant_value(x).map(|n| -n),
            [u, bv, _w] if u.is_atom("_") => bv.as_symbol()?.strip_prefix("bv")?.parse().ok(),
            _ => None,
        },
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let src = "(assert (=> |main::c#0| (bvult |main::x#1| (_ bv4 32))))";
        let e = parse(src).unwrap();
        assert_eq!(e.to_string(), src);
    }

    #[test]
    fn comments_and_strings() {
        let all = parse_all("; hi\n(echo \"a\"\"b\") x").unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].as_list().unwrap()[1], Sexp::Str("a\"b".into()));
    }

    #[test]
    fn constants() {
        for (s, v) in [("#b1010", 10), ("#xff", 255), ("(_ bv7 8)", 7), ("(- 3)", -3), ("true", 1), ("12", 12)] {
            assert_eq!(constant_value(&parse(s).unwrap()), Some(v), "{s}");
        }
    }

    #[test]
    fn errors() {
        assert!(parse("(a b").is_err());
        assert!(parse(")").is_err());
        assert!(parse("|abc").is_err());
    }
}
