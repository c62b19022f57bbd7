use super::ast::Span;
use super::{Diagnostic, DiagnosticKind};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(u64),
    Punct(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

// Longest first so that maximal munch works with a linear scan.
const PUNCTS: &[&str] = &[
    "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+", "-", "*", "/", "%", "&", "|", "^", "~", "!", "<", ">", "=", "(", ")", "{", "}",
    "[", "]", ";", ",",
];

pub fn lex(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

    macro_rules! bump {
        () => {{
            if bytes[i] == b'\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            bump!();
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                bump!();
            }
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'*') {
            let start = Span::new(line, col);
            bump!();
            bump!();
            loop {
                if i >= bytes.len() {
                    return Err(Diagnostic::new(DiagnosticKind::Lex, start, "unterminated block comment"));
                }
                if bytes[i] == b'*' && bytes.get(i + 1) == Some(&b'/') {
                    bump!();
                    bump!();
                    break;
                }
                bump!();
            }
            continue;
        }
        let span = Span::new(line, col);
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                bump!();
            }
            out.push(Token { tok: Tok::Ident(src[start..i].to_string()), span });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            let hex = c == b'0' && matches!(bytes.get(i + 1), Some(b'x') | Some(b'X'));
            if hex {
                bump!();
                bump!();
            }
            while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                bump!();
            }
            let text = &src[start..i];
            let parsed = if hex { u64::from_str_radix(&text[2..], 16) } else { text.parse::<u64>() };
            match parsed {
                Ok(v) if v <= u32::MAX as u64 => out.push(Token { tok: Tok::Int(v), span }),
                Ok(_) => return Err(Diagnostic::new(DiagnosticKind::Lex, span, format!("integer literal `{text}` exceeds 32 bits"))),
                Err(_) => return Err(Diagnostic::new(DiagnosticKind::Lex, span, format!("malformed integer literal `{text}`"))),
            }
            continue;
        }
        let rest = &src[i..];
        match PUNCTS.iter().find(|p| rest.starts_with(**p)) {
            Some(p) => {
                for _ in 0..p.len() {
                    bump!();
                }
                out.push(Token { tok: Tok::Punct(p), span });
            }
            None => {
                let ch = rest.chars().next().unwrap_or('?');
                return Err(Diagnostic::new(DiagnosticKind::Lex, span, format!("unexpected character `{ch}`")));
            }
        }
    }
    out.push(Token { tok: Tok::Eof, span: Span::new(line, col) });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn comments_and_hex() {
        assert_eq!(
            toks("x /* a\n b */ <<= 0x1F // tail"),
            vec![Tok::Ident("x".into()), Tok::Punct("<<"), Tok::Punct("="), Tok::Int(31), Tok::Eof]
        );
    }

    #[test]
    fn spans_track_lines() {
        let t = lex("a\n  b").unwrap();
        assert_eq!(t[1].span, Span::new(2, 3));
    }

    #[test]
    fn errors() {
        assert!(lex("/* open").is_err());
        assert!(lex("x @ y").is_err());
        assert!(lex("0x100000000").is_err());
        assert!(lex("4294967296").is_err());
    }
}
