use super::ParseError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Tok<'a> {
    Num(f64),
    Ident(&'a str),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Token<'a> {
    pub tok: Tok<'a>,
    pub offset: usize,
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token<'_>>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let b = bytes[pos];
        let start = pos;
        let simple = match b {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = simple {
            out.push(Token { tok, offset: start });
            pos += 1;
            continue;
        }
        if b.is_ascii_whitespace() {
            pos += 1;
        } else if b.is_ascii_digit() || b == b'.' {
            pos = scan_number(bytes, pos);
            let text = &src[start..pos];
            let value: f64 = text
                .parse()
                .map_err(|_| ParseError::lexical(start, format!("malformed number '{text}'")))?;
            if !value.is_finite() {
                return Err(ParseError::lexical(start, format!("number '{text}' is out of range")));
            }
            out.push(Token {
                tok: Tok::Num(value),
                offset: start,
            });
        } else if b.is_ascii_alphabetic() || b == b'_' {
            while pos < bytes.len() && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'_') {
                pos += 1;
            }
            out.push(Token {
                tok: Tok::Ident(&src[start..pos]),
                offset: start,
            });
        } else {
            let ch = src[start..].chars().next().unwrap_or('?');
            return Err(ParseError::lexical(start, format!("unexpected character '{ch}'")));
        }
    }
    out.push(Token {
        tok: Tok::End,
        offset: src.len(),
    });
    Ok(out)
}

/// Digits with an optional fraction and an optional signed exponent. The
/// exponent is only consumed when digits follow, so `2e` lexes as `2` then `e`.
fn scan_number(bytes: &[u8], mut pos: usize) -> usize {
    let digits = |pos: &mut usize| {
        while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
            *pos += 1;
        }
    };
    digits(&mut pos);
    if pos < bytes.len() && bytes[pos] == b'.' {
        pos += 1;
        digits(&mut pos);
    }
    if pos < bytes.len() && (bytes[pos] == b'e' || bytes[pos] == b'E') {
        let mut look = pos + 1;
        if look < bytes.len() && (bytes[look] == b'+' || bytes[look] == b'-') {
            look += 1;
        }
        if look < bytes.len() && bytes[look].is_ascii_digit() {
            pos = look;
            digits(&mut pos);
        }
    }
    pos
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Tok<'_>> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn numbers_and_exponents() {
        assert_eq!(kinds("1.5e-3"), vec![Tok::Num(1.5e-3), Tok::End]);
        assert_eq!(kinds(".25"), vec![Tok::Num(0.25), Tok::End]);
        assert_eq!(kinds("2e"), vec![Tok::Num(2.0), Tok::Ident("e"), Tok::End]);
        assert_eq!(kinds("3E+2"), vec![Tok::Num(300.0), Tok::End]);
    }

    #[test]
    fn offsets_are_byte_positions() {
        let toks = tokenize("x +  sin(y)").unwrap();
        let offs: Vec<usize> = toks.iter().map(|t| t.offset).collect();
        assert_eq!(offs, vec![0, 2, 5, 8, 9, 10, 11]);
    }

    #[test]
    fn rejects_stray_characters() {
        let err = tokenize("x + $").unwrap_err();
        assert_eq!(err.offset, 4);
        assert!(tokenize("1e999").is_err());
        assert!(tokenize(".").is_err());
        assert_eq!(tokenize("x # y").unwrap_err().offset, 2);
    }
}
