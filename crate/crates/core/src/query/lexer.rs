use super::QueryError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Var(String),
    Iri(String),
    PName(String, String),
    Str(String),
    Num(String),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Dot,
    Semi,
    Comma,
    Slash,
    OrOr,
    AndAnd,
    Bang,
    Eq,
    Lt,
    Gt,
    DataTag,
    Eof,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, QueryError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    macro_rules! err {
        ($l:expr, $c:expr, $($arg:tt)*) => {
            return Err(QueryError::Syntax { line: $l, col: $c, message: format!($($arg)*) })
        };
    }

    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i, &mut col);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let tok = match c {
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '.' => Tok::Dot,
            ';' => Tok::Semi,
            ',' => Tok::Comma,
            '/' => Tok::Slash,
            '=' => Tok::Eq,
            '>' => Tok::Gt,
            '!' => Tok::Bang,
            '|' if chars.get(i + 1) == Some(&'|') => {
                advance(2, &mut i, &mut col);
                out.push(Token { tok: Tok::OrOr, line: tl, col: tc });
                continue;
            }
            '&' if chars.get(i + 1) == Some(&'&') => {
                advance(2, &mut i, &mut col);
                out.push(Token { tok: Tok::AndAnd, line: tl, col: tc });
                continue;
            }
            '^' if chars.get(i + 1) == Some(&'^') => {
                advance(2, &mut i, &mut col);
                out.push(Token { tok: Tok::DataTag, line: tl, col: tc });
                continue;
            }
            '<' => {
                // An IRI runs to '>' without whitespace; anything else is less-than.
                let mut j = i + 1;
                while j < chars.len() && chars[j] != '>' && !chars[j].is_whitespace() && chars[j] != '<' {
                    j += 1;
                }
                if j < chars.len() && chars[j] == '>' && j > i + 1 {
                    let iri: String = chars[i + 1..j].iter().collect();
                    advance(j + 1 - i, &mut i, &mut col);
                    out.push(Token { tok: Tok::Iri(iri), line: tl, col: tc });
                    continue;
                }
                Tok::Lt
            }
            '?' | '$' => {
                let mut j = i + 1;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                if j == i + 1 {
                    err!(tl, tc, "empty variable name");
                }
                let name: String = chars[i + 1..j].iter().collect();
                advance(j - i, &mut i, &mut col);
                out.push(Token { tok: Tok::Var(name), line: tl, col: tc });
                continue;
            }
            '"' => {
                let mut j = i + 1;
                let mut s = String::new();
                loop {
                    match chars.get(j) {
                        None | Some('\n') => err!(tl, tc, "unterminated string literal"),
                        Some('"') => break,
                        Some('\\') => {
                            match chars.get(j + 1) {
                                Some('"') => s.push('"'),
                                Some('\\') => s.push('\\'),
                                Some('n') => s.push('\n'),
                                Some('r') => s.push('\r'),
                                Some('t') => s.push('\t'),
                                other => err!(line, col + (j - i), "invalid escape {:?}", other),
                            }
                            j += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            j += 1;
                        }
                    }
                }
                advance(j + 1 - i, &mut i, &mut col);
                out.push(Token { tok: Tok::Str(s), line: tl, col: tc });
                continue;
            }
            c if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                let mut j = i + 1;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if j + 1 < chars.len() && chars[j] == '.' && chars[j + 1].is_ascii_digit() {
                    j += 1;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                let num: String = chars[i..j].iter().collect();
                advance(j - i, &mut i, &mut col);
                out.push(Token { tok: Tok::Num(num), line: tl, col: tc });
                continue;
            }
            c if c.is_alphabetic() || c == '_' || c == ':' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let word: String = chars[i..j].iter().collect();
                if chars.get(j) == Some(&':') {
                    let mut k = j + 1;
                    while k < chars.len()
                        && (chars[k].is_alphanumeric() || matches!(chars[k], '_' | '-' | '.' | '/'))
                    {
                        k += 1;
                    }
                    // A trailing '.' terminates the triple, not the name.
                    while k > j + 1 && chars[k - 1] == '.' {
                        k -= 1;
                    }
                    let local: String = chars[j + 1..k].iter().collect();
                    advance(k - i, &mut i, &mut col);
                    out.push(Token { tok: Tok::PName(word, local), line: tl, col: tc });
                    continue;
                }
                if word.is_empty() {
                    err!(tl, tc, "unexpected character {c:?}");
                }
                advance(j - i, &mut i, &mut col);
                out.push(Token { tok: Tok::Ident(word), line: tl, col: tc });
                continue;
            }
            other => err!(tl, tc, "unexpected character {other:?}"),
        };
        advance(1, &mut i, &mut col);
        out.push(Token { tok, line: tl, col: tc });
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}
