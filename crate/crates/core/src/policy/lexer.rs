use crate::diag::{codes, Diagnostic, Pos};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Word(String),
    /// Raw numeric text, `-?[0-9]+(\.[0-9]+)?`; typed by the parser.
    Number(String),
    Colon,
    Comma,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Cmp(&'static str),
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("`{w}`"),
            Tok::Number(n) => format!("number `{n}`"),
            Tok::Colon => "`:`".into(),
            Tok::Comma => "`,`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Cmp(op) => format!("`{op}`"),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub pos: Pos,
}

/// Splits policy text into tokens. Newlines are whitespace; `#` starts a
/// comment that runs to the end of the line. Unrecognized characters are
/// reported and skipped.
pub(crate) fn tokenize(text: &str) -> (Vec<Spanned>, Vec<Diagnostic>) {
    let mut out = Vec::new();
    let mut diags = Vec::new();
    for (line_idx, line) in text.lines().enumerate() {
        let line_no = line_idx as u32 + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let pos = Pos::new(line_no, i as u32 + 1);
            if c == '#' {
                break;
            }
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            let (tok, len) = match c {
                ':' => (Tok::Colon, 1),
                ',' => (Tok::Comma, 1),
                '{' => (Tok::LBrace, 1),
                '}' => (Tok::RBrace, 1),
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                _ if two == "==" => (Tok::Cmp("=="), 2),
                _ if two == "!=" => (Tok::Cmp("!="), 2),
                _ if two == "<=" => (Tok::Cmp("<="), 2),
                _ if two == ">=" => (Tok::Cmp(">="), 2),
                '<' => (Tok::Cmp("<"), 1),
                '>' => (Tok::Cmp(">"), 1),
                _ if c.is_ascii_alphabetic() || c == '_' => {
                    let end = scan(&chars, i, |ch| ch.is_ascii_alphanumeric() || ch == '_');
                    (Tok::Word(chars[i..end].iter().collect()), end - i)
                }
                _ if c.is_ascii_digit()
                    || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) =>
                {
                    let mut end = scan(&chars, i + 1, |ch| ch.is_ascii_digit());
                    if chars.get(end) == Some(&'.')
                        && chars.get(end + 1).is_some_and(|d| d.is_ascii_digit())
                    {
                        end = scan(&chars, end + 1, |ch| ch.is_ascii_digit());
                    }
                    (Tok::Number(chars[i..end].iter().collect()), end - i)
                }
                _ => {
                    diags.push(Diagnostic::error(
                        codes::SYNTAX_ERROR,
                        pos,
                        format!("unexpected character {c:?}"),
                    ));
                    i += 1;
                    continue;
                }
            };
            out.push(Spanned { tok, pos });
            i += len;
        }
    }
    (out, diags)
}

fn scan(chars: &[char], start: usize, accept: impl Fn(char) -> bool) -> usize {
    let mut end = start;
    while end < chars.len() && accept(chars[end]) {
        end += 1;
    }
    end
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(text: &str) -> Vec<Tok> {
        let (t, d) = tokenize(text);
        assert!(d.is_empty(), "{d:?}");
        t.into_iter().map(|s| s.tok).collect()
    }

    #[test]
    fn words_numbers_and_operators() {
        assert_eq!(
            toks("age >= -3 and t<38.5 # note\nx!=y"),
            vec![
                Tok::Word("age".into()),
                Tok::Cmp(">="),
                Tok::Number("-3".into()),
                Tok::Word("and".into()),
                Tok::Word("t".into()),
                Tok::Cmp("<"),
                Tok::Number("38.5".into()),
                Tok::Word("x".into()),
                Tok::Cmp("!="),
                Tok::Word("y".into()),
            ]
        );
    }

    #[test]
    fn positions_are_one_based() {
        let (t, _) = tokenize("\n  field x");
        assert_eq!(t[0].pos, Pos::new(2, 3));
        assert_eq!(t[1].pos, Pos::new(2, 9));
    }

    #[test]
    fn stray_characters_are_reported() {
        let (t, d) = tokenize("a $ b");
        assert_eq!(t.len(), 2);
        assert_eq!(d[0].code, codes::SYNTAX_ERROR);
        assert_eq!(d[0].pos, Pos::new(1, 3));
    }
}
