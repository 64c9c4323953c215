use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Token {
    /// Text as it appeared in the input.
    pub surface: String,
    /// Lowercased `surface`.
    pub norm: String,
    /// Position in the token sequence.
    pub index: usize,
}

impl Token {
    pub fn new(surface: impl Into<String>, index: usize) -> Self {
        let surface = surface.into();
        let norm = surface.to_lowercase();
        Token {
            surface,
            norm,
            index,
        }
    }

    pub fn is_punctuation(&self) -> bool {
        self.surface.chars().all(is_punctuation)
    }
}

pub fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}'
                | '\u{2019}'
                | '\u{201C}'
                | '\u{201D}'
                | '\u{2026}'
                | '\u{2013}'
                | '\u{2014}'
                | '\u{00AB}'
                | '\u{00BB}'
                | '\u{00BF}'
                | '\u{00A1}'
        )
}

/// Splits on whitespace, then peels leading and trailing punctuation off each
/// chunk into single-character tokens. Punctuation inside a chunk stays put,
/// so `COVID-19` and `don't` are one token each.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let push = |s: &str, tokens: &mut Vec<Token>| {
        let index = tokens.len();
        tokens.push(Token::new(s, index));
    };
    for chunk in text.split_whitespace() {
        let core_start = chunk
            .char_indices()
            .find(|&(_, c)| !is_punctuation(c))
            .map(|(i, _)| i);
        let Some(core_start) = core_start else {
            for (i, c) in chunk.char_indices() {
                push(&chunk[i..i + c.len_utf8()], &mut tokens);
            }
            continue;
        };
        let core_end = chunk
            .char_indices()
            .rev()
            .find(|&(_, c)| !is_punctuation(c))
            .map(|(i, c)| i + c.len_utf8())
            .expect("chunk has a non-punctuation char");

        for (i, c) in chunk[..core_start].char_indices() {
            push(&chunk[i..i + c.len_utf8()], &mut tokens);
        }
        push(&chunk[core_start..core_end], &mut tokens);
        for (i, c) in chunk[core_end..].char_indices() {
            let at = core_end + i;
            push(&chunk[at..at + c.len_utf8()], &mut tokens);
        }
    }
    tokens
}

/// Renders tokens back to text with single spaces.
pub fn join_surfaces<'a>(tokens: impl IntoIterator<Item = &'a Token>) -> String {
    let mut out = String::new();
    for t in tokens {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&t.surface);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn surfaces(text: &str) -> Vec<String> {
        tokenize(text).into_iter().map(|t| t.surface).collect()
    }

    #[test]
    fn peels_trailing_period() {
        assert_eq!(surfaces("I love Paris."), ["I", "love", "Paris", "."]);
    }

    #[test]
    fn empty_text() {
        assert!(tokenize("").is_empty());
        assert!(tokenize(" \n\t ").is_empty());
    }

    #[test]
    fn keeps_internal_hyphen() {
        assert_eq!(surfaces("COVID-19 tests"), ["COVID-19", "tests"]);
    }

    #[test]
    fn leading_and_multiple_punctuation() {
        assert_eq!(surfaces("(\"Hi!\")"), ["(", "\"", "Hi", "!", "\"", ")"]);
        assert_eq!(surfaces("... wait"), [".", ".", ".", "wait"]);
        assert_eq!(surfaces("don't"), ["don't"]);
    }

    #[test]
    fn norm_and_index() {
        let toks = tokenize("Hello World");
        assert_eq!(toks[1].norm, "world");
        assert_eq!(toks[1].index, 1);
    }

    proptest! {
        #[test]
        fn retokenizing_joined_output_is_stable(text in "[a-zA-Z.,!?'\\- ]{0,60}") {
            let first = tokenize(&text);
            let again = tokenize(&join_surfaces(&first));
            prop_assert_eq!(first, again);
        }
    }
}
