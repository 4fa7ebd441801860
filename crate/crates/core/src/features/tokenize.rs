use std::sync::OnceLock;

use regex::Regex;

pub const URL_TOKEN: &str = "<url>";
pub const USER_TOKEN: &str = "<user>";

/// Ordered list of lowercase tokens with no internal whitespace.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSeq(pub Vec<String>);

impl TokenSeq {
    pub fn new<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> Self {
        TokenSeq(tokens.into_iter().map(Into::into).collect())
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn token_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?P<url>(?:https?://|www\.)\S+)|(?P<user>@[\p{L}\p{N}_]+)|(?P<word>[\p{L}\p{N}']+)")
            .expect("static regex")
    })
}

/// Tweet tokenizer: lowercases, maps URLs to `<url>` and @mentions to
/// `<user>`, strips `#` from hashtags and splits on anything that is not a
/// letter, digit or apostrophe.
pub fn tokenize(text: &str) -> TokenSeq {
    let lower = text.to_lowercase();
    let tokens = token_pattern()
        .captures_iter(&lower)
        .map(|c| {
            if c.name("url").is_some() {
                URL_TOKEN.to_string()
            } else if c.name("user").is_some() {
                USER_TOKEN.to_string()
            } else {
                c["word"].to_string()
            }
        })
        .collect();
    TokenSeq(tokens)
}

/// Lowercased text with every whitespace run collapsed to one space.
pub fn normalize_text(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tweet_normalization() {
        let t = tokenize("Global warming is REAL! https://t.co/x @someone");
        assert_eq!(t, TokenSeq::new(["global", "warming", "is", "real", "<url>", "<user>"]));
    }

    #[test]
    fn hashtags_lose_the_hash() {
        assert_eq!(tokenize("#ClimateChange hoax"), TokenSeq::new(["climatechange", "hoax"]));
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("  !!! ... ").is_empty());
    }

    #[test]
    fn apostrophes_and_unicode_kept() {
        assert_eq!(tokenize("It's Çok-Sıcak 2018"), TokenSeq::new(["it's", "çok", "sıcak", "2018"]));
    }

    #[test]
    fn www_links() {
        assert_eq!(tokenize("see www.nasa.gov/climate now"), TokenSeq::new(["see", "<url>", "now"]));
    }

    #[test]
    fn normalized_text_collapses_whitespace() {
        assert_eq!(normalize_text("  Ab \t\n CD "), "ab cd");
    }
}
