//! Tweet cleaning, tokenization, stopword removal and suffix stemming.
//!
//! The default stopword list and suffix table are small editable starting
//! points shipped in `data/`; they are not authoritative linguistic resources.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");
pub const DEFAULT_SUFFIXES: &str = include_str!("../data/suffixes.txt");

#[derive(Debug, Error)]
pub enum TextprepError {
    #[error("line {line}: stopword `{word}` is not a clean lowercase token")]
    BadStopword { line: usize, word: String },
    #[error("line {line}: bad suffix rule `{text}`: {reason}")]
    BadSuffixRule {
        line: usize,
        text: String,
        reason: &'static str,
    },
    #[error("allowed character class is empty")]
    EmptyCharClass,
    #[error("stopword `{0}` would not survive cleaning under the configured character class")]
    UncleanStopword(String),
    #[error("cannot read {path}: {message}")]
    Unreadable { path: String, message: String },
}

/// Characters kept by [`clean`]. Space is always allowed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CharClass {
    pub ascii_letters: bool,
    pub ascii_digits: bool,
    /// Additional characters, taken literally. Whitespace here is ignored.
    pub extra: String,
}

impl Default for CharClass {
    fn default() -> Self {
        Self {
            ascii_letters: true,
            ascii_digits: false,
            extra: String::new(),
        }
    }
}

impl CharClass {
    pub fn contains(&self, c: char) -> bool {
        (self.ascii_letters && c.is_ascii_alphabetic())
            || (self.ascii_digits && c.is_ascii_digit())
            || (!c.is_whitespace() && self.extra.contains(c))
    }

    pub fn is_empty(&self) -> bool {
        !self.ascii_letters && !self.ascii_digits && self.extra.chars().all(char::is_whitespace)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CleanConfig {
    pub lowercase: bool,
    pub strip_urls: bool,
    pub strip_mentions_hashtags: bool,
    pub allowed_chars: CharClass,
}

impl Default for CleanConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            strip_urls: true,
            strip_mentions_hashtags: true,
            allowed_chars: CharClass::default(),
        }
    }
}

impl CleanConfig {
    pub fn validate(&self) -> Result<(), TextprepError> {
        if self.allowed_chars.is_empty() {
            return Err(TextprepError::EmptyCharClass);
        }
        Ok(())
    }
}

const URL_PREFIXES: [&str; 3] = ["http://", "https://", "www."];

fn starts_with_ignore_case(chars: &[char], prefix: &str) -> bool {
    prefix.len() <= chars.len()
        && prefix
            .chars()
            .zip(chars)
            .all(|(p, c)| c.to_ascii_lowercase() == p)
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Normalize raw tweet text to allowed characters separated by single spaces.
///
/// URLs run to the next whitespace; mentions and hashtags cover the sigil and
/// the word characters after it. Removed spans and disallowed characters are
/// replaced by a space, so cleaning never glues neighbouring words together.
pub fn clean(text: &str, config: &CleanConfig) -> String {
    let lowered;
    let text = if config.lowercase {
        lowered = text.to_lowercase();
        lowered.as_str()
    } else {
        text
    };
    let chars: Vec<char> = text.chars().collect();

    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    let mut push = |c: char, out: &mut String| {
        if c == ' ' {
            pending_space = !out.is_empty();
        } else {
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.push(c);
        }
    };

    let mut i = 0;
    while i < chars.len() {
        let rest = &chars[i..];
        if config.strip_urls
            && URL_PREFIXES
                .iter()
                .any(|p| starts_with_ignore_case(rest, p))
        {
            while i < chars.len() && !chars[i].is_whitespace() {
                i += 1;
            }
            push(' ', &mut out);
            continue;
        }
        let c = chars[i];
        if config.strip_mentions_hashtags
            && (c == '#' || c == '@')
            && rest.get(1).is_some_and(|&n| is_word_char(n))
        {
            i += 1;
            while i < chars.len() && is_word_char(chars[i]) {
                i += 1;
            }
            push(' ', &mut out);
            continue;
        }
        if config.allowed_chars.contains(c) {
            push(c, &mut out);
        } else {
            push(' ', &mut out);
        }
        i += 1;
    }
    out
}

/// Ordered tokens of one document.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    pub fn new(tokens: Vec<String>) -> Self {
        debug_assert!(tokens.iter().all(|t| !t.is_empty()));
        Self(tokens)
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for TokenSeq {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self(iter.into_iter().map(Into::into).collect())
    }
}

pub fn tokenize(cleaned: &str) -> TokenSeq {
    cleaned.split_whitespace().collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StopwordList {
    words: BTreeSet<String>,
}

impl StopwordList {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            words: words.into_iter().map(Into::into).collect(),
        }
    }

    /// Parse one token per line; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self, TextprepError> {
        let mut words = BTreeSet::new();
        for (i, line) in text.lines().enumerate() {
            let word = line.trim();
            if word.is_empty() || word.starts_with('#') {
                continue;
            }
            if word.chars().any(|c| c.is_whitespace() || c.is_uppercase()) {
                return Err(TextprepError::BadStopword {
                    line: i + 1,
                    word: word.to_string(),
                });
            }
            words.insert(word.to_string());
        }
        Ok(Self { words })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, TextprepError> {
        Self::parse(&read_to_string(path.as_ref())?)
    }

    pub fn default_list() -> Self {
        Self::parse(DEFAULT_STOPWORDS).expect("bundled stopword list is valid")
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

pub fn remove_stopwords(tokens: TokenSeq, list: &StopwordList) -> TokenSeq {
    TokenSeq(tokens.0.into_iter().filter(|t| !list.contains(t)).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuffixRule {
    pub suffix: String,
    pub min_stem_len: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SuffixRuleTable {
    rules: Vec<SuffixRule>,
}

impl SuffixRuleTable {
    pub fn new(rules: Vec<(String, usize)>) -> Result<Self, TextprepError> {
        let mut table = Self::default();
        for (i, (suffix, min_stem_len)) in rules.into_iter().enumerate() {
            table.push(i + 1, suffix, min_stem_len)?;
        }
        Ok(table)
    }

    fn push(
        &mut self,
        line: usize,
        suffix: String,
        min_stem_len: usize,
    ) -> Result<(), TextprepError> {
        let reason = if suffix.is_empty() {
            Some("empty suffix")
        } else if min_stem_len < 2 {
            Some("min_stem_len must be at least 2")
        } else {
            None
        };
        if let Some(reason) = reason {
            return Err(TextprepError::BadSuffixRule {
                line,
                text: format!("{suffix},{min_stem_len}"),
                reason,
            });
        }
        self.rules.push(SuffixRule {
            suffix,
            min_stem_len,
        });
        Ok(())
    }

    /// Parse `suffix,min_stem_len` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self, TextprepError> {
        let mut table = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let bad = |reason| TextprepError::BadSuffixRule {
                line: line_no,
                text: trimmed.to_string(),
                reason,
            };
            let (suffix, len) = trimmed
                .split_once(',')
                .ok_or_else(|| bad("expected `suffix,min_stem_len`"))?;
            let len: usize = len
                .trim()
                .parse()
                .map_err(|_| bad("min_stem_len is not an integer"))?;
            table.push(line_no, suffix.trim().to_string(), len)?;
        }
        Ok(table)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, TextprepError> {
        Self::parse(&read_to_string(path.as_ref())?)
    }

    pub fn default_table() -> Self {
        Self::parse(DEFAULT_SUFFIXES).expect("bundled suffix table is valid")
    }

    pub fn rules(&self) -> &[SuffixRule] {
        &self.rules
    }
}

/// Strip the longest matching suffix that leaves at least `min_stem_len`
/// characters. At most one rule applies; earlier rules win ties.
pub fn stem(token: &str, table: &SuffixRuleTable) -> String {
    let token_len = token.chars().count();
    let mut best: Option<&SuffixRule> = None;
    for rule in &table.rules {
        let suffix_len = rule.suffix.chars().count();
        if token.ends_with(rule.suffix.as_str())
            && token_len >= suffix_len + rule.min_stem_len
            && best.is_none_or(|b| suffix_len > b.suffix.chars().count())
        {
            best = Some(rule);
        }
    }
    match best {
        Some(rule) => token[..token.len() - rule.suffix.len()].to_string(),
        None => token.to_string(),
    }
}

/// The full text → tokens chain with independently toggleable stages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preprocessor {
    pub clean: CleanConfig,
    pub stopwords: Option<StopwordList>,
    pub stemmer: Option<SuffixRuleTable>,
}

impl Default for Preprocessor {
    fn default() -> Self {
        Self {
            clean: CleanConfig::default(),
            stopwords: Some(StopwordList::default_list()),
            stemmer: Some(SuffixRuleTable::default_table()),
        }
    }
}

impl Preprocessor {
    pub fn new(
        clean: CleanConfig,
        stopwords: Option<StopwordList>,
        stemmer: Option<SuffixRuleTable>,
    ) -> Result<Self, TextprepError> {
        clean.validate()?;
        if let Some(list) = &stopwords {
            if let Some(bad) = list.words().find(|w| self::clean(w, &clean) != *w) {
                return Err(TextprepError::UncleanStopword(bad.to_string()));
            }
        }
        Ok(Self {
            clean,
            stopwords,
            stemmer,
        })
    }

    pub fn process(&self, text: &str) -> TokenSeq {
        let mut tokens = tokenize(&clean(text, &self.clean));
        if let Some(list) = &self.stopwords {
            tokens = remove_stopwords(tokens, list);
        }
        if let Some(table) = &self.stemmer {
            tokens = tokens.0.iter().map(|t| stem(t, table)).collect();
        }
        tokens
    }
}

fn read_to_string(path: &Path) -> Result<String, TextprepError> {
    std::fs::read_to_string(path).map_err(|e| TextprepError::Unreadable {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(words: &[&str]) -> TokenSeq {
        words.iter().copied().collect()
    }

    fn table(rules: &[(&str, usize)]) -> SuffixRuleTable {
        SuffixRuleTable::new(rules.iter().map(|&(s, n)| (s.to_string(), n)).collect()).unwrap()
    }

    #[test]
    fn clean_examples() {
        let cfg = CleanConfig::default();
        assert_eq!(
            clean("Mata oyata!! 😭 #sad http://t.co/x", &cfg),
            "mata oyata"
        );
        assert_eq!(clean("", &cfg), "");
        assert_eq!(clean("oya hondin inna", &cfg), "oya hondin inna");
        assert_eq!(
            clean("@friend  mama   HONDIN.\tinne", &cfg),
            "mama hondin inne"
        );
        assert_eq!(clean("www.example.com yes", &cfg), "yes");
        assert_eq!(clean("2day මම hari", &cfg), "day hari");
    }

    #[test]
    fn clean_respects_toggles() {
        let cfg = CleanConfig {
            lowercase: false,
            strip_urls: false,
            strip_mentions_hashtags: false,
            allowed_chars: CharClass {
                ascii_digits: true,
                extra: "#".into(),
                ..CharClass::default()
            },
        };
        assert_eq!(
            clean("Mata #sad 2day http://x", &cfg),
            "Mata #sad 2day http x"
        );
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("mata oyata"), toks(&["mata", "oyata"]));
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("a  b"), toks(&["a", "b"]));
    }

    #[test]
    fn stopword_examples() {
        let list = StopwordList::new(["mama"]);
        assert_eq!(
            remove_stopwords(toks(&["mama", "ada", "jim"]), &list),
            toks(&["ada", "jim"])
        );
        assert_eq!(
            remove_stopwords(toks(&["mama", "ada"]), &StopwordList::default()),
            toks(&["mama", "ada"])
        );
        assert!(remove_stopwords(toks(&["mama", "mama"]), &list).is_empty());
    }

    #[test]
    fn stem_examples() {
        assert_eq!(stem("oyata", &table(&[("ta", 3)])), "oya");
        assert_eq!(stem("jim", &table(&[("wath", 3), ("gena", 2)])), "jim");
        assert_eq!(stem("katawath", &table(&[("wath", 3), ("th", 3)])), "kata");
        assert_eq!(stem("katawath", &table(&[("th", 3), ("wath", 3)])), "kata");
        // removal would leave too short a stem
        assert_eq!(stem("mata", &table(&[("ta", 3)])), "mata");
    }

    #[test]
    fn file_formats() {
        let list = StopwordList::parse("# comment\nmama\n\n  oya \n").unwrap();
        assert_eq!(list.words().collect::<Vec<_>>(), vec!["mama", "oya"]);
        assert!(matches!(
            StopwordList::parse("ok\ntwo words\n"),
            Err(TextprepError::BadStopword { line: 2, .. })
        ));

        let t = SuffixRuleTable::parse("# c\nwath,3\nta, 3\n").unwrap();
        assert_eq!(t.rules().len(), 2);
        assert_eq!(t.rules()[1].suffix, "ta");
        assert!(matches!(
            SuffixRuleTable::parse("ta,1\n"),
            Err(TextprepError::BadSuffixRule { line: 1, .. })
        ));
        assert!(matches!(
            SuffixRuleTable::parse("\nta\n"),
            Err(TextprepError::BadSuffixRule { line: 2, .. })
        ));
        assert!(matches!(
            SuffixRuleTable::parse(",3\n"),
            Err(TextprepError::BadSuffixRule { .. })
        ));
    }

    #[test]
    fn bundled_defaults_parse() {
        let p = Preprocessor::default();
        assert!(!p.stopwords.as_ref().unwrap().is_empty());
        assert!(!p.stemmer.as_ref().unwrap().rules().is_empty());
    }

    #[test]
    fn preprocessor_rejects_unclean_stopwords() {
        let err = Preprocessor::new(
            CleanConfig::default(),
            Some(StopwordList::new(["2day"])),
            None,
        );
        assert!(matches!(err, Err(TextprepError::UncleanStopword(_))));
        let empty = CleanConfig {
            allowed_chars: CharClass {
                ascii_letters: false,
                ascii_digits: false,
                extra: " ".into(),
            },
            ..Default::default()
        };
        assert!(matches!(
            Preprocessor::new(empty, None, None),
            Err(TextprepError::EmptyCharClass)
        ));
    }

    #[test]
    fn stages_toggle_independently() {
        let text = "mama oyata kiyanawa";
        let stop = StopwordList::new(["mama"]);
        let stems = table(&[("ta", 3)]);
        let run = |s: Option<StopwordList>, t: Option<SuffixRuleTable>| {
            Preprocessor::new(CleanConfig::default(), s, t)
                .unwrap()
                .process(text)
        };
        assert_eq!(run(None, None), toks(&["mama", "oyata", "kiyanawa"]));
        assert_eq!(run(Some(stop.clone()), None), toks(&["oyata", "kiyanawa"]));
        assert_eq!(
            run(None, Some(stems.clone())),
            toks(&["mama", "oya", "kiyanawa"])
        );
        assert_eq!(run(Some(stop), Some(stems)), toks(&["oya", "kiyanawa"]));
    }

    fn any_clean_config() -> impl Strategy<Value = CleanConfig> {
        (
            any::<bool>(),
            any::<bool>(),
            any::<bool>(),
            any::<bool>(),
            "[#@:/.!]{0,3}",
        )
            .prop_map(
                |(lowercase, strip_urls, strip_mentions_hashtags, ascii_digits, extra)| {
                    CleanConfig {
                        lowercase,
                        strip_urls,
                        strip_mentions_hashtags,
                        allowed_chars: CharClass {
                            ascii_letters: true,
                            ascii_digits,
                            extra,
                        },
                    }
                },
            )
    }

    const MESSY: &str = "(?s)([a-zA-Z0-9 #@:/._!\t\n]|http://|https://|www\\.|😭|ම|K|İ){0,60}";

    proptest! {
        #[test]
        fn clean_is_idempotent(text in MESSY, cfg in any_clean_config()) {
            let once = clean(&text, &cfg);
            prop_assert_eq!(clean(&once, &cfg), once);
        }

        #[test]
        fn tokens_are_clean(text in MESSY, cfg in any_clean_config()) {
            for token in tokenize(&clean(&text, &cfg)).as_slice() {
                prop_assert!(!token.is_empty());
                prop_assert!(token.chars().all(|c| cfg.allowed_chars.contains(c)));
                if cfg.lowercase {
                    prop_assert!(!token.chars().any(|c| c.is_uppercase()));
                }
            }
        }

        #[test]
        fn stem_contracts(token in "[a-z]{1,12}", rules in prop::collection::vec(("[a-z]{1,4}", 2usize..5), 0..6)) {
            let t = SuffixRuleTable::new(rules).unwrap();
            let s = stem(&token, &t);
            prop_assert!(!s.is_empty());
            prop_assert!(s.len() <= token.len());
            prop_assert!(token.starts_with(&s));
        }

        #[test]
        fn pipeline_is_deterministic(text in MESSY) {
            let p = Preprocessor::default();
            prop_assert_eq!(p.process(&text), p.process(&text));
        }
    }
}
