//! Entity string normalization shared by extraction and graph keying.
//!
//! The rules are deliberately conservative: whitespace runs collapse to a
//! single space, a fixed set of punctuation is stripped from both ends, and
//! the key is lowercased. Abbreviations such as "St." vs "Saint" are left to
//! synonymy edges.

const EDGE_PUNCTUATION: &[char] = &[
    '"', '\'', '`', '\u{2018}', '\u{2019}', '\u{201C}', '\u{201D}', '(', ')', '[', ']', '{', '}',
    '<', '>', ',', '.', ';', ':', '!', '?',
];

/// Display form: trimmed and whitespace-collapsed, case preserved.
pub fn clean_entity(raw: &str) -> String {
    let trimmed = raw.trim_matches(|c: char| c.is_whitespace() || EDGE_PUNCTUATION.contains(&c));
    trimmed.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Corpus-global identity key for an entity.
pub fn entity_key(raw: &str) -> String {
    clean_entity(raw).to_lowercase()
}
