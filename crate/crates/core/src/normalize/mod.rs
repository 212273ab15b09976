//! Tweet normalization: entity cleanup, tokenization, tagging, lowercasing,
//! punctuation removal, stemming and content-word flags.

mod porter;
mod tagger;
mod tags;

use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

pub use porter::stem as porter_stem;
pub use tagger::{parse_tagged_line, BaselineTagger, PosTagger, PretaggedIndex, PretaggedTagger, TagError};
pub use tags::{PennTag, UnknownTag};

/// Replacement token for URLs.
pub const URL_MASK: &str = "URL";

static URL_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)(?:https?://|www\.|pic\.twitter\.com/)\S*").expect("valid URL pattern")
});

/// A tweet after normalization. All four sequences have the same length.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedTweet {
    pub tokens: Vec<String>,
    pub pos: Vec<PennTag>,
    pub stems: Vec<String>,
    pub is_content: Vec<bool>,
}

impl NormalizedTweet {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

fn is_punct(c: char) -> bool {
    !c.is_alphanumeric()
}

/// Splits `token` into its leading punctuation (other than `@` and `#`) and
/// the rest.
fn split_lead(token: &str) -> (&str, &str) {
    let idx = token
        .char_indices()
        .find(|&(_, c)| !is_punct(c) || c == '@' || c == '#')
        .map_or(token.len(), |(i, _)| i);
    token.split_at(idx)
}

/// Removes @mentions, strips the `#` of hashtags and masks URLs as `URL`.
pub fn clean(raw: &str) -> String {
    let masked = URL_RE.replace_all(raw, " URL ");
    let mut out: Vec<String> = Vec::new();
    for token in masked.split_whitespace() {
        let (lead, rest) = split_lead(token);
        if rest.starts_with('@') {
            continue;
        }
        let rest = rest.trim_start_matches('#');
        let joined = format!("{lead}{rest}");
        if !joined.is_empty() {
            out.push(joined);
        }
    }
    out.join(" ")
}

/// Whitespace tokenization that splits leading and trailing punctuation runs
/// off each chunk. Word-internal punctuation (apostrophes, hyphens) stays.
pub fn tokenize(cleaned: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in cleaned.split_whitespace() {
        let first = chunk.char_indices().find(|&(_, c)| !is_punct(c)).map(|(i, _)| i);
        let Some(first) = first else {
            tokens.push(chunk.to_string());
            continue;
        };
        let (last, last_char) = chunk
            .char_indices()
            .rev()
            .find(|&(_, c)| !is_punct(c))
            .expect("chunk has an alphanumeric char");
        let end = last + last_char.len_utf8();
        if first > 0 {
            tokens.push(chunk[..first].to_string());
        }
        tokens.push(chunk[first..end].to_string());
        if end < chunk.len() {
            tokens.push(chunk[end..].to_string());
        }
    }
    tokens
}

/// Tokenizes and tags cleaned text. The URL mask is always tagged NN.
pub fn tokenize_tag(cleaned: &str, tagger: &dyn PosTagger) -> Result<(Vec<String>, Vec<PennTag>), TagError> {
    let tokens = tokenize(cleaned);
    if tokens.is_empty() {
        return Ok((tokens, Vec::new()));
    }
    let mut tags = tagger.tag(&tokens)?;
    if tags.len() != tokens.len() {
        return Err(TagError::LengthMismatch { expected: tokens.len(), got: tags.len() });
    }
    for (tok, tag) in tokens.iter().zip(tags.iter_mut()) {
        if tok == URL_MASK {
            *tag = PennTag::Nn;
        }
    }
    Ok((tokens, tags))
}

/// Porter stemming adapted for tweets: tokens containing digits and the URL
/// mask pass through, apostrophes are dropped and hyphenated compounds are
/// stemmed part by part.
pub fn stem_token(lower: &str) -> String {
    if lower == "url" || lower.chars().any(|c| c.is_ascii_digit()) {
        return lower.to_string();
    }
    let bare: String = lower.chars().filter(|c| !matches!(c, '\'' | '’')).collect();
    if bare.contains('-') && bare.split('-').all(|p| !p.is_empty()) {
        return bare.split('-').map(porter::stem).collect::<Vec<_>>().join("-");
    }
    porter::stem(&bare)
}

/// Second half of the pipeline, shared by the bundled tagger and pre-tagged
/// input: lowercase, drop punctuation-only tokens, stem, flag content words.
pub fn normalize_tagged<I>(tagged: I) -> NormalizedTweet
where
    I: IntoIterator<Item = (String, PennTag)>,
{
    let mut out = NormalizedTweet::default();
    for (token, tag) in tagged {
        let lower = token.to_lowercase();
        let trimmed = lower.trim_matches(is_punct);
        if trimmed.is_empty() {
            continue;
        }
        out.stems.push(stem_token(trimmed));
        out.tokens.push(trimmed.to_string());
        out.is_content.push(tag.is_content());
        out.pos.push(tag);
    }
    out
}

pub fn normalize(raw: &str, tagger: &dyn PosTagger) -> Result<NormalizedTweet, TagError> {
    let cleaned = clean(raw);
    let (tokens, tags) = tokenize_tag(&cleaned, tagger)?;
    Ok(normalize_tagged(tokens.into_iter().zip(tags)))
}

/// Normalizes externally tagged tokens: entity cleanup is applied per token
/// (mentions dropped, `#` stripped, URLs masked and tagged NN).
pub fn normalize_pretagged(tagged: Vec<(String, PennTag)>) -> NormalizedTweet {
    let cleaned = tagged.into_iter().filter_map(|(surface, tag)| {
        if URL_RE.is_match(&surface) {
            return Some((URL_MASK.to_string(), PennTag::Nn));
        }
        let (lead, rest) = split_lead(&surface);
        if rest.starts_with('@') {
            return None;
        }
        Some((format!("{lead}{}", rest.trim_start_matches('#')), tag))
    });
    normalize_tagged(cleaned)
}

/// Stem types of content tokens.
pub fn content_stems(t: &NormalizedTweet) -> BTreeSet<&str> {
    t.stems
        .iter()
        .zip(&t.is_content)
        .filter(|(_, &c)| c)
        .map(|(s, _)| s.as_str())
        .collect()
}

/// Tag types of content tokens.
pub fn content_pos(t: &NormalizedTweet) -> BTreeSet<PennTag> {
    t.pos
        .iter()
        .zip(&t.is_content)
        .filter(|(_, &c)| c)
        .map(|(p, _)| *p)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm(s: &str) -> NormalizedTweet {
        normalize(s, &BaselineTagger::default()).unwrap()
    }

    #[test]
    fn clean_rules() {
        assert_eq!(clean("RT @bbc: #sydneysiege over http://t.co/x"), "RT sydneysiege over URL");
        assert_eq!(clean("@a @b"), "");
        assert_eq!(clean("no entities here"), "no entities here");
        assert_eq!(clean("see:https://x.co/a,  (@cnn) ##tag"), "see: URL tag");
        assert_eq!(clean("  spaced\t\tout  "), "spaced out");
    }

    #[test]
    fn tokenize_splits_edge_punctuation() {
        assert_eq!(
            tokenize("Awful. Sydney's siege.. (Co-Pilot) -"),
            ["Awful", ".", "Sydney's", "siege", "..", "(", "Co-Pilot", ")", "-"]
        );
    }

    #[test]
    fn tokenize_tag_cases() {
        let tagger = BaselineTagger::default();
        let (toks, tags) = tokenize_tag("gunmen stormed the Paris HQ", &tagger).unwrap();
        assert_eq!(toks.len(), 5);
        assert_eq!(tags.len(), 5);
        assert_eq!(tokenize_tag("", &tagger).unwrap(), (vec![], vec![]));
        assert_eq!(tokenize_tag("URL", &tagger).unwrap(), (vec!["URL".to_string()], vec![PennTag::Nn]));
    }

    #[test]
    fn tag_length_mismatch_is_an_error() {
        struct Short;
        impl PosTagger for Short {
            fn tag(&self, _: &[String]) -> Result<Vec<PennTag>, TagError> {
                Ok(vec![PennTag::Nn])
            }
        }
        assert!(matches!(
            tokenize_tag("a b", &Short),
            Err(TagError::LengthMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn hostages_example() {
        let t = norm("Hostages seen holding ISIS flag");
        assert_eq!(t.stems, ["hostag", "seen", "hold", "isi", "flag"]);
        assert!(t.is_content.iter().all(|&c| c));
    }

    #[test]
    fn numbers_are_content() {
        let t = norm("12 people died");
        assert_eq!(t.tokens[0], "12");
        assert_eq!(t.pos[0], PennTag::Cd);
        assert!(t.is_content[0]);
    }

    #[test]
    fn function_words_are_not_content() {
        let t = norm("the of and");
        assert_eq!(t.len(), 3);
        assert!(content_stems(&t).is_empty());
        assert!(content_pos(&t).is_empty());
    }

    #[test]
    fn stem_adaptations() {
        assert_eq!(stem_token("url"), "url");
        assert_eq!(stem_token("7news"), "7news");
        assert_eq!(stem_token("sydney's"), "sydnei");
        assert_eq!(stem_token("co-pilots"), "co-pilot");
    }

    #[test]
    fn punctuation_removed_and_lowercased() {
        let t = norm("BREAKING: At least 3 shots fired!! @user #Ottawa http://x.y");
        assert!(t.tokens.iter().all(|tok| tok.chars().any(char::is_alphanumeric)));
        assert!(t.tokens.iter().all(|tok| tok.to_lowercase() == *tok));
        assert_eq!(t.tokens, ["breaking", "at", "least", "3", "shots", "fired", "ottawa", "url"]);
        assert_eq!(t.stems.last().unwrap(), "url");
    }

    #[test]
    fn type_sets() {
        let t = NormalizedTweet {
            tokens: vec!["a".into(), "b".into(), "a".into()],
            pos: vec![PennTag::Nn, PennTag::Nn, PennTag::Vbd],
            stems: vec!["a".into(), "b".into(), "a".into()],
            is_content: vec![true, true, true],
        };
        assert_eq!(content_stems(&t), BTreeSet::from(["a", "b"]));
        assert_eq!(content_pos(&t), BTreeSet::from([PennTag::Nn, PennTag::Vbd]));
    }

    #[test]
    fn charlie_hebdo_pair_shares_stems() {
        let t = norm("12 people now known to have died after gunmen stormed the Paris HQ of magazine CharlieHebdo URL URL");
        let h = norm("Awful. 11 shot dead in an assault on a Paris magazine. URL CharlieHebdo URL");
        let (st, sh) = (content_stems(&t), content_stems(&h));
        let shared: BTreeSet<&str> = st.intersection(&sh).copied().collect();
        for s in ["pari", "magazin", "url", "charliehebdo"] {
            assert!(shared.contains(s), "{s} missing from {shared:?}");
        }
    }

    #[test]
    fn pretagged_path_cleans_entities() {
        let tagged = parse_tagged_line("@bbc/NNP #Sydney/NNP siege/NN http://t.co/x/NN ./.", 1).unwrap();
        let t = normalize_pretagged(tagged);
        assert_eq!(t.tokens, ["sydney", "siege", "url"]);
        assert_eq!(t.pos, [PennTag::Nnp, PennTag::Nn, PennTag::Nn]);
    }
}
