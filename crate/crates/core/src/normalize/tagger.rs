//! Part-of-speech taggers: a lexicon plus suffix-heuristic baseline and a
//! pass-through tagger for externally tagged text.

use std::collections::HashMap;

use thiserror::Error;

use super::tags::{PennTag, UnknownTag};

#[derive(Debug, Error)]
pub enum TagError {
    #[error("tagger returned {got} tags for {expected} tokens")]
    LengthMismatch { expected: usize, got: usize },
    #[error("no pre-tagged entry for token sequence {0:?}")]
    Untagged(String),
    #[error("line {line}: malformed tagged token {token:?}")]
    Malformed { line: usize, token: String },
    #[error("index line {line}: {message}")]
    BadIndex { line: usize, message: String },
    #[error("line {line}: {source}")]
    BadTag {
        line: usize,
        #[source]
        source: UnknownTag,
    },
}

/// Assigns one PENN tag per token. Implementations must be shareable across
/// worker threads.
pub trait PosTagger: Send + Sync {
    fn tag(&self, tokens: &[String]) -> Result<Vec<PennTag>, TagError>;
}

/// Closed-class words and frequent irregular forms.
const LEXICON: &[(&str, PennTag)] = {
    use PennTag::*;
    &[
        ("the", Dt), ("a", Dt), ("an", Dt), ("this", Dt), ("that", Dt), ("these", Dt),
        ("those", Dt), ("every", Dt), ("each", Dt), ("some", Dt), ("any", Dt), ("no", Dt),
        ("all", Dt), ("both", Dt), ("either", Dt), ("neither", Dt), ("another", Dt),
        ("of", In), ("in", In), ("on", In), ("at", In), ("by", In), ("for", In), ("with", In),
        ("from", In), ("about", In), ("into", In), ("over", In), ("after", In), ("before", In),
        ("under", In), ("between", In), ("through", In), ("during", In), ("without", In),
        ("within", In), ("against", In), ("among", In), ("around", In), ("since", In),
        ("until", In), ("than", In), ("upon", In), ("via", In), ("per", In), ("near", In),
        ("across", In), ("behind", In), ("beyond", In), ("toward", In), ("towards", In),
        ("amid", In), ("despite", In), ("like", In), ("unless", In), ("whether", In),
        ("because", In), ("although", In), ("though", In), ("while", In), ("if", In),
        ("as", In), ("outside", In), ("inside", In), ("up", In), ("off", In), ("out", In),
        ("and", Cc), ("or", Cc), ("but", Cc), ("nor", Cc), ("&", Cc), ("plus", Cc),
        ("to", To),
        ("i", Prp), ("you", Prp), ("he", Prp), ("she", Prp), ("it", Prp), ("we", Prp),
        ("they", Prp), ("me", Prp), ("him", Prp), ("her", Prp), ("us", Prp), ("them", Prp),
        ("myself", Prp), ("yourself", Prp), ("himself", Prp), ("herself", Prp),
        ("itself", Prp), ("ourselves", Prp), ("themselves", Prp), ("u", Prp),
        ("my", PrpPoss), ("your", PrpPoss), ("his", PrpPoss), ("its", PrpPoss),
        ("our", PrpPoss), ("their", PrpPoss),
        ("which", Wdt), ("whatever", Wdt), ("who", Wp), ("whom", Wp), ("what", Wp),
        ("whose", WpPoss), ("when", Wrb), ("where", Wrb), ("why", Wrb), ("how", Wrb),
        ("can", Md), ("could", Md), ("will", Md), ("would", Md), ("shall", Md),
        ("should", Md), ("may", Md), ("might", Md), ("must", Md), ("cannot", Md),
        ("can't", Md), ("won't", Md), ("wouldn't", Md), ("shouldn't", Md), ("couldn't", Md),
        ("there", Ex),
        ("oh", Uh), ("wow", Uh), ("lol", Uh), ("omg", Uh), ("yes", Uh), ("please", Uh),
        ("ok", Uh), ("okay", Uh), ("hey", Uh), ("wtf", Uh), ("yeah", Uh), ("rip", Uh),
        ("is", Vbz), ("has", Vbz), ("does", Vbz), ("says", Vbz), ("isn't", Vbz),
        ("doesn't", Vbz), ("hasn't", Vbz), ("it's", Vbz), ("seems", Vbz), ("looks", Vbz),
        ("am", Vbp), ("are", Vbp), ("have", Vbp), ("do", Vbp), ("aren't", Vbp),
        ("don't", Vbp), ("haven't", Vbp), ("think", Vbp), ("know", Vbp), ("hope", Vbp),
        ("was", Vbd), ("were", Vbd), ("had", Vbd), ("did", Vbd), ("said", Vbd),
        ("told", Vbd), ("saw", Vbd), ("went", Vbd), ("came", Vbd), ("gave", Vbd),
        ("took", Vbd), ("made", Vbd), ("held", Vbd), ("shot", Vbd), ("left", Vbd),
        ("knew", Vbd), ("thought", Vbd), ("found", Vbd), ("got", Vbd), ("wasn't", Vbd),
        ("weren't", Vbd), ("didn't", Vbd), ("fled", Vbd), ("hit", Vbd), ("put", Vbd),
        ("been", Vbn), ("done", Vbn), ("seen", Vbn), ("known", Vbn), ("taken", Vbn),
        ("gone", Vbn), ("given", Vbn), ("shown", Vbn), ("hidden", Vbn), ("written", Vbn),
        ("being", Vbg), ("having", Vbg),
        ("be", Vb), ("get", Vb), ("see", Vb), ("make", Vb), ("go", Vb), ("come", Vb),
        ("take", Vb), ("give", Vb), ("say", Vb), ("stop", Vb), ("pray", Vb),
        ("not", Rb), ("n't", Rb), ("never", Rb), ("also", Rb), ("very", Rb), ("just", Rb),
        ("now", Rb), ("still", Rb), ("already", Rb), ("only", Rb), ("even", Rb),
        ("really", Rb), ("too", Rb), ("so", Rb), ("here", Rb), ("then", Rb), ("again", Rb),
        ("ever", Rb), ("soon", Rb), ("yet", Rb), ("once", Rb), ("away", Rb), ("ago", Rb),
        ("well", Rb), ("maybe", Rb), ("perhaps", Rb), ("live", Rb), ("least", Rbs),
        ("more", Jjr), ("less", Jjr), ("most", Jjs), ("best", Jjs), ("worst", Jjs),
        ("new", Jj), ("other", Jj), ("many", Jj), ("much", Jj), ("first", Jj), ("last", Jj),
        ("good", Jj), ("bad", Jj), ("big", Jj), ("small", Jj), ("dead", Jj), ("awful", Jj),
        ("several", Jj), ("own", Jj), ("same", Jj), ("such", Jj), ("true", Jj),
        ("false", Jj), ("fake", Jj), ("sad", Jj), ("terrible", Jj), ("military", Jj),
        ("domestic", Jj), ("fatal", Jj), ("armed", Jj), ("free", Jj), ("safe", Jj),
        ("sure", Jj), ("real", Jj), ("few", Jj), ("high", Jj), ("old", Jj), ("young", Jj),
        ("one", Cd), ("two", Cd), ("three", Cd), ("four", Cd), ("five", Cd), ("six", Cd),
        ("seven", Cd), ("eight", Cd), ("nine", Cd), ("ten", Cd), ("eleven", Cd),
        ("twelve", Cd), ("twenty", Cd), ("dozen", Cd), ("hundred", Cd), ("hundreds", Cd),
        ("thousand", Cd), ("thousands", Cd), ("million", Cd), ("millions", Cd),
        ("people", Nns), ("men", Nns), ("women", Nns), ("children", Nns), ("gunmen", Nns),
        ("police", Nns), ("news", Nn), ("media", Nns), ("hostages", Nns),
    ]
};

const NOUN_SUFFIXES: &[&str] = &[
    "ness", "ment", "tion", "sion", "ity", "ism", "ance", "ence", "ship", "hood", "ist",
];
const ADJ_SUFFIXES: &[&str] = &[
    "ous", "ful", "able", "ible", "ive", "ical", "ic", "less", "ish", "ary", "ian", "al",
];
const VERB_SUFFIXES: &[&str] = &["ize", "ise", "ify", "ate"];

/// Lexicon lookup with capitalization, number and suffix heuristics, plus a
/// few contextual rules (verb base after modals and "to", past participle
/// after auxiliaries).
#[derive(Debug, Clone)]
pub struct BaselineTagger {
    lexicon: HashMap<&'static str, PennTag>,
}

impl Default for BaselineTagger {
    fn default() -> Self {
        Self { lexicon: LEXICON.iter().copied().collect() }
    }
}

fn punctuation_tag(token: &str) -> PennTag {
    match token {
        "." | "!" | "?" | "!!" | "?!" | "!?" => PennTag::Period,
        "," => PennTag::Comma,
        "(" | "[" | "{" => PennTag::Lrb,
        ")" | "]" | "}" => PennTag::Rrb,
        "\"" | "''" | "”" | "’" => PennTag::CloseQuote,
        "``" | "“" | "‘" => PennTag::OpenQuote,
        "$" => PennTag::Dollar,
        "#" => PennTag::Hash,
        t if t.chars().all(|c| matches!(c, '.' | '!' | '?')) => PennTag::Period,
        t if t.chars().all(|c| matches!(c, ':' | ';' | '-' | '–' | '—' | '…' | '.')) => {
            PennTag::Colon
        }
        _ => PennTag::Sym,
    }
}

fn is_numeric(token: &str) -> bool {
    token.chars().any(|c| c.is_ascii_digit())
        && token
            .chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '.' | ',' | ':' | '/' | '%' | '-' | '+'))
}

fn is_ordinal(lower: &str) -> bool {
    ["st", "nd", "rd", "th"].iter().any(|suf| {
        lower
            .strip_suffix(suf)
            .is_some_and(|d| !d.is_empty() && d.chars().all(|c| c.is_ascii_digit()))
    })
}

fn suffix_tag(lower: &str) -> Option<PennTag> {
    let n = lower.chars().count();
    let has = |suf: &str| lower.ends_with(suf) && n > suf.len() + 1;
    if has("ing") {
        return Some(PennTag::Vbg);
    }
    if has("ed") {
        return Some(PennTag::Vbd);
    }
    if has("ly") {
        return Some(PennTag::Rb);
    }
    if has("est") {
        return Some(PennTag::Jjs);
    }
    if NOUN_SUFFIXES.iter().any(|s| has(s)) {
        return Some(PennTag::Nn);
    }
    if ADJ_SUFFIXES.iter().any(|s| has(s)) {
        return Some(PennTag::Jj);
    }
    if VERB_SUFFIXES.iter().any(|s| has(s)) {
        return Some(PennTag::Vb);
    }
    if has("s") && !lower.ends_with("ss") && !lower.ends_with("us") && !lower.ends_with("is") {
        return Some(PennTag::Nns);
    }
    None
}

impl BaselineTagger {
    fn tag_one(&self, token: &str, prev: Option<PennTag>, sentence_start: bool) -> PennTag {
        if token == super::URL_MASK {
            return PennTag::Nn;
        }
        if !token.chars().any(char::is_alphanumeric) {
            return punctuation_tag(token);
        }
        let lower = token.to_lowercase();
        if is_numeric(token) {
            return PennTag::Cd;
        }
        if is_ordinal(&lower) {
            return PennTag::Jj;
        }
        if let Some(&tag) = self.lexicon.get(lower.as_str()) {
            return match (tag, prev) {
                (PennTag::Vbd, Some(PennTag::Vbz | PennTag::Vbp | PennTag::Vbd | PennTag::Vbn)) => PennTag::Vbn,
                _ => tag,
            };
        }
        let first_upper = token.chars().next().is_some_and(char::is_uppercase);
        let letters: Vec<char> = token.chars().filter(|c| c.is_alphabetic()).collect();
        let all_caps = letters.len() >= 2 && letters.iter().all(|c| c.is_uppercase());
        if token.chars().next().is_some_and(|c| c.is_ascii_digit()) {
            return PennTag::Cd;
        }
        if all_caps || (first_upper && !sentence_start) {
            return if lower.ends_with('s') && all_caps && letters.len() > 4 {
                PennTag::Nnps
            } else {
                PennTag::Nnp
            };
        }
        if first_upper && token.chars().skip(1).any(char::is_uppercase) {
            // CamelCase hashtag residue such as CharlieHebdo
            return PennTag::Nnp;
        }
        match suffix_tag(&lower) {
            Some(PennTag::Vbd) if matches!(prev, Some(PennTag::Vbz | PennTag::Vbp | PennTag::Vbd | PennTag::Vbn)) => {
                PennTag::Vbn
            }
            Some(PennTag::Nns) if prev == Some(PennTag::Prp) => PennTag::Vbz,
            Some(tag) => tag,
            None if matches!(prev, Some(PennTag::Md | PennTag::To)) => PennTag::Vb,
            None => PennTag::Nn,
        }
    }
}

impl PosTagger for BaselineTagger {
    fn tag(&self, tokens: &[String]) -> Result<Vec<PennTag>, TagError> {
        let mut tags = Vec::with_capacity(tokens.len());
        let mut sentence_start = true;
        for token in tokens {
            let tag = self.tag_one(token, tags.last().copied(), sentence_start);
            sentence_start = tag == PennTag::Period || tag == PennTag::Colon;
            tags.push(tag);
        }
        Ok(tags)
    }
}

/// Tags read from externally tagged text (`surface/TAG` tokens separated by
/// spaces, one tweet per line).
#[derive(Debug, Clone, Default)]
pub struct PretaggedTagger {
    entries: HashMap<Vec<String>, Vec<PennTag>>,
}

/// Parses one `surface/TAG surface/TAG ...` line. The tag is taken after the
/// last `/`, so surfaces may themselves contain slashes.
pub fn parse_tagged_line(line: &str, line_no: usize) -> Result<Vec<(String, PennTag)>, TagError> {
    line.split_whitespace()
        .map(|tok| {
            let (surface, tag) = tok.rsplit_once('/').filter(|(s, t)| !s.is_empty() && !t.is_empty()).ok_or_else(
                || TagError::Malformed { line: line_no, token: tok.to_string() },
            )?;
            let tag = tag
                .parse::<PennTag>()
                .map_err(|source| TagError::BadTag { line: line_no, source })?;
            Ok((surface.to_string(), tag))
        })
        .collect()
}

impl PretaggedTagger {
    pub fn insert(&mut self, tagged: &[(String, PennTag)]) {
        let (surfaces, tags) = tagged.iter().cloned().unzip();
        self.entries.insert(surfaces, tags);
    }

    pub fn from_lines(text: &str) -> Result<Self, TagError> {
        let mut tagger = PretaggedTagger::default();
        for (i, line) in text.lines().enumerate() {
            tagger.insert(&parse_tagged_line(line, i + 1)?);
        }
        Ok(tagger)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl PosTagger for PretaggedTagger {
    fn tag(&self, tokens: &[String]) -> Result<Vec<PennTag>, TagError> {
        self.entries
            .get(tokens)
            .cloned()
            .ok_or_else(|| TagError::Untagged(tokens.join(" ")))
    }
}

/// Pre-tagged tweets addressed by id. The sidecar index has one
/// `id<TAB>line` row per tweet, with 1-based line numbers into the tagged
/// file.
#[derive(Debug, Clone, Default)]
pub struct PretaggedIndex {
    by_id: HashMap<String, Vec<(String, PennTag)>>,
}

impl PretaggedIndex {
    pub fn load(tagged: &str, index_tsv: &str) -> Result<Self, TagError> {
        let lines: Vec<&str> = tagged.lines().collect();
        let mut by_id = HashMap::new();
        for (i, row) in index_tsv.lines().enumerate() {
            let line = i + 1;
            if row.trim().is_empty() {
                continue;
            }
            let bad = |message: String| TagError::BadIndex { line, message };
            let (id, target) = row.split_once('\t').ok_or_else(|| bad("expected id<TAB>line".into()))?;
            let target: usize = target.trim().parse().map_err(|_| bad(format!("bad line number {target:?}")))?;
            let text = target
                .checked_sub(1)
                .and_then(|k| lines.get(k))
                .ok_or_else(|| bad(format!("line {target} outside the tagged file")))?;
            if by_id.insert(id.to_string(), parse_tagged_line(text, target)?).is_some() {
                return Err(bad(format!("duplicate id {id}")));
            }
        }
        Ok(Self { by_id })
    }

    pub fn get(&self, id: &str) -> Result<&[(String, PennTag)], TagError> {
        self.by_id.get(id).map(Vec::as_slice).ok_or_else(|| TagError::Untagged(id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }
}
