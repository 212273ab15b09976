//! Loading tweet pairs: the RTE pair file format, thread records in JSON
//! lines, the response-type to entailment-label mapping and the
//! text/hypothesis assignment rule.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("empty tweet")]
    EmptyTweet,
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate pair id {id:?}")]
    DuplicateId { id: String, line: usize },
    #[error("unknown response type {0:?}")]
    UnknownResponseType(String),
    #[error("unknown entailment label {0:?}")]
    UnknownLabel(String),
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Three-way entailment label. The declaration order (ENT, CON, UNK) is the
/// fixed class order used for tie-breaking throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RteLabel {
    #[serde(rename = "ENT")]
    Ent,
    #[serde(rename = "CON")]
    Con,
    #[serde(rename = "UNK")]
    Unk,
}

impl RteLabel {
    pub const ALL: [RteLabel; 3] = [RteLabel::Ent, RteLabel::Con, RteLabel::Unk];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<RteLabel> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RteLabel::Ent => "ENT",
            RteLabel::Con => "CON",
            RteLabel::Unk => "UNK",
        }
    }
}

impl fmt::Display for RteLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RteLabel {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "ENT" | "ENTAILMENT" | "YES" => Ok(RteLabel::Ent),
            "CON" | "CONTRADICTION" => Ok(RteLabel::Con),
            "UNK" | "UNKNOWN" => Ok(RteLabel::Unk),
            _ => Err(IngestError::UnknownLabel(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Source tweet paired with a direct reply.
    Threads,
    /// Independently posted tweets.
    Iposts,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Threads => "threads",
            Scenario::Iposts => "iposts",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "threads" => Ok(Scenario::Threads),
            "iposts" => Ok(Scenario::Iposts),
            _ => Err(IngestError::UnknownScenario(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetPair {
    pub id: String,
    /// The `t` element.
    pub text: String,
    /// The `h` element.
    pub hypothesis: String,
    pub label: Option<RteLabel>,
    pub event: String,
    pub scenario: Scenario,
}

/// Reply annotation relative to its source tweet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ResponseType {
    Agreed,
    Disagreed,
    #[serde(rename = "AppealforMoreInfo")]
    AppealForMoreInfo,
    Comment,
}

impl FromStr for ResponseType {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match key.as_str() {
            "agreed" => Ok(ResponseType::Agreed),
            "disagreed" => Ok(ResponseType::Disagreed),
            "appealformoreinfo" | "appealformoreinformation" => Ok(ResponseType::AppealForMoreInfo),
            "comment" => Ok(ResponseType::Comment),
            _ => Err(IngestError::UnknownResponseType(s.to_string())),
        }
    }
}

pub fn map_response_type(rt: ResponseType) -> RteLabel {
    match rt {
        ResponseType::Agreed => RteLabel::Ent,
        ResponseType::Disagreed => RteLabel::Con,
        ResponseType::AppealForMoreInfo | ResponseType::Comment => RteLabel::Unk,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreadRecord {
    pub source_tweet: String,
    pub reply_tweet: String,
    pub response_type: ResponseType,
    pub is_direct_reply: bool,
    pub event: String,
}

#[derive(Deserialize)]
struct RawThreadRecord {
    source_tweet: String,
    reply_tweet: String,
    response_type: String,
    is_direct_reply: bool,
    event: String,
}

impl TryFrom<RawThreadRecord> for ThreadRecord {
    type Error = IngestError;

    fn try_from(raw: RawThreadRecord) -> Result<Self, Self::Error> {
        Ok(ThreadRecord {
            response_type: raw.response_type.parse()?,
            source_tweet: raw.source_tweet,
            reply_tweet: raw.reply_tweet,
            is_direct_reply: raw.is_direct_reply,
            event: raw.event,
        })
    }
}

/// Counts per entailment label; `unlabeled` counts pairs without a label.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    #[serde(rename = "ENT")]
    pub ent: usize,
    #[serde(rename = "CON")]
    pub con: usize,
    #[serde(rename = "UNK")]
    pub unk: usize,
    pub unlabeled: usize,
}

impl LabelCounts {
    pub fn add(&mut self, label: Option<RteLabel>) {
        match label {
            Some(RteLabel::Ent) => self.ent += 1,
            Some(RteLabel::Con) => self.con += 1,
            Some(RteLabel::Unk) => self.unk += 1,
            None => self.unlabeled += 1,
        }
    }

    pub fn get(&self, label: RteLabel) -> usize {
        match label {
            RteLabel::Ent => self.ent,
            RteLabel::Con => self.con,
            RteLabel::Unk => self.unk,
        }
    }

    pub fn total(&self) -> usize {
        self.ent + self.con + self.unk + self.unlabeled
    }

    fn merge(&mut self, other: &LabelCounts) {
        self.ent += other.ent;
        self.con += other.con;
        self.unk += other.unk;
        self.unlabeled += other.unlabeled;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub line: usize,
    pub reason: String,
}

/// Summary of one load or conversion run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub pairs: usize,
    pub per_label: LabelCounts,
    pub per_event: BTreeMap<String, LabelCounts>,
    pub dropped_non_direct: usize,
    pub rejected: Vec<Rejection>,
    pub warnings: Vec<String>,
}

impl LoadReport {
    pub fn record(&mut self, pair: &TweetPair) {
        self.pairs += 1;
        self.per_label.add(pair.label);
        self.per_event.entry(pair.event.clone()).or_default().add(pair.label);
    }

    pub fn reject(&mut self, line: usize, reason: impl Into<String>) {
        let reason = reason.into();
        log::warn!("line {line}: record rejected: {reason}");
        self.rejected.push(Rejection { line, reason });
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        let message = message.into();
        log::warn!("{message}");
        self.warnings.push(message);
    }

    /// Associative merge of two partial reports.
    pub fn merge(&mut self, other: LoadReport) {
        self.pairs += other.pairs;
        self.per_label.merge(&other.per_label);
        for (event, counts) in &other.per_event {
            self.per_event.entry(event.clone()).or_default().merge(counts);
        }
        self.dropped_non_direct += other.dropped_non_direct;
        self.rejected.extend(other.rejected);
        self.warnings.extend(other.warnings);
    }

    pub fn from_pairs(pairs: &[TweetPair]) -> Self {
        let mut report = LoadReport::default();
        for p in pairs {
            report.record(p);
        }
        report
    }
}

fn token_count(s: &str) -> usize {
    s.split_whitespace().count()
}

/// Returns `(text, hypothesis)`: the string with more whitespace tokens is the
/// text; on equal counts the first argument is the text.
pub fn assign_t_h<'a>(a: &'a str, b: &'a str) -> Result<(&'a str, &'a str), IngestError> {
    let (na, nb) = (token_count(a), token_count(b));
    if na == 0 || nb == 0 {
        return Err(IngestError::EmptyTweet);
    }
    Ok(if nb > na { (b, a) } else { (a, b) })
}

/// Parses thread records, one JSON object per line. Blank lines are skipped;
/// malformed lines and unknown response types are rejected into the report.
pub fn parse_thread_lines(input: &str) -> (Vec<ThreadRecord>, LoadReport) {
    let mut report = LoadReport::default();
    let mut records = Vec::new();
    for (i, line) in input.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<RawThreadRecord>(line)
            .map_err(|e| e.to_string())
            .and_then(|raw| ThreadRecord::try_from(raw).map_err(|e| e.to_string()));
        match parsed {
            Ok(rec) => records.push(rec),
            Err(reason) => report.reject(i + 1, reason),
        }
    }
    (records, report)
}

/// Builds `threads` pairs from direct replies. Pair ids are
/// `threads-<event>-<n>` with `n` counting emitted pairs.
pub fn threads_to_pairs<I>(records: I) -> (Vec<TweetPair>, LoadReport)
where
    I: IntoIterator<Item = ThreadRecord>,
{
    let mut report = LoadReport::default();
    let mut pairs = Vec::new();
    for (i, rec) in records.into_iter().enumerate() {
        if !rec.is_direct_reply {
            report.dropped_non_direct += 1;
            continue;
        }
        if rec.event.trim().is_empty() {
            report.reject(i + 1, "empty event");
            continue;
        }
        let (text, hypothesis) = match assign_t_h(&rec.source_tweet, &rec.reply_tweet) {
            Ok(th) => th,
            Err(e) => {
                report.reject(i + 1, e.to_string());
                continue;
            }
        };
        let pair = TweetPair {
            id: format!("threads-{}-{:05}", rec.event, pairs.len()),
            text: text.to_string(),
            hypothesis: hypothesis.to_string(),
            label: Some(map_response_type(rec.response_type)),
            event: rec.event,
            scenario: Scenario::Threads,
        };
        report.record(&pair);
        pairs.push(pair);
    }
    if pairs.is_empty() {
        report.warn("no pairs produced");
    }
    (pairs, report)
}

/// Full conversion of a thread JSON-lines document into pairs.
pub fn convert_threads(input: &str) -> (Vec<TweetPair>, LoadReport) {
    let (records, mut report) = parse_thread_lines(input);
    let (pairs, conv) = threads_to_pairs(records);
    report.merge(conv);
    (pairs, report)
}

pub fn load_rte_pairs(path: impl AsRef<Path>) -> Result<(Vec<TweetPair>, LoadReport), IngestError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_rte_pairs(&text)
}

/// Parses the XML-like pair format. Top-level declarations, comments and
/// wrapper elements other than `<pair>` are skipped.
pub fn parse_rte_pairs(input: &str) -> Result<(Vec<TweetPair>, LoadReport), IngestError> {
    let mut parser = PairParser::new(input);
    let mut pairs: Vec<TweetPair> = Vec::new();
    let mut seen = HashSet::new();
    let mut report = LoadReport::default();
    while let Some((line, pair)) = parser.next_pair()? {
        if !seen.insert(pair.id.clone()) {
            return Err(IngestError::DuplicateId { id: pair.id, line });
        }
        report.record(&pair);
        pairs.push(pair);
    }
    if pairs.is_empty() {
        report.warn("no pairs found in input");
    }
    Ok((pairs, report))
}

pub fn write_rte_pairs(pairs: &[TweetPair]) -> String {
    let mut out = String::new();
    for p in pairs {
        out.push_str("<pair id=\"");
        out.push_str(&escape(&p.id));
        out.push('"');
        if let Some(label) = p.label {
            out.push_str(" entailment=\"");
            out.push_str(label.as_str());
            out.push('"');
        }
        out.push_str(" event=\"");
        out.push_str(&escape(&p.event));
        out.push_str("\" scenario=\"");
        out.push_str(p.scenario.as_str());
        out.push_str("\"><t>");
        out.push_str(&escape(&p.text));
        out.push_str("</t><h>");
        out.push_str(&escape(&p.hypothesis));
        out.push_str("</h></pair>\n");
    }
    out
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn unescape(s: &str, line: usize) -> Result<String, IngestError> {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        let after = &rest[amp + 1..];
        let semi = after.find(';').ok_or_else(|| IngestError::Malformed {
            line,
            message: "unterminated character reference".into(),
        })?;
        let entity = &after[..semi];
        let decoded = match entity {
            "amp" => '&',
            "lt" => '<',
            "gt" => '>',
            "quot" => '"',
            "apos" => '\'',
            _ => {
                let code = if let Some(hex) = entity.strip_prefix("#x") {
                    u32::from_str_radix(hex, 16).ok()
                } else if let Some(dec) = entity.strip_prefix('#') {
                    dec.parse().ok()
                } else {
                    None
                };
                code.and_then(char::from_u32).ok_or_else(|| IngestError::Malformed {
                    line,
                    message: format!("unknown entity &{entity};"),
                })?
            }
        };
        out.push(decoded);
        rest = &after[semi + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

struct PairParser<'a> {
    src: &'a str,
    pos: usize,
    line_starts: Vec<usize>,
}

struct Tag<'a> {
    name: &'a str,
    closing: bool,
    attrs: Vec<(&'a str, &'a str)>,
}

impl<'a> PairParser<'a> {
    fn new(src: &'a str) -> Self {
        let mut line_starts = vec![0];
        line_starts.extend(src.match_indices('\n').map(|(i, _)| i + 1));
        Self { src, pos: 0, line_starts }
    }

    fn line_at(&self, pos: usize) -> usize {
        self.line_starts.partition_point(|&s| s <= pos)
    }

    fn err(&self, pos: usize, message: impl Into<String>) -> IngestError {
        IngestError::Malformed { line: self.line_at(pos), message: message.into() }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn skip_until(&mut self, start: usize, terminator: &str) -> Result<(), IngestError> {
        match self.rest().find(terminator) {
            Some(i) => {
                self.pos += i + terminator.len();
                Ok(())
            }
            None => Err(self.err(start, format!("missing {terminator:?}"))),
        }
    }

    fn read_tag(&mut self) -> Result<Tag<'a>, IngestError> {
        let start = self.pos;
        let end = self.rest().find('>').ok_or_else(|| self.err(start, "unterminated tag"))?;
        let body = &self.src[start + 1..start + end];
        self.pos = start + end + 1;
        let (closing, body) = match body.strip_prefix('/') {
            Some(b) => (true, b),
            None => (false, body),
        };
        let body = body.strip_suffix('/').unwrap_or(body).trim();
        let name_end = body.find(char::is_whitespace).unwrap_or(body.len());
        let name = &body[..name_end];
        if name.is_empty() {
            return Err(self.err(start, "tag without a name"));
        }
        let mut attrs = Vec::new();
        let mut rest = body[name_end..].trim_start();
        while !rest.is_empty() {
            let eq = rest.find('=').ok_or_else(|| self.err(start, format!("bad attribute in <{name}>")))?;
            let key = rest[..eq].trim();
            let after = rest[eq + 1..].trim_start();
            let quote = after
                .chars()
                .next()
                .filter(|c| *c == '"' || *c == '\'')
                .ok_or_else(|| self.err(start, format!("unquoted attribute {key:?}")))?;
            let close = after[1..]
                .find(quote)
                .ok_or_else(|| self.err(start, format!("unterminated attribute {key:?}")))?;
            attrs.push((key, &after[1..1 + close]));
            rest = after[close + 2..].trim_start();
        }
        Ok(Tag { name, closing, attrs })
    }

    fn read_element_text(&mut self, name: &str) -> Result<String, IngestError> {
        self.skip_ws();
        let start = self.pos;
        if !self.rest().starts_with('<') {
            return Err(self.err(start, format!("expected <{name}>")));
        }
        let tag = self.read_tag()?;
        if tag.closing || tag.name != name {
            return Err(self.err(start, format!("expected <{name}>, found <{}>", tag.name)));
        }
        let close = format!("</{name}>");
        let end = self
            .rest()
            .find(&close)
            .ok_or_else(|| self.err(start, format!("missing {close}")))?;
        let raw = &self.src[self.pos..self.pos + end];
        if raw.contains('<') {
            return Err(self.err(start, format!("markup inside <{name}>")));
        }
        self.pos += end + close.len();
        unescape(raw.trim(), self.line_at(start))
    }

    fn next_pair(&mut self) -> Result<Option<(usize, TweetPair)>, IngestError> {
        loop {
            self.skip_ws();
            let start = self.pos;
            if start >= self.src.len() {
                return Ok(None);
            }
            if !self.rest().starts_with('<') {
                return Err(self.err(start, "text outside of a pair element"));
            }
            if self.rest().starts_with("<?") {
                self.skip_until(start, "?>")?;
                continue;
            }
            if self.rest().starts_with("<!--") {
                self.skip_until(start, "-->")?;
                continue;
            }
            let tag = self.read_tag()?;
            if tag.name != "pair" {
                continue;
            }
            if tag.closing {
                return Err(self.err(start, "unexpected </pair>"));
            }
            let line = self.line_at(start);
            let attr = |key: &str| tag.attrs.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
            let id = attr("id")
                .filter(|v| !v.trim().is_empty())
                .ok_or_else(|| self.err(start, "pair without id"))?;
            let id = unescape(id, line)?;
            let event = attr("event")
                .filter(|v| !v.trim().is_empty())
                .ok_or_else(|| self.err(start, format!("pair {id:?} without event")))?;
            let event = unescape(event, line)?;
            let scenario = attr("scenario")
                .ok_or_else(|| self.err(start, format!("pair {id:?} without scenario")))?
                .parse::<Scenario>()
                .map_err(|e| self.err(start, e.to_string()))?;
            let label = attr("entailment")
                .map(|v| v.parse::<RteLabel>())
                .transpose()
                .map_err(|e| self.err(start, e.to_string()))?;
            let text = self.read_element_text("t")?;
            let hypothesis = self.read_element_text("h")?;
            self.skip_ws();
            let close_pos = self.pos;
            if !self.rest().starts_with('<') {
                return Err(self.err(close_pos, "expected </pair>"));
            }
            let close = self.read_tag()?;
            if !(close.closing && close.name == "pair") {
                return Err(self.err(close_pos, format!("expected </pair>, found <{}>", close.name)));
            }
            return Ok(Some((line, TweetPair { id, text, hypothesis, label, event, scenario })));
        }
    }
}
