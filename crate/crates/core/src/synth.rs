//! Seeded synthetic tweet pairs shaped like the crisis-event corpora, for
//! tests and demos when the annotated tweets are not at hand.
//!
//! Every event has a handful of claims. ENT pairs restate the same claim,
//! CON pairs restate it with a changed number or an inserted negation, UNK
//! pairs talk about a different claim of the same event. Thread replies are
//! short reactions that quote part of the source claim.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng as _;
use serde_json::json;

use crate::corpus::{RteLabel, Scenario, TweetPair};
use crate::rng::{self, Rng};

/// Per-event pair counts in ENT, CON, UNK order.
pub type CountTable = [(&'static str, [usize; 3]); 4];

pub const THREADS_COUNTS: CountTable = [
    ("chebdo", [143, 34, 486]),
    ("gwings", [39, 6, 107]),
    ("ottawa", [79, 37, 292]),
    ("ssiege", [112, 59, 456]),
];

pub const IPOSTS_COUNTS: CountTable = [
    ("chebdo", [647, 427, 866]),
    ("gwings", [461, 257, 447]),
    ("ottawa", [555, 377, 168]),
    ("ssiege", [332, 317, 565]),
];

/// Claim templates; `{n}` is replaced by a count.
fn claims(event: &str) -> &'static [&'static str] {
    match event {
        "chebdo" => &[
            "{n} people killed in shooting at Charlie Hebdo offices in Paris",
            "gunmen shouted allahu akbar while storming the magazine building",
            "police have identified {n} suspects in the Paris magazine attack",
            "hostages taken at kosher supermarket near Porte de Vincennes",
            "suspects cornered in printing works at Dammartin en Goele",
            "editor Charb among the dead cartoonists",
        ],
        "gwings" => &[
            "Germanwings flight crashed in French Alps with {n} people on board",
            "co-pilot deliberately locked captain out of cockpit",
            "no survivors expected at crash site near Digne",
            "black box recovered by French investigators",
            "{n} German students from Haltern among passengers",
        ],
        "ottawa" => &[
            "soldier shot at National War Memorial in Ottawa",
            "gunman killed inside Parliament Hill by sergeant at arms",
            "{n} shooters involved in Ottawa attack says police",
            "shots fired near Rideau Centre shopping mall",
            "suspect named as Michael Zehaf-Bibeau",
        ],
        "ssiege" => &[
            "{n} hostages held inside Lindt cafe in Sydney",
            "hostages forced to hold ISIS flag in cafe window",
            "gunman demands to speak with prime minister",
            "police stormed Lindt cafe ending siege",
            "{n} hostages escaped from Martin Place cafe",
        ],
        _ => &[
            "{n} people injured in incident downtown",
            "police confirm suspect in custody",
            "roads closed around the area",
        ],
    }
}

const PREFIXES: &[&str] = &["BREAKING:", "RT", "Reports:", "UPDATE", "JUST IN:", "Confirmed:", "Wow", ""];
const SUFFIXES: &[&str] = &["URL", "#news", "@bbcbreaking", "via @reuters URL", "#breaking URL", "", "!!"];
const AGREE: &[&str] = &["yes", "exactly", "confirmed", "true", "so sad", "indeed", "horrible"];
const DISAGREE: &[&str] = &["this is false", "not true", "fake", "no, wrong", "that's a lie", "false report", "incorrect"];
const UNKNOWN: &[&str] = &[
    "is this confirmed?",
    "any source for this?",
    "praying for everyone there",
    "thoughts with the families",
    "what is going on",
    "stay safe everyone",
    "where did you hear this?",
    "unbelievable",
];
const SYNONYMS: &[(&str, &str)] = &[
    ("killed", "dead"),
    ("people", "persons"),
    ("shooting", "attack"),
    ("police", "officers"),
    ("hostages", "captives"),
    ("suspects", "gunmen"),
    ("crashed", "went down"),
    ("gunman", "shooter"),
    ("shot", "gunned down"),
    ("inside", "in"),
];

fn count(rng: &mut Rng) -> u32 {
    rng.random_range(2..=20)
}

fn render(template: &str, n: u32) -> String {
    template.replace("{n}", &n.to_string())
}

fn decorate(rng: &mut Rng, body: &str) -> String {
    let pre = PREFIXES.choose(rng).copied().unwrap_or("");
    let suf = SUFFIXES.choose(rng).copied().unwrap_or("");
    [pre, body, suf].iter().filter(|s| !s.is_empty()).copied().collect::<Vec<_>>().join(" ")
}

/// Swaps in synonyms and drops a few words.
fn paraphrase(rng: &mut Rng, sentence: &str) -> String {
    let mut words: Vec<String> = Vec::new();
    for w in sentence.split_whitespace() {
        if rng.random_bool(0.12) {
            continue;
        }
        match SYNONYMS.iter().find(|(a, _)| *a == w) {
            Some((_, b)) if rng.random_bool(0.5) => words.push(b.to_string()),
            _ => words.push(w.to_string()),
        }
    }
    if words.len() > 4 && rng.random_bool(0.3) {
        // move a trailing phrase to the front
        let cut = rng.random_range(words.len() / 2..words.len());
        words.rotate_left(cut);
    }
    words.join(" ")
}

fn contradict(rng: &mut Rng, template: &str, n: u32) -> String {
    if template.contains("{n}") && rng.random_bool(0.6) {
        let mut m = count(rng);
        while m == n {
            m = count(rng);
        }
        return paraphrase(rng, &render(template, m));
    }
    let claim = render(template, n);
    let mut words: Vec<&str> = claim.split_whitespace().collect();
    let at = rng.random_range(1..words.len().max(2));
    let negation = *["not", "never", "no"].choose(rng).unwrap_or(&"not");
    words.insert(at.min(words.len()), negation);
    paraphrase(rng, &words.join(" "))
}

/// A random subset of the claim's words, in order.
fn fragment(rng: &mut Rng, claim: &str, keep: f64) -> String {
    let kept: Vec<&str> = claim.split_whitespace().filter(|_| rng.random_bool(keep)).collect();
    kept.join(" ")
}

fn pair_texts(rng: &mut Rng, scenario: Scenario, event: &str, label: RteLabel) -> (String, String) {
    let pool = claims(event);
    let k = rng.random_range(0..pool.len());
    let n = count(rng);
    let claim = render(pool[k], n);
    let j = (k + 1 + rng.random_range(0..pool.len() - 1)) % pool.len();
    match scenario {
        Scenario::Iposts => {
            let t = decorate(rng, &claim);
            let h = match label {
                RteLabel::Ent => paraphrase(rng, &claim),
                RteLabel::Con => contradict(rng, pool[k], n),
                RteLabel::Unk => {
                    let m = count(rng);
                    paraphrase(rng, &render(pool[j], m))
                }
            };
            (t, decorate(rng, &h))
        }
        Scenario::Threads => {
            let source = decorate(rng, &claim);
            let reply = match label {
                RteLabel::Ent => {
                    let cue = AGREE.choose(rng).unwrap();
                    format!("{cue} {}", fragment(rng, &claim, 0.6))
                }
                RteLabel::Con => {
                    let cue = DISAGREE.choose(rng).unwrap();
                    format!("{cue} {}", fragment(rng, &claim, 0.35))
                }
                RteLabel::Unk => {
                    let mut r = UNKNOWN.choose(rng).unwrap().to_string();
                    if rng.random_bool(0.3) {
                        r = format!("{} {}", fragment(rng, &render(pool[j], n), 0.4), r);
                    }
                    r
                }
            };
            let mention = ["@", ["user", "jdoe", "newswatch", "anon42"].choose(rng).unwrap()].concat();
            (source, format!("{mention} {}", reply.trim()))
        }
    }
}

/// Labelled pairs matching `table` exactly, in a seeded shuffled order.
pub fn synthetic_pairs(table: &[(&str, [usize; 3])], scenario: Scenario, seed: u64) -> Vec<TweetPair> {
    let mut pairs = Vec::new();
    for (e, (event, counts)) in table.iter().enumerate() {
        let mut rng = rng::indexed_substream(seed, "synth", e as u64);
        let mut labels: Vec<RteLabel> =
            RteLabel::ALL.iter().flat_map(|l| std::iter::repeat_n(*l, counts[l.index()])).collect();
        labels.shuffle(&mut rng);
        for (i, label) in labels.into_iter().enumerate() {
            let (text, hypothesis) = pair_texts(&mut rng, scenario, event, label);
            pairs.push(TweetPair {
                id: format!("{scenario}-{event}-{i:05}"),
                text,
                hypothesis,
                label: Some(label),
                event: event.to_string(),
                scenario,
            });
        }
    }
    pairs
}

/// Thread records as JSON lines: one direct reply per pair of `table`, plus
/// `indirect_per_event` nested replies that conversion must drop. ENT comes
/// from `Agreed`, CON from `Disagreed`, UNK alternates between the two
/// remaining response types.
pub fn threads_jsonl(table: &[(&str, [usize; 3])], indirect_per_event: usize, seed: u64) -> String {
    let mut out = String::new();
    let pairs = synthetic_pairs(table, Scenario::Threads, seed);
    let mut rng = rng::substream(seed, "synth-threads");
    let mut unk = 0usize;
    for p in &pairs {
        let response = match p.label {
            Some(RteLabel::Ent) => "Agreed",
            Some(RteLabel::Con) => "Disagreed",
            _ => {
                unk += 1;
                if unk.is_multiple_of(2) {
                    "AppealforMoreInfo"
                } else {
                    "Comment"
                }
            }
        };
        let rec = json!({
            "event": p.event,
            "source_tweet": p.text,
            "reply_tweet": p.hypothesis,
            "response_type": response,
            "is_direct_reply": true,
        });
        out.push_str(&rec.to_string());
        out.push('\n');
    }
    for (event, _) in table {
        for _ in 0..indirect_per_event {
            let rec = json!({
                "event": event,
                "source_tweet": "a nested reply somewhere down the thread",
                "reply_tweet": UNKNOWN.choose(&mut rng).unwrap(),
                "response_type": "Comment",
                "is_direct_reply": false,
            });
            out.push_str(&rec.to_string());
            out.push('\n');
        }
    }
    out
}
