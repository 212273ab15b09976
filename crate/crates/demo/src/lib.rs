//! WebAssembly bindings for the static demo page in `www/`. Every exported
//! function returns a JSON string; errors become JavaScript exceptions.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use rte_contra::align::{build_matrix, iterative_align, AlignParams, AlignedPair};
use rte_contra::features::{featurize_with_alignment, FEATURE_NAMES};
use rte_contra::normalize::{normalize, BaselineTagger};
use rte_contra::NormalizedTweet;

fn norm(raw: &str) -> Result<NormalizedTweet, String> {
    normalize(raw, &BaselineTagger::default()).map_err(|e| e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Alignment {
    x: Vec<String>,
    y: Vec<String>,
    /// Score matrix before any cell is zeroed, without the zero border.
    matrix: Vec<Vec<u32>>,
    pairs: Vec<AlignedPair>,
    covered_x: Vec<usize>,
    covered_y: Vec<usize>,
}

#[derive(Serialize)]
struct Features {
    names: [&'static str; 6],
    values: [f64; 6],
    covered_x: Vec<usize>,
    covered_y: Vec<usize>,
}

pub fn normalize_json(raw: &str) -> Result<String, String> {
    to_json(&norm(raw)?)
}

pub fn align_json(a: &str, b: &str, threshold: usize, block_crossing: bool, first_only: bool) -> Result<String, String> {
    let (ta, tb) = (norm(a)?, norm(b)?);
    let params = AlignParams { threshold, block_crossing, first_only };
    let al = iterative_align(&ta.stems, &tb.stems, params).map_err(|e| e.to_string())?;
    let full = build_matrix(&ta.stems, &tb.stems).as_rows();
    let matrix = full.iter().skip(1).map(|r| r[1..].to_vec()).collect();
    to_json(&Alignment {
        x: ta.stems,
        y: tb.stems,
        matrix,
        pairs: al.pairs,
        covered_x: al.covered_x,
        covered_y: al.covered_y,
    })
}

pub fn features_json(a: &str, b: &str, threshold: usize, block_crossing: bool, first_only: bool) -> Result<String, String> {
    let (ta, tb) = (norm(a)?, norm(b)?);
    let params = AlignParams { threshold, block_crossing, first_only };
    let (f, al) = featurize_with_alignment(&ta, &tb, params).map_err(|e| e.to_string())?;
    to_json(&Features { names: FEATURE_NAMES, values: f.to_array(), covered_x: al.covered_x, covered_y: al.covered_y })
}

/// Tokens, tags, stems and content flags of one tweet.
#[wasm_bindgen]
pub fn normalize_tweet(raw: &str) -> Result<String, JsError> {
    normalize_json(raw).map_err(|e| JsError::new(&e))
}

/// Score matrix and aligned substrings of two tweets' stem sequences.
#[wasm_bindgen]
pub fn align_tweets(a: &str, b: &str, threshold: usize, block_crossing: bool, first_only: bool) -> Result<String, JsError> {
    align_json(a, b, threshold, block_crossing, first_only).map_err(|e| JsError::new(&e))
}

/// The six similarity features of a tweet pair.
#[wasm_bindgen]
pub fn featurize_tweets(a: &str, b: &str, threshold: usize, block_crossing: bool, first_only: bool) -> Result<String, JsError> {
    features_json(a, b, threshold, block_crossing, first_only).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn cat_and_mouse() {
        let v: Value =
            serde_json::from_str(&features_json("the cat chased the mouse", "the mouse was chased by the cat", 1, false, false).unwrap())
                .unwrap();
        assert_eq!(v["names"][4], "laProp");
        assert_eq!(v["values"][4].as_f64().unwrap(), 10.0 / 12.0);
        assert_eq!(v["values"][5].as_f64().unwrap(), 1.0);
    }

    #[test]
    fn matrix_drops_border() {
        let v: Value = serde_json::from_str(&align_json("a b c", "b c d e", 1, false, false).unwrap()).unwrap();
        let m = v["matrix"].as_array().unwrap();
        assert_eq!(m.len(), v["x"].as_array().unwrap().len());
        assert_eq!(m[0].as_array().unwrap().len(), v["y"].as_array().unwrap().len());
    }

    #[test]
    fn normalization_is_exposed() {
        let v: Value = serde_json::from_str(&normalize_json("BREAKING: Hostages at #Sydney cafe http://t.co/x").unwrap()).unwrap();
        let tokens: Vec<&str> = v["tokens"].as_array().unwrap().iter().map(|t| t.as_str().unwrap()).collect();
        assert!(tokens.contains(&"sydney"));
        assert!(tokens.contains(&"url"));
    }
}
