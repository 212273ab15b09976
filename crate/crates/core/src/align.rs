//! Iterative Smith-Waterman local alignment over token sequences.
//!
//! Matches score +1 and every insertion, deletion or substitution resets the
//! cell to 0, so the score matrix holds the length of the common run ending
//! at each cell. Alignment then repeatedly takes the global maximum, traces
//! back along the diagonal to the first zero cell, records the substring pair
//! and zeroes the traversed cells, while the maximum is at least the
//! threshold `t`. The matrix is filled once and never recomputed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlignError {
    #[error("alignment threshold must be at least 1, got {0}")]
    BadThreshold(usize),
}

/// `(n+1) x (m+1)` score grid; row and column 0 are the zero border.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    rows: usize,
    cols: usize,
    cells: Vec<u32>,
}

impl ScoreMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.cells[i * self.cols + j]
    }

    fn set(&mut self, i: usize, j: usize, v: u32) {
        self.cells[i * self.cols + j] = v;
    }

    /// Row-major view, including the zero border.
    pub fn as_rows(&self) -> Vec<Vec<u32>> {
        self.cells.chunks(self.cols).map(<[u32]>::to_vec).collect()
    }

    fn row_max(&self, i: usize) -> u32 {
        self.cells[i * self.cols..(i + 1) * self.cols].iter().copied().max().unwrap_or(0)
    }
}

pub fn build_matrix<T: PartialEq>(x: &[T], y: &[T]) -> ScoreMatrix {
    let (rows, cols) = (x.len() + 1, y.len() + 1);
    let mut h = ScoreMatrix { rows, cols, cells: vec![0; rows * cols] };
    for i in 1..rows {
        for j in 1..cols {
            if x[i - 1] == y[j - 1] {
                let v = h.get(i - 1, j - 1) + 1;
                h.set(i, j, v);
            }
        }
    }
    h
}

/// One aligned substring pair; positions are 0-based token indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AlignedPair {
    pub start_x: usize,
    pub start_y: usize,
    pub len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignParams {
    /// Minimum length of an aligned substring.
    pub threshold: usize,
    /// Zero the whole row and column of each traversed cell, which forbids
    /// crossing alignments.
    pub block_crossing: bool,
    /// Stop after the first (longest) substring.
    pub first_only: bool,
}

impl Default for AlignParams {
    fn default() -> Self {
        Self { threshold: 1, block_crossing: false, first_only: false }
    }
}

impl AlignParams {
    pub fn with_threshold(threshold: usize) -> Self {
        Self { threshold, ..Self::default() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub pairs: Vec<AlignedPair>,
    /// Aligned positions in `x`, ascending and distinct.
    pub covered_x: Vec<usize>,
    pub covered_y: Vec<usize>,
}

impl AlignmentResult {
    /// Number of aligned positions in `x`.
    pub fn m_x(&self) -> usize {
        self.covered_x.len()
    }

    pub fn m_y(&self) -> usize {
        self.covered_y.len()
    }
}

/// Sorted distinct positions touched by `pairs` on one side.
fn covered(pairs: &[AlignedPair], n: usize, start: fn(&AlignedPair) -> usize) -> Vec<usize> {
    let mut hit = vec![false; n];
    for p in pairs {
        hit[start(p)..start(p) + p.len].fill(true);
    }
    (0..n).filter(|&i| hit[i]).collect()
}

pub fn iterative_align<T: PartialEq>(
    x: &[T],
    y: &[T],
    params: AlignParams,
) -> Result<AlignmentResult, AlignError> {
    let mut h = build_matrix(x, y);
    iterate_on(&mut h, params)
}

/// Runs the extraction loop on a filled matrix, zeroing it in place.
pub fn iterate_on(h: &mut ScoreMatrix, params: AlignParams) -> Result<AlignmentResult, AlignError> {
    if params.threshold < 1 {
        return Err(AlignError::BadThreshold(params.threshold));
    }
    let threshold = u32::try_from(params.threshold).unwrap_or(u32::MAX);
    let mut result = AlignmentResult::default();
    let mut traversed = Vec::new();
    // Global maximum via cached row maxima; ties go to the smallest row,
    // then the smallest column.
    let mut row_max: Vec<u32> = (0..h.rows).map(|i| h.row_max(i)).collect();
    loop {
        let (mut i, max) = row_max
            .iter()
            .enumerate()
            .fold((0, 0), |best, (r, &v)| if v > best.1 { (r, v) } else { best });
        if max < threshold {
            break;
        }
        let mut j = (0..h.cols).find(|&c| h.get(i, c) == max).expect("row holds its maximum");
        traversed.clear();
        while i > 0 && j > 0 && h.get(i, j) > 0 {
            traversed.push((i, j));
            i -= 1;
            j -= 1;
        }
        for &(ti, tj) in &traversed {
            h.set(ti, tj, 0);
        }
        if params.block_crossing {
            for &(ti, tj) in &traversed {
                for c in 0..h.cols {
                    h.set(ti, c, 0);
                }
                for r in 0..h.rows {
                    h.set(r, tj, 0);
                }
            }
            for (r, m) in row_max.iter_mut().enumerate() {
                *m = h.row_max(r);
            }
        } else {
            for &(ti, _) in &traversed {
                row_max[ti] = h.row_max(ti);
            }
        }
        let len = traversed.len();
        // With crossing blocked, cells on the path may already be zero, so a
        // stale maximum can yield a path shorter than the threshold.
        if len >= params.threshold {
            result.pairs.push(AlignedPair { start_x: i, start_y: j, len });
        }
        if params.first_only {
            break;
        }
    }
    result.covered_x = covered(&result.pairs, h.rows - 1, |p| p.start_x);
    result.covered_y = covered(&result.pairs, h.cols - 1, |p| p.start_y);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn matrix_examples() {
        assert_eq!(build_matrix(&["a"], &["a"]).get(1, 1), 1);
        let h = build_matrix(&["a", "b"], &["a", "b"]);
        assert_eq!(h.get(2, 2), 2);
        assert_eq!(h.get(1, 2), 0);
        let h = build_matrix(&["a", "b"], &["c", "d"]);
        assert!(h.as_rows().iter().flatten().all(|&v| v == 0));
        let h = build_matrix::<&str>(&[], &[]);
        assert_eq!((h.rows(), h.cols()), (1, 1));
    }

    #[test]
    fn cat_and_mouse() {
        let x = toks("the cat chased the mouse");
        let y = toks("the mouse was chased by the cat");
        let r = iterative_align(&x, &y, AlignParams::default()).unwrap();
        // the three multi-purpose substrings plus the two stray "the" matches
        // that a crossing-permitting alignment also extracts
        assert_eq!(
            r.pairs,
            vec![
                AlignedPair { start_x: 0, start_y: 5, len: 2 },
                AlignedPair { start_x: 3, start_y: 0, len: 2 },
                AlignedPair { start_x: 0, start_y: 0, len: 1 },
                AlignedPair { start_x: 2, start_y: 3, len: 1 },
                AlignedPair { start_x: 3, start_y: 5, len: 1 },
            ]
        );
        assert_eq!((r.m_x(), r.m_y()), (5, 5));
    }

    #[test]
    fn permutation_is_fully_covered() {
        let r = iterative_align(&["a", "b"], &["b", "a"], AlignParams::default()).unwrap();
        assert_eq!(r.pairs.len(), 2);
        assert!(r.pairs.iter().all(|p| p.len == 1));
        assert_eq!((r.m_x(), r.m_y()), (2, 2));
    }

    #[test]
    fn disjoint_vocabularies() {
        let r = iterative_align(&["a", "b", "c"], &["d", "e"], AlignParams::default()).unwrap();
        assert!(r.pairs.is_empty());
        assert_eq!((r.m_x(), r.m_y()), (0, 0));
    }

    #[test]
    fn threshold_filters_short_runs() {
        let x = toks("a b c x d");
        let y = toks("d a b c");
        let r = iterative_align(&x, &y, AlignParams::with_threshold(2)).unwrap();
        assert_eq!(r.pairs, vec![AlignedPair { start_x: 0, start_y: 1, len: 3 }]);
        assert_eq!(
            iterative_align(&x, &y, AlignParams::with_threshold(0)),
            Err(AlignError::BadThreshold(0))
        );
    }

    #[test]
    fn first_only_keeps_longest() {
        let x = toks("the cat chased the mouse");
        let y = toks("the mouse was chased by the cat");
        let params = AlignParams { first_only: true, ..AlignParams::default() };
        let r = iterative_align(&x, &y, params).unwrap();
        assert_eq!(r.pairs, vec![AlignedPair { start_x: 0, start_y: 5, len: 2 }]);
    }

    #[test]
    fn blocking_crossings_gives_one_to_one_coverage() {
        let x = toks("the cat chased the mouse");
        let y = toks("the mouse was chased by the cat");
        let params = AlignParams { block_crossing: true, ..AlignParams::default() };
        let r = iterative_align(&x, &y, params).unwrap();
        let sum: usize = r.pairs.iter().map(|p| p.len).sum();
        assert_eq!(sum, r.m_x());
        assert_eq!(sum, r.m_y());
        for p in &r.pairs {
            assert_eq!(x[p.start_x..p.start_x + p.len], y[p.start_y..p.start_y + p.len]);
        }
    }

    #[test]
    fn repeated_tokens_count_positions_once() {
        let r = iterative_align(&["a"], &["a", "a", "a"], AlignParams::default()).unwrap();
        assert_eq!(r.pairs.len(), 3);
        assert_eq!((r.m_x(), r.m_y()), (1, 3));
    }
}
