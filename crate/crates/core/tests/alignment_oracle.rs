//! Exhaustive check of the iterative alignment against a brute-force
//! enumeration of maximal common runs, over every pair of sequences of
//! length <= 7 on a three-letter alphabet. The acceptance run repeats it up
//! to length 8.
//!
//! The aligner only compares tokens for equality, so the result is invariant
//! under renaming symbols. `x` is therefore restricted to canonical
//! sequences (symbols first appear in the order 0, 1, 2) while `y` ranges
//! over everything.

use std::time::{Duration, Instant};

use rte_contra::align::{iterative_align, AlignParams, AlignedPair};

const MAX_LEN: usize = 7;

fn all_sequences() -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..MAX_LEN {
        let mut next = Vec::new();
        for s in &frontier {
            for c in 0..3u8 {
                let mut t: Vec<u8> = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn is_canonical(s: &[u8]) -> bool {
    let mut next = 0;
    for &c in s {
        if c > next {
            return false;
        }
        if c == next {
            next += 1;
        }
    }
    true
}

/// Every maximal diagonal run of equal tokens with length >= t.
fn maximal_runs(x: &[u8], y: &[u8], t: usize, runs: &mut Vec<AlignedPair>) {
    runs.clear();
    for i in 0..x.len() {
        for j in 0..y.len() {
            if x[i] != y[j] || (i > 0 && j > 0 && x[i - 1] == y[j - 1]) {
                continue;
            }
            let mut len = 0;
            while i + len < x.len() && j + len < y.len() && x[i + len] == y[j + len] {
                len += 1;
            }
            if len >= t {
                runs.push(AlignedPair { start_x: i, start_y: j, len });
            }
        }
    }
}

fn coverage(runs: &[AlignedPair], n: usize, start: fn(&AlignedPair) -> usize) -> usize {
    let mut hit = [false; MAX_LEN];
    for p in runs {
        hit[start(p)..start(p) + p.len].iter_mut().for_each(|h| *h = true);
    }
    hit[..n].iter().filter(|&&h| h).count()
}

fn symbol_counts(s: &[u8]) -> [usize; 3] {
    let mut c = [0; 3];
    s.iter().for_each(|&v| c[v as usize] += 1);
    c
}

#[derive(Default)]
struct Tally {
    pairs: u64,
    permutations: u64,
    got: Vec<AlignedPair>,
    expected: Vec<AlignedPair>,
}

fn check(x: &[u8], y: &[u8], thresholds: &[usize], tally: &mut Tally) {
    for &t in thresholds {
        let r = iterative_align(x, y, AlignParams::with_threshold(t)).unwrap();
        for p in &r.pairs {
            assert!(p.len >= t);
            assert_eq!(x[p.start_x..p.start_x + p.len], y[p.start_y..p.start_y + p.len], "{x:?} {y:?}");
        }
        tally.got.clear();
        tally.got.extend_from_slice(&r.pairs);
        tally.got.sort_unstable_by_key(|p| (p.start_x, p.start_y));
        maximal_runs(x, y, t, &mut tally.expected);
        assert_eq!(tally.got, tally.expected, "x={x:?} y={y:?} t={t}");
        assert_eq!(r.m_x(), coverage(&tally.expected, x.len(), |p| p.start_x));
        assert_eq!(r.m_y(), coverage(&tally.expected, y.len(), |p| p.start_y));
        assert!(r.m_x() <= x.len() && r.m_y() <= y.len());
        if t == 1 && !x.is_empty() && x.len() == y.len() && symbol_counts(x) == symbol_counts(y) {
            assert_eq!((r.m_x(), r.m_y()), (x.len(), y.len()), "{x:?} {y:?}");
            tally.permutations += 1;
        }
    }
    tally.pairs += 1;
}

#[test]
fn exhaustive_against_maximal_runs() {
    let start = Instant::now();
    let all = all_sequences();
    let xs: Vec<&Vec<u8>> = all.iter().filter(|s| is_canonical(s)).collect();
    let workers = std::thread::available_parallelism().map_or(4, |n| n.get());
    let chunk = xs.len().div_ceil(workers);
    let tallies: Vec<Tally> = std::thread::scope(|scope| {
        let handles: Vec<_> = xs
            .chunks(chunk)
            .map(|part| {
                let all = &all;
                scope.spawn(move || {
                    let mut tally = Tally::default();
                    for x in part {
                        for y in all {
                            check(x, y, &[1], &mut tally);
                        }
                    }
                    tally
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let pairs: u64 = tallies.iter().map(|t| t.pairs).sum();
    let permutations: u64 = tallies.iter().map(|t| t.permutations).sum();
    assert_eq!(pairs, xs.len() as u64 * all.len() as u64);
    assert!(permutations > 0);
    let elapsed = start.elapsed();
    println!("{pairs} pairs ({permutations} permutation pairs) in {elapsed:?}");
    assert!(elapsed < Duration::from_secs(20), "took {elapsed:?}");
}

#[test]
fn higher_thresholds_on_shorter_sequences() {
    let all: Vec<Vec<u8>> = all_sequences().into_iter().filter(|s| s.len() <= 6).collect();
    let mut tally = Tally::default();
    for x in all.iter().filter(|s| is_canonical(s)) {
        for y in &all {
            check(x, y, &[2, 3], &mut tally);
        }
    }
}

#[test]
fn crossing_block_gives_disjoint_genuine_pairs() {
    let all: Vec<Vec<u8>> = all_sequences().into_iter().filter(|s| s.len() <= 6).collect();
    let params = AlignParams { block_crossing: true, ..AlignParams::default() };
    for x in all.iter().filter(|s| is_canonical(s)) {
        for y in &all {
            let r = iterative_align(x, y, params).unwrap();
            let total: usize = r.pairs.iter().map(|p| p.len).sum();
            assert_eq!(total, r.m_x());
            assert_eq!(total, r.m_y());
            for p in &r.pairs {
                assert_eq!(x[p.start_x..p.start_x + p.len], y[p.start_y..p.start_y + p.len]);
            }
        }
    }
}
