//! Exhaustive best-first tree grower, written independently of the library.

use dfc_core::gbdt::{fit_tree_traced, Dataset, TreeConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
pub struct OracleSplit {
    pub node: usize,
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

fn sse(y: &[f64]) -> f64 {
    let m = y.iter().sum::<f64>() / y.len() as f64;
    y.iter().map(|v| (v - m) * (v - m)).sum()
}

/// Every admissible (feature, threshold) of one leaf with its SSE reduction.
fn candidates(x: &[Vec<f64>], y: &[f64], rows: &[usize], min_leaf: usize) -> Vec<(usize, f64, f64)> {
    let mut out = Vec::new();
    if rows.len() < 2 {
        return out;
    }
    let ys: Vec<f64> = rows.iter().map(|&r| y[r]).collect();
    let parent = sse(&ys);
    #[allow(clippy::needless_range_loop)]
    for f in 0..x[0].len() {
        let mut vals: Vec<f64> = rows.iter().map(|&r| x[r][f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let thr = 0.5 * (w[0] + w[1]);
            let left: Vec<f64> = rows.iter().filter(|&&r| x[r][f] <= thr).map(|&r| y[r]).collect();
            let right: Vec<f64> = rows.iter().filter(|&&r| x[r][f] > thr).map(|&r| y[r]).collect();
            if left.len() < min_leaf || right.len() < min_leaf {
                continue;
            }
            out.push((f, thr, parent - sse(&left) - sse(&right)));
        }
    }
    out
}

pub fn oracle(x: &[Vec<f64>], y: &[f64], cfg: &TreeConfig) -> Vec<OracleSplit> {
    let scale: f64 = y.iter().map(|v| v * v).sum();
    let eps = 1e-9 * scale.max(1e-300);
    // (node id, member rows); kept in creation order.
    let mut open: Vec<(usize, Vec<usize>)> = vec![(0, (0..y.len()).collect())];
    let mut next_id = 1;
    let mut splits = Vec::new();
    while open.len() < cfg.max_leaves {
        let mut best: Option<(usize, usize, f64, f64)> = None; // (open idx, feature, thr, gain)
        for (i, (_, rows)) in open.iter().enumerate() {
            for (f, thr, g) in candidates(x, y, rows, cfg.min_samples_leaf) {
                if g <= eps {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bi, bf, bt, bg)) => {
                        if g > bg + eps {
                            true
                        } else if g < bg - eps {
                            false
                        } else {
                            (i, f, thr) < (bi, bf, bt)
                        }
                    }
                };
                if better {
                    best = Some((i, f, thr, g));
                }
            }
        }
        let Some((i, f, thr, g)) = best else { break };
        let (node, rows) = open.remove(i);
        splits.push(OracleSplit {
            node,
            feature: f,
            threshold: thr,
            gain: g,
        });
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&row| x[row][f] <= thr);
        open.push((next_id, l));
        open.push((next_id + 1, r));
        next_id += 2;
    }
    splits
}

pub fn random_case(rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<f64>, TreeConfig) {
    let n = rng.gen_range(2..=30);
    let d = rng.gen_range(1..=2);
    // Coarse integer grids make tied gains common.
    let coarse = rng.gen_bool(0.5);
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..d)
                .map(|_| {
                    if coarse {
                        rng.gen_range(0..5) as f64
                    } else {
                        rng.gen_range(-10.0..10.0)
                    }
                })
                .collect()
        })
        .collect();
    let y: Vec<f64> = (0..n)
        .map(|_| {
            if coarse {
                rng.gen_range(-3..=3) as f64
            } else {
                rng.gen_range(-5.0..5.0)
            }
        })
        .collect();
    let cfg = TreeConfig {
        max_leaves: rng.gen_range(1..=4),
        min_samples_leaf: rng.gen_range(1..=3),
    };
    (x, y, cfg)
}

/// Grows `cases` random trees with the library and the oracle and returns
/// the first disagreement, plus how many cases produced at least one split.
pub fn compare_random_cases(seed: u64, cases: usize) -> (Result<(), String>, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nontrivial = 0;
    for case in 0..cases {
        let (x, y, cfg) = random_case(&mut rng);
        let data = Dataset::new(&x, y.clone()).unwrap();
        let (_, got) = fit_tree_traced(&data, &cfg).unwrap();
        let want = oracle(&x, &y, &cfg);
        nontrivial += (!want.is_empty()) as usize;
        if got.len() != want.len() {
            return (
                Err(format!("case {case}: {} splits vs {}", got.len(), want.len())),
                nontrivial,
            );
        }
        for (g, w) in got.iter().zip(&want) {
            let same = g.node == w.node
                && g.feature == w.feature
                && g.threshold == w.threshold
                && (g.gain - w.gain).abs() <= 1e-9 * (1.0 + w.gain.abs());
            if !same {
                return (Err(format!("case {case}: {g:?} vs {w:?}")), nontrivial);
            }
        }
    }
    (Ok(()), nontrivial)
}
