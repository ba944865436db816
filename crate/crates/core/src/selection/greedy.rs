//! Greedy forward selectors: mRMR (difference form) and rough-set MRMS.

use rayon::prelude::*;

use super::discretize::DiscretizedMatrix;
use super::{Method, SelectionError, SelectionResult, TIE_EPS};

/// Plug-in mutual information (nats) between two discrete columns.
pub fn mutual_information(x: &[u16], y: &[u16]) -> f64 {
    assert_eq!(x.len(), y.len(), "columns must have equal length");
    let n = x.len();
    if n == 0 {
        return 0.0;
    }
    let nx = x.iter().copied().max().unwrap_or(0) as usize + 1;
    let ny = y.iter().copied().max().unwrap_or(0) as usize + 1;
    let mut joint = vec![0u32; nx * ny];
    let mut px = vec![0u32; nx];
    let mut py = vec![0u32; ny];
    for (&a, &b) in x.iter().zip(y) {
        joint[a as usize * ny + b as usize] += 1;
        px[a as usize] += 1;
        py[b as usize] += 1;
    }
    let n = n as f64;
    let mut mi = 0.0;
    for a in 0..nx {
        for b in 0..ny {
            let c = joint[a * ny + b];
            if c == 0 {
                continue;
            }
            let c = c as f64;
            mi += c / n * (c * n / (px[a] as f64 * py[b] as f64)).ln();
        }
    }
    mi.max(0.0)
}

/// Class ids as a discrete column.
pub fn label_column(labels: &[usize]) -> Vec<u16> {
    labels.iter().map(|&l| l as u16).collect()
}

fn check_k(disc: &DiscretizedMatrix, labels: &[usize], k: usize) -> Result<(), SelectionError> {
    if k == 0 || k > disc.n_cols() {
        return Err(SelectionError::KTooLarge {
            k,
            available: disc.n_cols(),
        });
    }
    if disc.n_rows() != labels.len() {
        return Err(SelectionError::Shape(format!(
            "{} rows but {} labels",
            disc.n_rows(),
            labels.len()
        )));
    }
    Ok(())
}

/// Index of the best score among `candidates`; scores within [`TIE_EPS`] of
/// the best tie and go to the lowest index.
fn argmax(scores: &[(usize, f64)]) -> (usize, f64) {
    let mut best = scores[0];
    for &(j, s) in &scores[1..] {
        if s > best.1 + TIE_EPS || ((s - best.1).abs() <= TIE_EPS && j < best.0) {
            best = (j, s);
        }
    }
    best
}

/// Greedy mRMR: first pick maximizes `I(f; label)`, later picks maximize
/// `I(f; label) - mean_{s in S} I(f; s)`.
pub fn mrmr_select(disc: &DiscretizedMatrix, labels: &[usize], k: usize) -> Result<SelectionResult, SelectionError> {
    check_k(disc, labels, k)?;
    let y = label_column(labels);
    let m = disc.n_cols();
    let relevance: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|j| mutual_information(disc.column(j), &y))
        .collect();
    let mut redundancy = vec![0.0; m];
    let mut chosen = vec![false; m];
    let mut selected = Vec::with_capacity(k);
    let mut step_scores = Vec::with_capacity(k);
    for step in 0..k {
        let scores: Vec<(usize, f64)> = (0..m)
            .filter(|&j| !chosen[j])
            .map(|j| {
                let r = if step == 0 { 0.0 } else { redundancy[j] / step as f64 };
                (j, relevance[j] - r)
            })
            .collect();
        let (pick, score) = argmax(&scores);
        chosen[pick] = true;
        selected.push(pick);
        step_scores.push(score);
        if step + 1 < k {
            let picked = disc.column(pick);
            let add: Vec<(usize, f64)> = (0..m)
                .into_par_iter()
                .filter(|&j| !chosen[j])
                .map(|j| (j, mutual_information(disc.column(j), picked)))
                .collect();
            for (j, v) in add {
                redundancy[j] += v;
            }
        }
    }
    Ok(SelectionResult {
        method: Method::Mrmr,
        selected,
        step_scores,
        k,
    })
}

/// Equivalence classes of the rows under a feature subset, as compact ids.
#[derive(Debug, Clone)]
struct Partition {
    ids: Vec<u32>,
    classes: usize,
}

impl Partition {
    fn trivial(n: usize) -> Self {
        Self {
            ids: vec![0; n],
            classes: usize::from(n > 0),
        }
    }

    fn refine(&self, column: &[u16], levels: usize) -> Partition {
        let mut map = vec![u32::MAX; self.classes * levels];
        let mut next = 0u32;
        let ids = self
            .ids
            .iter()
            .zip(column)
            .map(|(&p, &b)| {
                let key = p as usize * levels + b as usize;
                if map[key] == u32::MAX {
                    map[key] = next;
                    next += 1;
                }
                map[key]
            })
            .collect();
        Partition {
            ids,
            classes: next as usize,
        }
    }

    /// Fraction of rows whose class is label-pure, after optionally splitting
    /// by `column`.
    fn dependency(&self, split: Option<(&[u16], usize)>, labels: &[usize]) -> f64 {
        const MIXED: usize = usize::MAX - 1;
        const EMPTY: usize = usize::MAX;
        let n = labels.len();
        if n == 0 {
            return 0.0;
        }
        let levels = split.map_or(1, |(_, l)| l);
        let key = |i: usize| match split {
            Some((col, l)) => self.ids[i] as usize * l + col[i] as usize,
            None => self.ids[i] as usize,
        };
        let mut cell = vec![EMPTY; self.classes * levels];
        for (i, &label) in labels.iter().enumerate() {
            let c = &mut cell[key(i)];
            if *c == EMPTY {
                *c = label;
            } else if *c != label {
                *c = MIXED;
            }
        }
        let pure = (0..n).filter(|&i| cell[key(i)] != MIXED).count();
        pure as f64 / n as f64
    }
}

/// Rough-set dependency degree of `labels` on the feature subset `cols`.
pub fn dependency(disc: &DiscretizedMatrix, cols: &[usize], labels: &[usize]) -> f64 {
    let mut p = Partition::trivial(labels.len());
    for &c in cols {
        p = p.refine(disc.column(c), disc.levels(c));
    }
    p.dependency(None, labels)
}

/// Greedy MRMS: maximizes `beta * gamma({f}) + (1 - beta) * (gamma(S + f) - gamma(S))`.
pub fn mrms_select(disc: &DiscretizedMatrix, labels: &[usize], k: usize, beta: f64) -> Result<SelectionResult, SelectionError> {
    check_k(disc, labels, k)?;
    if !(0.0..=1.0).contains(&beta) {
        return Err(SelectionError::InvalidBeta(beta));
    }
    let m = disc.n_cols();
    let base = Partition::trivial(labels.len());
    let relevance: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|j| base.dependency(Some((disc.column(j), disc.levels(j))), labels))
        .collect();
    let mut partition = base;
    let mut gamma_s = partition.dependency(None, labels);
    let mut chosen = vec![false; m];
    let mut selected = Vec::with_capacity(k);
    let mut step_scores = Vec::with_capacity(k);
    for _ in 0..k {
        let scores: Vec<(usize, f64)> = (0..m)
            .into_par_iter()
            .filter(|&j| !chosen[j])
            .map(|j| {
                let joint = partition.dependency(Some((disc.column(j), disc.levels(j))), labels);
                (j, beta * relevance[j] + (1.0 - beta) * (joint - gamma_s))
            })
            .collect();
        let (pick, score) = argmax(&scores);
        chosen[pick] = true;
        selected.push(pick);
        step_scores.push(score);
        partition = partition.refine(disc.column(pick), disc.levels(pick));
        gamma_s = partition.dependency(None, labels);
    }
    Ok(SelectionResult {
        method: Method::Mrms,
        selected,
        step_scores,
        k,
    })
}

#[cfg(test)]
mod tests {
    use super::super::discretize::discretize_columns;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn disc_from(cols: Vec<Vec<u16>>) -> DiscretizedMatrix {
        let cut_points = cols
            .iter()
            .map(|c| {
                let max = c.iter().copied().max().unwrap_or(0);
                (1..=max).map(f64::from).collect()
            })
            .collect();
        DiscretizedMatrix {
            bins: cols,
            bin_count: 10,
            cut_points,
        }
    }

    #[test]
    fn mi_identical_balanced_binary() {
        let x = [0u16, 1, 0, 1, 1, 0];
        assert!((mutual_information(&x, &x) - std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(mutual_information(&[0, 1, 2, 3], &[0, 0, 0, 0]), 0.0);
    }

    #[test]
    fn mi_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let x: Vec<u16> = (0..100).map(|_| rng.gen_range(0..5)).collect();
            let y: Vec<u16> = (0..100).map(|_| rng.gen_range(0..7)).collect();
            let a = mutual_information(&x, &y);
            assert!(a >= 0.0);
            assert!((a - mutual_information(&y, &x)).abs() < 1e-12);
        }
    }

    #[test]
    fn label_copy_first() {
        let labels = vec![0, 1, 1, 0, 1, 0, 0, 1];
        let mut cols: Vec<Vec<u16>> = (0..5).map(|j| (0..8).map(|i| ((i * (j + 3)) % 4) as u16).collect()).collect();
        cols[3] = label_column(&labels);
        let d = disc_from(cols);
        assert_eq!(mrmr_select(&d, &labels, 2).unwrap().selected[0], 3);
        assert_eq!(mrms_select(&d, &labels, 1, 0.5).unwrap().selected[0], 3);
        assert_eq!(dependency(&d, &[3], &labels), 1.0);
    }

    #[test]
    fn duplicate_column_loses_to_independent_informative_one() {
        // f and its copy carry the label partially; g carries a different part
        let labels = vec![0, 0, 0, 0, 1, 1, 1, 1];
        let f: Vec<u16> = vec![0, 0, 0, 1, 1, 1, 1, 1];
        let g: Vec<u16> = vec![0, 0, 1, 0, 1, 1, 1, 0];
        let d = disc_from(vec![f.clone(), f.clone(), g.clone()]);
        let r = mrmr_select(&d, &labels, 3).unwrap();
        assert_eq!(r.selected, vec![0, 2, 1]);
        // copy criterion after picking f: relevance minus its own relevance
        let y = label_column(&labels);
        let copy_score = mutual_information(&f, &y) - mutual_information(&f, &f);
        assert!(copy_score < r.step_scores[1]);
    }

    #[test]
    fn xor_pair_completed_by_significance() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 64;
        let a: Vec<u16> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let b: Vec<u16> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let labels: Vec<usize> = a.iter().zip(&b).map(|(x, y)| (x ^ y) as usize).collect();
        let noise: Vec<Vec<u16>> = (0..4).map(|_| (0..n).map(|_| rng.gen_range(0..2)).collect()).collect();
        let mut cols = vec![a, b];
        cols.extend(noise);
        let d = disc_from(cols);
        assert_eq!(dependency(&d, &[0, 1], &labels), 1.0);
        let r = mrms_select(&d, &labels, 2, 0.5).unwrap();
        assert_eq!(r.selected, vec![0, 1]);
        assert!((r.step_scores[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn k_bounds() {
        let d = disc_from(vec![vec![0, 1], vec![1, 0]]);
        assert!(matches!(mrmr_select(&d, &[0, 1], 3), Err(SelectionError::KTooLarge { .. })));
        assert!(matches!(mrms_select(&d, &[0, 1], 0, 0.5), Err(SelectionError::KTooLarge { .. })));
        assert!(matches!(mrms_select(&d, &[0, 1], 1, 1.5), Err(SelectionError::InvalidBeta(_))));
    }

    #[test]
    fn first_mrmr_score_is_max_relevance() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let labels: Vec<usize> = (0..60).map(|_| rng.gen_range(0..2)).collect();
        let cols: Vec<Vec<f64>> = (0..9)
            .map(|_| labels.iter().map(|&l| l as f64 * rng.gen::<f64>() + rng.gen::<f64>()).collect())
            .collect();
        let d = discretize_columns(cols.iter().map(Vec::as_slice), 10);
        let r = mrmr_select(&d, &labels, 5).unwrap();
        let y = label_column(&labels);
        let rel: Vec<f64> = (0..9).map(|j| mutual_information(d.column(j), &y)).collect();
        let max = rel.iter().copied().fold(0.0, f64::max);
        assert_eq!(r.step_scores[0], max);
        for &j in &r.selected[1..] {
            assert!(rel[j] <= max);
        }
    }
}
