//! Cross-validation split protocols.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ClassifierError;

/// Inner split count used inside each set of the shared-minority protocols.
pub const INNER_FOLDS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum FoldProtocol {
    /// Stratified k-fold over all instances.
    StratifiedK(usize),
    /// Five sets, each holding every minority instance plus a disjoint
    /// fifth of the majority class.
    Bearing5Fold,
    /// Three sets built like [`FoldProtocol::Bearing5Fold`].
    Bp3Set,
}

impl FoldProtocol {
    pub fn name(&self) -> String {
        match self {
            FoldProtocol::StratifiedK(k) => format!("stratified-{k}"),
            FoldProtocol::Bearing5Fold => "bearing-5fold".into(),
            FoldProtocol::Bp3Set => "bp-3set".into(),
        }
    }
}

impl fmt::Display for FoldProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for FoldProtocol {
    type Err = ClassifierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bearing-5fold" => Ok(FoldProtocol::Bearing5Fold),
            "bp-3set" => Ok(FoldProtocol::Bp3Set),
            "stratified-k" | "stratified" => Ok(FoldProtocol::StratifiedK(5)),
            _ => s
                .strip_prefix("stratified-")
                .and_then(|k| k.parse().ok())
                .filter(|&k: &usize| k >= 2)
                .map(FoldProtocol::StratifiedK)
                .ok_or_else(|| ClassifierError::UnknownProtocol(s.into())),
        }
    }
}

impl TryFrom<String> for FoldProtocol {
    type Error = ClassifierError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<FoldProtocol> for String {
    fn from(p: FoldProtocol) -> String {
        p.name()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Set this split belongs to (always 0 for plain k-fold).
    pub set: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub protocol: String,
    pub seed: u64,
    /// Instance indices of each set; a single set of everything for k-fold.
    pub sets: Vec<Vec<usize>>,
    pub splits: Vec<Split>,
    /// Instances that appear in more than one set.
    pub shared: Vec<usize>,
    /// Instances left out of every set.
    pub unassigned: Vec<usize>,
}

fn shuffled(mut idx: Vec<usize>, rng: &mut ChaCha8Rng) -> Vec<usize> {
    idx.shuffle(rng);
    idx
}

fn classes_of(labels: &[usize]) -> Vec<usize> {
    let mut c: Vec<usize> = labels.to_vec();
    c.sort_unstable();
    c.dedup();
    c
}

/// Stratified k-fold over the instances `subset`, seeded.
fn stratified(labels: &[usize], subset: &[usize], k: usize, rng: &mut ChaCha8Rng, set: usize) -> Vec<Split> {
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut next = 0;
    for c in classes_of(&subset.iter().map(|&i| labels[i]).collect::<Vec<_>>()) {
        let members: Vec<usize> = subset.iter().copied().filter(|&i| labels[i] == c).collect();
        for i in shuffled(members, rng) {
            folds[next % k].push(i);
            next += 1;
        }
    }
    (0..k)
        .map(|f| {
            let mut test = folds[f].clone();
            test.sort_unstable();
            let mut train: Vec<usize> = (0..k).filter(|&g| g != f).flat_map(|g| folds[g].iter().copied()).collect();
            train.sort_unstable();
            Split { train, test, set }
        })
        .collect()
}

pub fn make_folds(labels: &[usize], protocol: FoldProtocol, seed: u64) -> Result<FoldAssignment, ClassifierError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = labels.len();
    let classes = classes_of(labels);
    if classes.len() < 2 {
        return Err(ClassifierError::SingleClass);
    }
    match protocol {
        FoldProtocol::StratifiedK(k) => {
            if k < 2 || k > n {
                return Err(ClassifierError::ProtocolCompositionImpossible(format!(
                    "{k} folds over {n} instances"
                )));
            }
            let all: Vec<usize> = (0..n).collect();
            Ok(FoldAssignment {
                protocol: protocol.name(),
                seed,
                splits: stratified(labels, &all, k, &mut rng, 0),
                sets: vec![all],
                shared: Vec::new(),
                unassigned: Vec::new(),
            })
        }
        FoldProtocol::Bearing5Fold => shared_minority(labels, 5, protocol, seed, &mut rng),
        FoldProtocol::Bp3Set => shared_minority(labels, 3, protocol, seed, &mut rng),
    }
}

/// Every set holds all minority instances plus `floor(M / sets)` majority
/// instances, majority slices disjoint; leftover majority instances are
/// unassigned. Each set is split by inner stratified k-fold.
fn shared_minority(
    labels: &[usize],
    sets: usize,
    protocol: FoldProtocol,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<FoldAssignment, ClassifierError> {
    let classes = classes_of(labels);
    if classes.len() != 2 {
        return Err(ClassifierError::ProtocolCompositionImpossible(format!(
            "{protocol} needs two classes, found {}",
            classes.len()
        )));
    }
    let members = |c: usize| -> Vec<usize> { (0..labels.len()).filter(|&i| labels[i] == c).collect() };
    let (a, b) = (members(classes[0]), members(classes[1]));
    let (minority, majority) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let per_set = majority.len() / sets;
    if per_set < INNER_FOLDS || minority.len() < INNER_FOLDS {
        return Err(ClassifierError::ProtocolCompositionImpossible(format!(
            "{protocol}: {} minority and {} majority instances cannot fill {sets} sets \
             with at least {INNER_FOLDS} of each class",
            minority.len(),
            majority.len()
        )));
    }
    let majority = shuffled(majority, rng);
    let mut unassigned: Vec<usize> = majority[per_set * sets..].to_vec();
    unassigned.sort_unstable();
    let mut set_members = Vec::with_capacity(sets);
    let mut splits = Vec::new();
    for s in 0..sets {
        let mut members = minority.clone();
        members.extend_from_slice(&majority[s * per_set..(s + 1) * per_set]);
        members.sort_unstable();
        splits.extend(stratified(labels, &members, INNER_FOLDS, rng, s));
        set_members.push(members);
    }
    Ok(FoldAssignment {
        protocol: protocol.name(),
        seed,
        sets: set_members,
        splits,
        shared: minority,
        unassigned,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(labels: &[usize], idx: &[usize], c: usize) -> usize {
        idx.iter().filter(|&&i| labels[i] == c).count()
    }

    #[test]
    fn bearing_composition() {
        let labels: Vec<usize> = (0..3652 + 282).map(|i| usize::from(i >= 3652)).collect();
        let f = make_folds(&labels, FoldProtocol::Bearing5Fold, 7).unwrap();
        assert_eq!(f.sets.len(), 5);
        for s in &f.sets {
            assert_eq!(count(&labels, s, 0), 730);
            assert_eq!(count(&labels, s, 1), 282);
        }
        assert_eq!(f.shared.len(), 282);
        assert_eq!(f.unassigned.len(), 2);
        assert_eq!(f.splits.len(), 25);
    }

    #[test]
    fn bp_composition() {
        let labels: Vec<usize> = (0..118).map(|i| usize::from(i < 15)).collect();
        let f = make_folds(&labels, FoldProtocol::Bp3Set, 1).unwrap();
        for s in &f.sets {
            assert_eq!(count(&labels, s, 1), 15);
            assert_eq!(count(&labels, s, 0), 34);
        }
        assert_eq!(f.unassigned.len(), 1);
        let mut seen: Vec<usize> = f.sets.iter().flatten().copied().filter(|&i| labels[i] == 0).collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 102);
    }

    #[test]
    fn stratified_two_fold() {
        let labels = vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1];
        let f = make_folds(&labels, FoldProtocol::StratifiedK(2), 3).unwrap();
        for s in &f.splits {
            assert_eq!(s.test.len(), 5);
            assert!(count(&labels, &s.test, 0) > 0 && count(&labels, &s.test, 1) > 0);
            assert!(s.train.iter().all(|i| !s.test.contains(i)));
        }
        let mut all: Vec<usize> = f.splits.iter().flat_map(|s| s.test.clone()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let labels: Vec<usize> = (0..40).map(|i| i % 2).collect();
        let a = make_folds(&labels, FoldProtocol::StratifiedK(5), 9).unwrap();
        assert_eq!(a, make_folds(&labels, FoldProtocol::StratifiedK(5), 9).unwrap());
        assert_ne!(a, make_folds(&labels, FoldProtocol::StratifiedK(5), 10).unwrap());
    }

    #[test]
    fn impossible_compositions() {
        let labels = vec![0, 0, 0, 1, 1, 1];
        assert!(matches!(
            make_folds(&labels, FoldProtocol::Bearing5Fold, 0),
            Err(ClassifierError::ProtocolCompositionImpossible(_))
        ));
        assert!(matches!(
            make_folds(&labels, FoldProtocol::StratifiedK(7), 0),
            Err(ClassifierError::ProtocolCompositionImpossible(_))
        ));
        assert!(matches!(make_folds(&[1, 1], FoldProtocol::StratifiedK(2), 0), Err(ClassifierError::SingleClass)));
    }

    #[test]
    fn protocol_names() {
        assert_eq!("bearing-5fold".parse::<FoldProtocol>().unwrap(), FoldProtocol::Bearing5Fold);
        assert_eq!("stratified-3".parse::<FoldProtocol>().unwrap(), FoldProtocol::StratifiedK(3));
        assert_eq!("stratified-k".parse::<FoldProtocol>().unwrap(), FoldProtocol::StratifiedK(5));
        assert!("loo".parse::<FoldProtocol>().is_err());
    }
}
