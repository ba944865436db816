use serde::{Deserialize, Serialize};

/// Confusion-derived scores. For two classes the positive class is the
/// second one (label id 1 in the usual 0/1 coding); with more classes
/// sensitivity, specificity and F-score are one-vs-rest macro averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub f_score: f64,
    /// Class ids indexing the confusion matrix.
    pub classes: Vec<usize>,
    /// `confusion[t][p]`: instances of class `t` predicted as `p`.
    pub confusion: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Accuracy,
    Sensitivity,
    Specificity,
    FScore,
}

impl std::str::FromStr for MetricKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "accuracy" => Ok(MetricKind::Accuracy),
            "sensitivity" => Ok(MetricKind::Sensitivity),
            "specificity" => Ok(MetricKind::Specificity),
            "f_score" | "f-score" | "fscore" => Ok(MetricKind::FScore),
            other => Err(format!("unknown metric {other:?}")),
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

struct OneVsRest {
    sensitivity: f64,
    specificity: f64,
    f_score: f64,
}

fn one_vs_rest(confusion: &[Vec<u64>], c: usize) -> OneVsRest {
    let total: u64 = confusion.iter().flatten().sum();
    let tp = confusion[c][c];
    let fn_: u64 = confusion[c].iter().sum::<u64>() - tp;
    let fp: u64 = confusion.iter().map(|r| r[c]).sum::<u64>() - tp;
    let tn = total - tp - fn_ - fp;
    let sensitivity = ratio(tp, tp + fn_);
    let precision = ratio(tp, tp + fp);
    let f_score = if precision + sensitivity > 0.0 {
        2.0 * precision * sensitivity / (precision + sensitivity)
    } else {
        0.0
    };
    OneVsRest {
        sensitivity,
        specificity: ratio(tn, tn + fp),
        f_score,
    }
}

impl Metrics {
    pub fn from_confusion(classes: Vec<usize>, confusion: Vec<Vec<u64>>) -> Metrics {
        let total: u64 = confusion.iter().flatten().sum();
        let trace: u64 = (0..confusion.len()).map(|i| confusion[i][i]).sum();
        let k = classes.len();
        let (sensitivity, specificity, f_score) = if k == 2 {
            let s = one_vs_rest(&confusion, 1);
            (s.sensitivity, s.specificity, s.f_score)
        } else if k == 0 {
            (0.0, 0.0, 0.0)
        } else {
            let all: Vec<OneVsRest> = (0..k).map(|c| one_vs_rest(&confusion, c)).collect();
            let mean = |f: fn(&OneVsRest) -> f64| all.iter().map(f).sum::<f64>() / k as f64;
            (mean(|s| s.sensitivity), mean(|s| s.specificity), mean(|s| s.f_score))
        };
        Metrics {
            accuracy: ratio(trace, total),
            sensitivity,
            specificity,
            f_score,
            classes,
            confusion,
        }
    }

    /// Binary metrics from the four confusion counts.
    pub fn from_counts(tp: u64, fn_: u64, tn: u64, fp: u64) -> Metrics {
        Metrics::from_confusion(vec![0, 1], vec![vec![tn, fp], vec![fn_, tp]])
    }

    pub fn from_predictions(classes: &[usize], truth: &[usize], predicted: &[usize]) -> Metrics {
        let mut confusion = vec![vec![0u64; classes.len()]; classes.len()];
        accumulate(&mut confusion, classes, truth, predicted);
        Metrics::from_confusion(classes.to_vec(), confusion)
    }

    pub fn get(&self, kind: MetricKind) -> f64 {
        match kind {
            MetricKind::Accuracy => self.accuracy,
            MetricKind::Sensitivity => self.sensitivity,
            MetricKind::Specificity => self.specificity,
            MetricKind::FScore => self.f_score,
        }
    }

    pub fn total(&self) -> u64 {
        self.confusion.iter().flatten().sum()
    }
}

pub(crate) fn accumulate(confusion: &mut [Vec<u64>], classes: &[usize], truth: &[usize], predicted: &[usize]) {
    let idx = |c: usize| classes.iter().position(|&k| k == c).expect("known class");
    for (&t, &p) in truth.iter().zip(predicted) {
        confusion[idx(t)][idx(p)] += 1;
    }
}
