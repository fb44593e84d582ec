//! Confusion-matrix evaluation (overall accuracy, average accuracy, kappa)
//! and the deterministic per-class train/test split.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cube::LabelMap;
use crate::error::{Error, Result};

/// Evaluation summary over a test set. The confusion matrix is indexed by
/// `class_ids`: row = true class, column = predicted class. Classes with no
/// test pixels carry no recall and are excluded from the average accuracy.
#[derive(Debug, Clone)]
pub struct EvalReport {
    class_ids: Vec<u16>,
    confusion: Array2<u64>,
    oa: f64,
    aa: f64,
    kappa: f64,
    per_class: Vec<Option<f64>>,
    zero_test_classes: Vec<u16>,
}

impl EvalReport {
    /// Build a report from a square confusion matrix whose row/column `i`
    /// stands for class id `i + 1`.
    pub fn from_confusion(confusion: Array2<u64>) -> Result<EvalReport> {
        let c = confusion.nrows();
        if c == 0 || confusion.ncols() != c {
            return Err(Error::InvalidConfig(format!(
                "confusion matrix must be square and nonempty, got {}x{}",
                confusion.nrows(),
                confusion.ncols()
            )));
        }
        let class_ids: Vec<u16> = (1..=c as u16).collect();
        EvalReport::from_confusion_with_ids(confusion, class_ids)
    }

    fn from_confusion_with_ids(confusion: Array2<u64>, class_ids: Vec<u16>) -> Result<EvalReport> {
        let c = confusion.nrows();
        let total: u64 = confusion.iter().sum();
        if total == 0 {
            return Err(Error::EmptyTestSet);
        }
        let totalf = total as f64;

        let row_sums: Vec<u64> = (0..c).map(|i| confusion.row(i).iter().sum()).collect();
        let col_sums: Vec<u64> = (0..c).map(|j| confusion.column(j).iter().sum()).collect();
        let trace: u64 = (0..c).map(|i| confusion[[i, i]]).sum();

        let oa = trace as f64 / totalf;

        let mut per_class = Vec::with_capacity(c);
        let mut zero_test_classes = Vec::new();
        let mut recall_sum = 0.0;
        let mut recall_count = 0usize;
        for i in 0..c {
            if row_sums[i] == 0 {
                per_class.push(None);
                zero_test_classes.push(class_ids[i]);
            } else {
                let r = confusion[[i, i]] as f64 / row_sums[i] as f64;
                per_class.push(Some(r));
                recall_sum += r;
                recall_count += 1;
            }
        }
        if recall_count == 0 {
            return Err(Error::EmptyTestSet);
        }
        let aa = recall_sum / recall_count as f64;

        let pe: f64 = (0..c)
            .map(|i| (row_sums[i] as f64) * (col_sums[i] as f64))
            .sum::<f64>()
            / (totalf * totalf);
        // p_e = 1 means both marginals sit on one class; agreement is then
        // either perfect or chance-free.
        let kappa = if pe >= 1.0 {
            if oa >= 1.0 {
                1.0
            } else {
                0.0
            }
        } else {
            (oa - pe) / (1.0 - pe)
        };

        Ok(EvalReport {
            class_ids,
            confusion,
            oa,
            aa,
            kappa,
            per_class,
            zero_test_classes,
        })
    }

    pub fn class_ids(&self) -> &[u16] {
        &self.class_ids
    }

    pub fn confusion(&self) -> &Array2<u64> {
        &self.confusion
    }

    pub fn oa(&self) -> f64 {
        self.oa
    }

    pub fn aa(&self) -> f64 {
        self.aa
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Per-class recall aligned with `class_ids`; `None` marks classes with
    /// no test pixels.
    pub fn per_class(&self) -> &[Option<f64>] {
        &self.per_class
    }

    pub fn zero_test_classes(&self) -> &[u16] {
        &self.zero_test_classes
    }

    pub fn total(&self) -> u64 {
        self.confusion.iter().sum()
    }

    /// Plain-text table plus a machine-readable key-value block.
    pub fn render(&self) -> String {
        use std::fmt::Write;
        let c = self.class_ids.len();
        let mut out = String::new();
        out.push_str("confusion matrix (rows = truth, cols = predicted)\n");
        write!(out, "{:>8}", "class").unwrap();
        for id in &self.class_ids {
            write!(out, "{id:>8}").unwrap();
        }
        out.push('\n');
        for i in 0..c {
            write!(out, "{:>8}", self.class_ids[i]).unwrap();
            for j in 0..c {
                write!(out, "{:>8}", self.confusion[[i, j]]).unwrap();
            }
            out.push('\n');
        }
        out.push('\n');
        writeln!(out, "oa={:.12}", self.oa).unwrap();
        writeln!(out, "aa={:.12}", self.aa).unwrap();
        writeln!(out, "kappa={:.12}", self.kappa).unwrap();
        for (i, recall) in self.per_class.iter().enumerate() {
            match recall {
                Some(r) => writeln!(out, "per_class[{}]={:.12}", self.class_ids[i], r).unwrap(),
                None => writeln!(out, "per_class[{}]=none", self.class_ids[i]).unwrap(),
            }
        }
        let excluded: Vec<String> = self
            .zero_test_classes
            .iter()
            .map(|id| id.to_string())
            .collect();
        writeln!(out, "zero_test_classes={}", excluded.join(",")).unwrap();
        out
    }
}

/// Evaluate predictions against truth over the same test-pixel sequence.
/// Both slices hold nonzero class ids; the confusion matrix covers the
/// union of ids seen in either.
pub fn evaluate(predictions: &[u16], truth: &[u16]) -> Result<EvalReport> {
    if predictions.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            left: predictions.len(),
            right: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    if truth.iter().chain(predictions).any(|&l| l == 0) {
        return Err(Error::InvalidConfig(
            "evaluation labels must be nonzero class ids".into(),
        ));
    }

    let mut class_ids: Vec<u16> = truth.iter().chain(predictions).copied().collect();
    class_ids.sort_unstable();
    class_ids.dedup();
    let index = |l: u16| class_ids.binary_search(&l).expect("id collected above");

    let c = class_ids.len();
    let mut confusion = Array2::<u64>::zeros((c, c));
    for (&p, &t) in predictions.iter().zip(truth) {
        confusion[[index(t), index(p)]] += 1;
    }
    EvalReport::from_confusion_with_ids(confusion, class_ids)
}

/// A per-class train/test partition of the labeled pixels, both halves
/// sorted row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<(usize, usize, u16)>,
    pub test: Vec<(usize, usize, u16)>,
}

/// Sample `ceil(fraction * count)` training pixels (at least 1) per class
/// without replacement, deterministically for a given seed. Class ids in
/// `1..=max` with no labeled pixels are skipped with a warning.
pub fn split_train_test(labels: &LabelMap, fraction: f64, seed: u64) -> Result<Split> {
    if !fraction.is_finite() || fraction <= 0.0 || fraction >= 1.0 {
        return Err(Error::InvalidFraction(fraction));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in 1..=labels.max_class() {
        let mut pixels: Vec<(usize, usize, u16)> = labels
            .iter_labeled()
            .filter(|&(_, _, l)| l == class)
            .collect();
        if pixels.is_empty() {
            log::warn!("class {class} has no labeled pixels; skipped");
            continue;
        }
        let n_train = ((fraction * pixels.len() as f64).ceil() as usize).max(1);
        let (selected, rest) = pixels.partial_shuffle(&mut rng, n_train);
        train.extend_from_slice(selected);
        test.extend_from_slice(rest);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}
