use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("gold has {gold} labels but pred has {pred}")]
    LengthMismatch { gold: usize, pred: usize },
    #[error("no labels to score")]
    EmptyInput,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl ClassCounts {
    /// 2PR / (P + R), with every 0/0 taken as 0.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            0.0
        } else {
            (2 * self.tp) as f64 / denom as f64
        }
    }
}

/// One-vs-rest counts for every class in gold ∪ pred.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionCounts<L: Ord> {
    pub per_class: BTreeMap<L, ClassCounts>,
    pub total: usize,
}

impl<L: Ord + Clone> ConfusionCounts<L> {
    pub fn from_labels(gold: &[L], pred: &[L]) -> Result<Self, MetricError> {
        if gold.len() != pred.len() {
            return Err(MetricError::LengthMismatch { gold: gold.len(), pred: pred.len() });
        }
        if gold.is_empty() {
            return Err(MetricError::EmptyInput);
        }
        let classes: BTreeSet<&L> = gold.iter().chain(pred).collect();
        let mut per_class: BTreeMap<L, ClassCounts> =
            classes.into_iter().map(|c| (c.clone(), ClassCounts::default())).collect();
        for (g, p) in gold.iter().zip(pred) {
            for (class, counts) in per_class.iter_mut() {
                match (g == class, p == class) {
                    (true, true) => counts.tp += 1,
                    (false, true) => counts.fp += 1,
                    (true, false) => counts.fn_ += 1,
                    (false, false) => counts.tn += 1,
                }
            }
        }
        Ok(Self { per_class, total: gold.len() })
    }

    pub fn pooled(&self) -> ClassCounts {
        self.per_class.values().fold(ClassCounts::default(), |acc, c| ClassCounts {
            tp: acc.tp + c.tp,
            fp: acc.fp + c.fp,
            fn_: acc.fn_ + c.fn_,
            tn: acc.tn + c.tn,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct F1Scores<L: Ord> {
    pub per_class: BTreeMap<L, f64>,
    pub macro_f1: f64,
    pub micro_f1: f64,
}

/// Per-class, macro (unweighted mean over gold ∪ pred) and micro F1.
pub fn f1_scores<L: Ord + Clone>(gold: &[L], pred: &[L]) -> Result<F1Scores<L>, MetricError> {
    let counts = ConfusionCounts::from_labels(gold, pred)?;
    let per_class: BTreeMap<L, f64> = counts.per_class.iter().map(|(l, c)| (l.clone(), c.f1())).collect();
    let macro_f1 = per_class.values().sum::<f64>() / per_class.len() as f64;
    let micro_f1 = counts.pooled().f1();
    Ok(F1Scores { per_class, macro_f1, micro_f1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_example() {
        let s = f1_scores(&["cw", "cw", "n", "n"], &["cw", "n", "n", "n"]).unwrap();
        // CW: tp 1, fp 0, fn 1 -> P 1, R 1/2. N: tp 2, fp 1, fn 0 -> P 2/3, R 1.
        assert!((s.per_class["cw"] - 2.0 / 3.0).abs() < 1e-12);
        assert!((s.per_class["n"] - 0.8).abs() < 1e-12);
        assert!((s.macro_f1 - (2.0 / 3.0 + 0.8) / 2.0).abs() < 1e-12);
        assert!((s.micro_f1 - 0.75).abs() < 1e-12);
    }

    #[test]
    fn perfect_and_zero() {
        let s = f1_scores(&[1, 2, 2, 3], &[1, 2, 2, 3]).unwrap();
        assert_eq!((s.macro_f1, s.micro_f1), (1.0, 1.0));
        let s = f1_scores(&["cw"; 5], &["n"; 5]).unwrap();
        assert_eq!((s.macro_f1, s.micro_f1), (0.0, 0.0));
    }

    #[test]
    fn errors() {
        assert_eq!(f1_scores::<u8>(&[], &[]).unwrap_err(), MetricError::EmptyInput);
        assert_eq!(f1_scores(&[1], &[1, 2]).unwrap_err(), MetricError::LengthMismatch { gold: 1, pred: 2 });
    }

    proptest! {
        #[test]
        fn micro_is_accuracy(pairs in prop::collection::vec((0u8..4, 0u8..4), 1..40)) {
            let (gold, pred): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
            let s = f1_scores(&gold, &pred).unwrap();
            let acc = gold.iter().zip(&pred).filter(|(g, p)| g == p).count() as f64 / gold.len() as f64;
            prop_assert!((s.micro_f1 - acc).abs() < 1e-12);
        }

        #[test]
        fn macro_invariant_under_renaming(pairs in prop::collection::vec((0u8..3, 0u8..3), 1..30), shift in 1u8..3) {
            let (gold, pred): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
            let rename = |v: &[u8]| v.iter().map(|x| (x + shift) % 3 + 10).collect::<Vec<_>>();
            let a = f1_scores(&gold, &pred).unwrap();
            let b = f1_scores(&rename(&gold), &rename(&pred)).unwrap();
            prop_assert!((a.macro_f1 - b.macro_f1).abs() < 1e-12);
        }
    }
}
