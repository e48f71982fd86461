//! Confusion matrix with overall accuracy, average accuracy, and Cohen's
//! kappa.

use ndarray::Array2;

use crate::error::{Error, Result};

/// K x K counts; entry (i, j) counts samples of true class i+1 predicted as
/// class j+1.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfusionMatrix {
    counts: Array2<u64>,
}

impl ConfusionMatrix {
    pub fn zeros(k: usize) -> Self {
        Self {
            counts: Array2::zeros((k, k)),
        }
    }

    /// Builds from parallel prediction/label slices with values in 1..=K.
    pub fn from_predictions(preds: &[usize], labels: &[usize], k: usize) -> Result<Self> {
        if preds.len() != labels.len() {
            return Err(Error::ShapeMismatch {
                left: vec![preds.len()],
                right: vec![labels.len()],
            });
        }
        let mut counts = Array2::<u64>::zeros((k, k));
        for (&p, &l) in preds.iter().zip(labels.iter()) {
            for v in [p, l] {
                if v < 1 || v > k {
                    return Err(Error::LabelOutOfRange {
                        label: v as i64,
                        k,
                    });
                }
            }
            counts[[l - 1, p - 1]] += 1;
        }
        Ok(Self { counts })
    }

    pub fn from_counts(counts: Array2<u64>) -> Self {
        Self { counts }
    }

    pub fn k(&self) -> usize {
        self.counts.nrows()
    }

    pub fn counts(&self) -> &Array2<u64> {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.sum()
    }

    fn trace(&self) -> u64 {
        (0..self.k()).map(|i| self.counts[[i, i]]).sum()
    }

    /// Overall accuracy: trace / total.
    pub fn oa(&self) -> Result<f64> {
        let total = self.total();
        if total == 0 {
            return Err(Error::EmptyConfusion);
        }
        Ok(self.trace() as f64 / total as f64)
    }

    /// Per-class recall; None for zero-support classes.
    pub fn per_class_recall(&self) -> Vec<Option<f64>> {
        (0..self.k())
            .map(|i| {
                let support: u64 = self.counts.row(i).sum();
                if support == 0 {
                    None
                } else {
                    Some(self.counts[[i, i]] as f64 / support as f64)
                }
            })
            .collect()
    }

    /// Average accuracy: mean per-class recall. Zero-support classes are
    /// excluded from the mean and reported back (1-based ids).
    pub fn aa(&self) -> Result<(f64, Vec<usize>)> {
        if self.total() == 0 {
            return Err(Error::EmptyConfusion);
        }
        let recalls = self.per_class_recall();
        let excluded: Vec<usize> = recalls
            .iter()
            .enumerate()
            .filter(|(_, r)| r.is_none())
            .map(|(i, _)| i + 1)
            .collect();
        let present: Vec<f64> = recalls.into_iter().flatten().collect();
        let aa = present.iter().sum::<f64>() / present.len() as f64;
        Ok((aa, excluded))
    }

    /// Cohen's kappa: (p_o - p_e) / (1 - p_e) with
    /// p_e = sum_i row_i * col_i / total^2.
    pub fn kappa(&self) -> Result<f64> {
        let total = self.total();
        if total == 0 {
            return Err(Error::EmptyConfusion);
        }
        let t = total as f64;
        let p_o = self.trace() as f64 / t;
        let mut p_e = 0.0;
        for i in 0..self.k() {
            let row: u64 = self.counts.row(i).sum();
            let col: u64 = self.counts.column(i).sum();
            p_e += (row as f64) * (col as f64) / (t * t);
        }
        if (1.0 - p_e).abs() < 1e-15 {
            return Err(Error::KappaUndefined);
        }
        Ok((p_o - p_e) / (1.0 - p_e))
    }

    /// CSV rendering: header row `true\pred,1,...,K`, one row per true class.
    pub fn to_csv(&self) -> String {
        let k = self.k();
        let mut out = String::from("true\\pred");
        for j in 1..=k {
            out.push_str(&format!(",{j}"));
        }
        out.push('\n');
        for i in 0..k {
            out.push_str(&format!("{}", i + 1));
            for j in 0..k {
                out.push_str(&format!(",{}", self.counts[[i, j]]));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::arr2;

    #[test]
    fn perfect_predictions_give_diagonal() {
        let labels = [1usize, 2, 3, 1, 2, 3];
        let cm = ConfusionMatrix::from_predictions(&labels, &labels, 3).unwrap();
        assert_eq!(cm.oa().unwrap(), 1.0);
        let (aa, excluded) = cm.aa().unwrap();
        assert_eq!(aa, 1.0);
        assert!(excluded.is_empty());
        assert_eq!(cm.kappa().unwrap(), 1.0);
    }

    #[test]
    fn empty_input_is_zero_matrix() {
        let cm = ConfusionMatrix::from_predictions(&[], &[], 3).unwrap();
        assert_eq!(cm.total(), 0);
        assert!(matches!(cm.oa(), Err(Error::EmptyConfusion)));
    }

    #[test]
    fn hand_counted_two_class() {
        // labels [1,1,2,2], preds [1,2,2,2] -> [[1,1],[0,2]]
        let cm =
            ConfusionMatrix::from_predictions(&[1, 2, 2, 2], &[1, 1, 2, 2], 2).unwrap();
        assert_eq!(cm.counts(), &arr2(&[[1u64, 1], [0, 2]]));
    }

    #[test]
    fn hand_computed_metrics() {
        // [[45, 5], [10, 40]]: OA 0.85, AA 0.85, kappa 0.70
        let cm = ConfusionMatrix::from_counts(arr2(&[[45u64, 5], [10, 40]]));
        assert_abs_diff_eq!(cm.oa().unwrap(), 0.85, epsilon = 1e-15);
        let (aa, _) = cm.aa().unwrap();
        assert_abs_diff_eq!(aa, 0.85, epsilon = 1e-15);
        assert_abs_diff_eq!(cm.kappa().unwrap(), 0.70, epsilon = 1e-12);
    }

    #[test]
    fn zero_support_class_excluded_from_aa() {
        let cm = ConfusionMatrix::from_counts(arr2(&[[8u64, 2, 0], [1, 9, 0], [0, 0, 0]]));
        let (aa, excluded) = cm.aa().unwrap();
        assert_eq!(excluded, vec![3]);
        assert_abs_diff_eq!(aa, (0.8 + 0.9) / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn kappa_undefined_on_single_cell() {
        let cm = ConfusionMatrix::from_counts(arr2(&[[10u64, 0], [0, 0]]));
        assert!(matches!(cm.kappa(), Err(Error::KappaUndefined)));
    }

    #[test]
    fn kappa_permutation_invariance() {
        let base = arr2(&[[30u64, 4, 2], [5, 25, 6], [1, 3, 24]]);
        let cm = ConfusionMatrix::from_counts(base.clone());
        // permute classes (1,2,3) -> (3,1,2) on both axes
        let perm = [2usize, 0, 1];
        let mut permuted = Array2::<u64>::zeros((3, 3));
        for i in 0..3 {
            for j in 0..3 {
                permuted[[perm[i], perm[j]]] = base[[i, j]];
            }
        }
        let cm2 = ConfusionMatrix::from_counts(permuted);
        assert_abs_diff_eq!(cm.kappa().unwrap(), cm2.kappa().unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn independent_predictions_have_near_zero_kappa() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(101);
        let n = 20_000;
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(1..=3)).collect();
        let preds: Vec<usize> = (0..n).map(|_| rng.random_range(1..=3)).collect();
        let cm = ConfusionMatrix::from_predictions(&preds, &labels, 3).unwrap();
        assert!(cm.kappa().unwrap().abs() < 0.05);
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(matches!(
            ConfusionMatrix::from_predictions(&[4], &[1], 3),
            Err(Error::LabelOutOfRange { label: 4, k: 3 })
        ));
    }
}
