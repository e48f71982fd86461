//! Actual-vs-generated distribution diagnostics: shared-bin histograms and
//! the two-sample Kolmogorov-Smirnov statistic.

use crate::error::{Error, Result};

/// Histogram of one variable (channel, plane) over both samples, plus the
/// KS statistic computed on the raw values.
#[derive(Clone, Debug)]
pub struct HistogramReport {
    pub channel: String,
    pub plane: &'static str,
    pub edges: Vec<f64>,
    pub count_actual: Vec<u64>,
    pub count_generated: Vec<u64>,
    pub ks: f64,
}

/// Two-sample Kolmogorov-Smirnov statistic D = sup |F_a - F_g|.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample {
            what: "KS statistic",
        });
    }
    let mut xs: Vec<f64> = a.to_vec();
    let mut ys: Vec<f64> = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).expect("finite samples"));
    ys.sort_by(|p, q| p.partial_cmp(q).expect("finite samples"));
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let t = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d)
}

/// Builds shared bin edges spanning the pooled range and counts both
/// samples; the KS statistic comes from the unbinned values.
pub fn histogram_compare(
    channel: &str,
    plane: &'static str,
    actual: &[f64],
    generated: &[f64],
    bins: usize,
) -> Result<HistogramReport> {
    if actual.is_empty() || generated.is_empty() {
        return Err(Error::EmptySample {
            what: "histogram comparison",
        });
    }
    let bins = bins.max(1);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in actual.iter().chain(generated.iter()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    // degenerate pooled range: widen so edges stay strictly increasing
    if hi <= lo {
        let pad = lo.abs().max(1.0) * 1e-9;
        lo -= pad;
        hi += pad;
    }
    let step = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| lo + step * i as f64).collect();
    let bin_of = |v: f64| -> usize {
        let idx = ((v - lo) / step) as usize;
        idx.min(bins - 1)
    };
    let mut count_actual = vec![0u64; bins];
    for &v in actual {
        count_actual[bin_of(v)] += 1;
    }
    let mut count_generated = vec![0u64; bins];
    for &v in generated {
        count_generated[bin_of(v)] += 1;
    }
    Ok(HistogramReport {
        channel: channel.to_string(),
        plane,
        edges,
        count_actual,
        count_generated,
        ks: ks_statistic(actual, generated)?,
    })
}

impl HistogramReport {
    /// Rows in the report CSV: `channel,plane,bin_left,bin_right,
    /// count_actual,count_generated`, then a `# ks=` comment line.
    pub fn append_csv(&self, out: &mut String) {
        for i in 0..self.count_actual.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.channel,
                self.plane,
                self.edges[i],
                self.edges[i + 1],
                self.count_actual[i],
                self.count_generated[i]
            ));
        }
        out.push_str(&format!("# ks={}\n", self.ks));
    }
}

/// Full CSV for a set of reports, with the shared header line.
pub fn reports_to_csv(reports: &[HistogramReport]) -> String {
    let mut out = String::from("channel,plane,bin_left,bin_right,count_actual,count_generated\n");
    for r in reports {
        r.append_csv(&mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn identical_samples_have_zero_ks() {
        let a = vec![0.5, 1.0, -2.0, 3.5, 0.0];
        assert_eq!(ks_statistic(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn disjoint_supports_have_ks_near_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(111);
        let a: Vec<f64> = (0..1000).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let b: Vec<f64> = (0..1000)
            .map(|_| 10.0 + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let d = ks_statistic(&a, &b).unwrap();
        assert!(d > 0.9, "D = {d}");
        assert!(d <= 1.0);
    }

    #[test]
    fn ks_is_symmetric_and_monotone_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(112);
        let a: Vec<f64> = (0..400).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..300).map(|_| rng.random_range(-0.5..1.5)).collect();
        let d_ab = ks_statistic(&a, &b).unwrap();
        let d_ba = ks_statistic(&b, &a).unwrap();
        assert!((d_ab - d_ba).abs() < 1e-15);

        // strictly increasing transform applied to both samples
        let f = |v: f64| (2.0 * v).exp() + 3.0 * v;
        let fa: Vec<f64> = a.iter().map(|&v| f(v)).collect();
        let fb: Vec<f64> = b.iter().map(|&v| f(v)).collect();
        let d_f = ks_statistic(&fa, &fb).unwrap();
        assert!((d_ab - d_f).abs() < 1e-12);
    }

    #[test]
    fn ks_bounded_in_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(113);
        for _ in 0..20 {
            let n = rng.random_range(1..50);
            let m = rng.random_range(1..50);
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let b: Vec<f64> = (0..m).map(|_| rng.random_range(-5.0..5.0)).collect();
            let d = ks_statistic(&a, &b).unwrap();
            assert!((0.0..=1.0).contains(&d));
        }
    }

    #[test]
    fn ks_with_ties_across_samples() {
        // all mass tied: D must be 0, not an off-by-one artifact
        let a = vec![1.0, 1.0, 1.0];
        let b = vec![1.0, 1.0];
        assert_eq!(ks_statistic(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn histogram_counts_sum_to_sample_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(114);
        let a: Vec<f64> = (0..500).map(|_| rng.random_range(-2.0..2.0)).collect();
        let b: Vec<f64> = (0..700).map(|_| rng.random_range(-1.0..3.0)).collect();
        let rep = histogram_compare("T11", "re", &a, &b, 32).unwrap();
        assert_eq!(rep.count_actual.iter().sum::<u64>(), 500);
        assert_eq!(rep.count_generated.iter().sum::<u64>(), 700);
        assert_eq!(rep.edges.len(), 33);
        for w in rep.edges.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn empty_sample_rejected() {
        assert!(matches!(
            ks_statistic(&[], &[1.0]),
            Err(Error::EmptySample { .. })
        ));
        assert!(histogram_compare("T11", "re", &[], &[1.0], 8).is_err());
    }

    #[test]
    fn csv_shape() {
        let rep = histogram_compare("T12", "im", &[1.0, 2.0], &[1.5], 4).unwrap();
        let csv = reports_to_csv(&[rep]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "channel,plane,bin_left,bin_right,count_actual,count_generated");
        assert_eq!(lines.len(), 1 + 4 + 1);
        assert!(lines.last().unwrap().starts_with("# ks="));
    }
}
