//! Adaptive step-up decision rules on monotonized estimates.

use crate::error::{FdrError, Result};
use crate::histogram::Histogram;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecisionRule {
    /// Largest `u` whose running mean of sorted local fdr values is `<= α`.
    LocalFdrStepUp,
    /// Every hypothesis whose tail Fdr is `<= α`.
    TailFdrThreshold,
}

impl std::fmt::Display for DecisionRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DecisionRule::LocalFdrStepUp => "local",
            DecisionRule::TailFdrThreshold => "tail",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionReport {
    pub rejected: Vec<bool>,
    /// Number of rejections.
    pub u: usize,
    pub rule: DecisionRule,
    pub alpha: f64,
    pub per_hypothesis_stat: Vec<f64>,
}

/// Realized error proportions of one decision report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorScore {
    pub fdp: f64,
    pub fnp: f64,
    pub rejections: usize,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(FdrError::InvalidArgument(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

/// Hypothesis indices sorted by value, ties broken by index.
fn ascending(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    order
}

fn reject_first(values: &[f64], order: &[usize], u: usize, rule: DecisionRule, alpha: f64) -> DecisionReport {
    let mut rejected = vec![false; values.len()];
    for &i in &order[..u] {
        rejected[i] = true;
    }
    DecisionReport {
        rejected,
        u,
        rule,
        alpha,
        per_hypothesis_stat: values.to_vec(),
    }
}

fn local_step_up_count(values: &[f64], order: &[usize], alpha: f64) -> usize {
    let mut sum = 0.0;
    let mut u = 0;
    for (j, &i) in order.iter().enumerate() {
        sum += values[i];
        if sum / (j + 1) as f64 <= alpha {
            u = j + 1;
        }
    }
    u
}

/// Step-up rule on local fdr values.
pub fn adaptive_reject_local(values: &[f64], alpha: f64) -> Result<DecisionReport> {
    check_alpha(alpha)?;
    let order = ascending(values);
    let u = local_step_up_count(values, &order, alpha);
    Ok(reject_first(values, &order, u, DecisionRule::LocalFdrStepUp, alpha))
}

/// Step-up rule on local fdr values applied separately to hypotheses below
/// and at-or-above `split`.
pub fn adaptive_reject_local_per_tail(values: &[f64], stats: &[f64], split: f64, alpha: f64) -> Result<DecisionReport> {
    check_alpha(alpha)?;
    if values.len() != stats.len() {
        return Err(FdrError::DimensionMismatch {
            expected: stats.len(),
            got: values.len(),
        });
    }
    let mut rejected = vec![false; values.len()];
    let mut u = 0;
    for upper in [false, true] {
        let members: Vec<usize> = (0..stats.len()).filter(|&i| (stats[i] >= split) == upper).collect();
        let sub: Vec<f64> = members.iter().map(|&i| values[i]).collect();
        let order = ascending(&sub);
        let count = local_step_up_count(&sub, &order, alpha);
        for &p in &order[..count] {
            rejected[members[p]] = true;
        }
        u += count;
    }
    Ok(DecisionReport {
        rejected,
        u,
        rule: DecisionRule::LocalFdrStepUp,
        alpha,
        per_hypothesis_stat: values.to_vec(),
    })
}

/// Threshold rule on tail Fdr values.
pub fn adaptive_reject_tail(values: &[f64], alpha: f64) -> Result<DecisionReport> {
    check_alpha(alpha)?;
    let order = ascending(values);
    let u = order.iter().take_while(|&&i| values[i] <= alpha).count();
    Ok(reject_first(values, &order, u, DecisionRule::TailFdrThreshold, alpha))
}

/// Looks up each statistic's bin value; out-of-range statistics take the
/// nearest edge bin.
pub fn per_hypothesis_values(stats: &[f64], hist: &Histogram, by_bin: &[f64]) -> Result<Vec<f64>> {
    if by_bin.len() != hist.len() {
        return Err(FdrError::DimensionMismatch {
            expected: hist.len(),
            got: by_bin.len(),
        });
    }
    if let Some(index) = stats.iter().position(|t| !t.is_finite()) {
        return Err(FdrError::NonFinite { index });
    }
    Ok(stats.iter().map(|&t| by_bin[hist.nearest_bin(t)]).collect())
}

/// Realized FDP and FNP given truth flags (`true` = non-null).
pub fn score(report: &DecisionReport, truth: &[bool]) -> Result<ErrorScore> {
    if report.rejected.len() != truth.len() {
        return Err(FdrError::DimensionMismatch {
            expected: report.rejected.len(),
            got: truth.len(),
        });
    }
    let mut false_disc = 0usize;
    let mut false_nondisc = 0usize;
    let mut rejections = 0usize;
    for (&r, &nonnull) in report.rejected.iter().zip(truth) {
        if r {
            rejections += 1;
            false_disc += usize::from(!nonnull);
        } else {
            false_nondisc += usize::from(nonnull);
        }
    }
    let accepted = truth.len() - rejections;
    Ok(ErrorScore {
        fdp: false_disc as f64 / rejections.max(1) as f64,
        fnp: false_nondisc as f64 / accepted.max(1) as f64,
        rejections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn local_rule_examples() {
        let r = adaptive_reject_local(&[0.01, 0.02, 0.10], 0.05).unwrap();
        assert_eq!(r.u, 3);
        assert!(r.rejected.iter().all(|&x| x));
        let r = adaptive_reject_local(&[0.06, 0.07], 0.05).unwrap();
        assert_eq!(r.u, 0);
        assert!(r.rejected.iter().all(|&x| !x));
        let r = adaptive_reject_local(&[0.02, 0.06], 0.05).unwrap();
        assert_eq!(r.u, 2);
    }

    #[test]
    fn tail_rule_examples() {
        assert_eq!(adaptive_reject_tail(&[0.01, 0.04, 0.06], 0.05).unwrap().u, 2);
        assert_eq!(adaptive_reject_tail(&[0.3, 0.4], 0.05).unwrap().u, 0);
        let v = [0.2, 0.05, 0.11];
        assert_eq!(adaptive_reject_tail(&v, 0.2).unwrap().u, 3);
    }

    #[test]
    fn ties_break_by_index() {
        let r = adaptive_reject_local(&[0.5, 0.04, 0.04, 0.5], 0.04).unwrap();
        assert_eq!(r.rejected, vec![false, true, true, false]);
        let r = adaptive_reject_tail(&[0.04, 0.04], 0.04).unwrap();
        assert_eq!(r.u, 2);
    }

    #[test]
    fn alpha_validation() {
        assert!(adaptive_reject_local(&[0.1], 0.0).is_err());
        assert!(adaptive_reject_tail(&[0.1], 1.0).is_err());
    }

    #[test]
    fn scoring() {
        let none = adaptive_reject_local(&[0.9, 0.8], 0.05).unwrap();
        let s = score(&none, &[true, false]).unwrap();
        assert_eq!(s.fdp, 0.0);
        assert_eq!(s.fnp, 0.5);

        let all = adaptive_reject_tail(&[0.01, 0.01], 0.05).unwrap();
        let s = score(&all, &[true, true]).unwrap();
        assert_eq!((s.fdp, s.fnp, s.rejections), (0.0, 0.0, 2));

        let mut values = vec![0.001; 10];
        values.extend(vec![0.9; 5]);
        let mut truth = vec![true; 9];
        truth.push(false);
        truth.extend(vec![false; 5]);
        let r = adaptive_reject_tail(&values, 0.05).unwrap();
        let s = score(&r, &truth).unwrap();
        assert!((s.fdp - 0.1).abs() < 1e-15);
        assert!(score(&r, &truth[1..]).is_err());
    }

    #[test]
    fn lookup_by_bin() {
        let h = Histogram::from_counts(0.0, 1.0, vec![1, 1, 1], 3).unwrap();
        let by_bin = [0.9, 0.5, 0.1];
        let v = per_hypothesis_values(&[0.5, 1.2, 1.7, 9.0, -4.0], &h, &by_bin).unwrap();
        assert_eq!(v, vec![0.9, 0.5, 0.5, 0.1, 0.9]);
    }

    #[test]
    fn per_tail_runs_each_side() {
        let values = [0.01, 0.5, 0.5, 0.01];
        let stats = [-3.0, -0.1, 0.1, 3.0];
        let r = adaptive_reject_local_per_tail(&values, &stats, 0.0, 0.05).unwrap();
        assert_eq!(r.rejected, vec![true, false, false, true]);
        assert_eq!(r.u, 2);
    }

    proptest! {
        #[test]
        fn rejections_monotone_in_alpha(
            values in prop::collection::vec(0.0f64..1.0, 1..60),
            a1 in 0.001f64..0.5,
            gap in 0.0f64..0.49,
        ) {
            let a2 = a1 + gap;
            for f in [adaptive_reject_local, adaptive_reject_tail] {
                let r1 = f(&values, a1).unwrap();
                let r2 = f(&values, a2).unwrap();
                for (x, y) in r1.rejected.iter().zip(&r2.rejected) {
                    prop_assert!(!x || *y);
                }
            }
        }

        #[test]
        fn local_report_invariants(values in prop::collection::vec(0.0f64..1.0, 1..60), alpha in 0.01f64..0.9) {
            let r = adaptive_reject_local(&values, alpha).unwrap();
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            if r.u > 0 {
                let m: f64 = sorted[..r.u].iter().sum::<f64>() / r.u as f64;
                prop_assert!(m <= alpha);
            }
            let max_rejected = values.iter().zip(&r.rejected).filter(|(_, &x)| x).map(|(v, _)| *v).fold(f64::NEG_INFINITY, f64::max);
            let min_kept = values.iter().zip(&r.rejected).filter(|(_, &x)| !x).map(|(v, _)| *v).fold(f64::INFINITY, f64::min);
            prop_assert!(max_rejected <= min_kept);
        }
    }
}
