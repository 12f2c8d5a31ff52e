//! Small statistics helpers for frequency reports.

/// Standard error of an empirical frequency `p` over `n` trials.
pub fn binomial_stderr(p: f64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    (p.clamp(0.0, 1.0) * (1.0 - p.clamp(0.0, 1.0)) / n as f64).sqrt()
}

/// Pearson chi-square statistic of observed counts against expected
/// probabilities. Cells with expected probability zero are skipped when the
/// observed count is also zero.
pub fn chi_square_statistic(observed: &[u64], expected_probs: &[f64], trials: u64) -> f64 {
    assert_eq!(observed.len(), expected_probs.len());
    let n = trials as f64;
    let mut stat = 0.0;
    for (&obs, &p) in observed.iter().zip(expected_probs) {
        let expected = p * n;
        if expected > 0.0 {
            let d = obs as f64 - expected;
            stat += d * d / expected;
        } else if obs > 0 {
            stat = f64::INFINITY;
        }
    }
    stat
}

/// Upper quantile of the chi-square distribution with `dof` degrees of
/// freedom via the Wilson-Hilferty cube approximation. `z` is the standard
/// normal quantile of the same tail probability.
pub fn chi_square_critical(dof: u64, z: f64) -> f64 {
    let k = dof as f64;
    if dof == 0 {
        return 0.0;
    }
    let t = 1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt();
    k * t * t * t
}

/// Standard normal quantile for the 0.001 upper tail.
pub const Z_999: f64 = 3.090_232_306_167_813;

/// Chi-square goodness-of-fit decision at significance 0.001.
pub fn chi_square_passes(observed: &[u64], expected_probs: &[f64], trials: u64) -> bool {
    let dof = observed.len().saturating_sub(1) as u64;
    if dof == 0 {
        return true;
    }
    chi_square_statistic(observed, expected_probs, trials) <= chi_square_critical(dof, Z_999)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stderr_half() {
        assert!((binomial_stderr(0.5, 10_000) - 0.005).abs() < 1e-12);
        assert_eq!(binomial_stderr(0.5, 0), 0.0);
    }

    #[test]
    fn chi_square_exact_fit_is_zero() {
        assert_eq!(chi_square_statistic(&[50, 50], &[0.5, 0.5], 100), 0.0);
    }

    #[test]
    fn chi_square_detects_gross_misfit() {
        let stat = chi_square_statistic(&[90, 10], &[0.5, 0.5], 100);
        assert!((stat - 64.0).abs() < 1e-12);
        assert!(!chi_square_passes(&[90, 10], &[0.5, 0.5], 100));
    }

    #[test]
    fn chi_square_impossible_cell() {
        assert!(chi_square_statistic(&[1, 99], &[0.0, 1.0], 100).is_infinite());
        assert_eq!(chi_square_statistic(&[0, 100], &[0.0, 1.0], 100), 0.0);
    }

    #[test]
    fn critical_values_match_tables() {
        // Reference chi-square 0.999 quantiles: 1 dof 10.828, 3 dof 16.266,
        // 9 dof 27.877. Wilson-Hilferty overshoots by a few tenths at low
        // dof, which only loosens the pass threshold slightly.
        let c1 = chi_square_critical(1, Z_999);
        let c3 = chi_square_critical(3, Z_999);
        let c9 = chi_square_critical(9, Z_999);
        assert!(c1 >= 10.828 && (c1 - 10.828).abs() < 0.5, "c1 {c1}");
        assert!(c3 >= 16.266 && (c3 - 16.266).abs() < 0.4, "c3 {c3}");
        assert!(c9 >= 27.877 && (c9 - 27.877).abs() < 0.3, "c9 {c9}");
    }

    #[test]
    fn plausible_sample_passes() {
        assert!(chi_square_passes(&[5_030, 4_970], &[0.5, 0.5], 10_000));
    }
}
