//! Finite-difference verification of analytic gradients.
//!
//! All checks run at 64-bit precision with central differences
//! `(f(x+h) - f(x-h)) / 2h`.

use super::tensor::Tensor;

/// Outcome of a gradient check. Failure is a report, not an error.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub mean_rel_error: f64,
    pub tolerance: f64,
    pub checked: usize,
    pub pass: bool,
    /// Flat index of the worst element.
    pub worst_index: usize,
}

fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compares an analytic gradient against central differences of `f` at
/// `point`, over every element.
pub fn grad_check(
    f: &mut dyn FnMut(&Tensor<f64>) -> f64,
    point: &Tensor<f64>,
    analytic: &Tensor<f64>,
    perturbation: f64,
    tolerance: f64,
) -> GradCheckReport {
    let indices: Vec<usize> = (0..point.len()).collect();
    grad_check_at(f, point, analytic, &indices, perturbation, tolerance)
}

/// Same as [`grad_check`] but probes only the given flat indices, for use
/// on parameter sets too large to sweep exhaustively.
pub fn grad_check_at(
    f: &mut dyn FnMut(&Tensor<f64>) -> f64,
    point: &Tensor<f64>,
    analytic: &Tensor<f64>,
    indices: &[usize],
    perturbation: f64,
    tolerance: f64,
) -> GradCheckReport {
    assert_eq!(point.shape(), analytic.shape(), "gradient shape mismatch");
    let mut probe = point.clone();
    let mut max_rel = 0.0f64;
    let mut sum_rel = 0.0f64;
    let mut worst = 0usize;
    for &i in indices {
        let original = probe.data()[i];
        probe.data_mut()[i] = original + perturbation;
        let plus = f(&probe);
        probe.data_mut()[i] = original - perturbation;
        let minus = f(&probe);
        probe.data_mut()[i] = original;
        let numeric = (plus - minus) / (2.0 * perturbation);
        let rel = rel_error(analytic.data()[i], numeric);
        sum_rel += rel;
        if rel > max_rel {
            max_rel = rel;
            worst = i;
        }
    }
    let checked = indices.len();
    GradCheckReport {
        max_rel_error: max_rel,
        mean_rel_error: if checked == 0 { 0.0 } else { sum_rel / checked as f64 },
        tolerance,
        checked,
        pass: max_rel <= tolerance,
        worst_index: worst,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng;
    use rand::Rng;

    #[test]
    fn linear_operation_is_exact() {
        let mut r = rng(3);
        let point = Tensor::<f64>::from_vec(
            [1, 1, 2, 3],
            (0..6).map(|_| r.gen_range(0.5..1.5)).collect(),
        )
        .unwrap();
        // f(x) = sum(3x): gradient is 3 everywhere.
        let analytic = Tensor::filled([1, 1, 2, 3], 3.0);
        let report = grad_check(
            &mut |t| t.data().iter().map(|&v| 3.0 * v).sum(),
            &point,
            &analytic,
            1e-5,
            1e-10,
        );
        assert!(report.pass, "max rel error {}", report.max_rel_error);
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        let point = Tensor::<f64>::filled([1, 1, 1, 4], 1.0);
        let analytic = Tensor::filled([1, 1, 1, 4], 3.0 * 1.01);
        let report = grad_check(
            &mut |t| t.data().iter().map(|&v| 3.0 * v).sum(),
            &point,
            &analytic,
            1e-5,
            1e-4,
        );
        assert!(!report.pass);
        assert!(report.max_rel_error > 5e-3);
    }

    #[test]
    fn quadratic_matches_within_tolerance() {
        let mut r = rng(17);
        let point = Tensor::<f64>::from_vec(
            [1, 1, 2, 2],
            (0..4).map(|_| r.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let analytic = point.map(|v| 2.0 * v);
        let report = grad_check(
            &mut |t| t.data().iter().map(|&v| v * v).sum(),
            &point,
            &analytic,
            1e-5,
            1e-6,
        );
        assert!(report.pass, "max rel error {}", report.max_rel_error);
    }
}
