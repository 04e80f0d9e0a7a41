//! Trainable parameter state and the Adam update.

use super::tensor::{Scalar, Tensor};
use super::NumericsError;

/// One trainable tensor with its gradient and Adam moment estimates.
#[derive(Clone, Debug)]
pub struct ParamState<T: Scalar> {
    pub value: Tensor<T>,
    pub grad: Tensor<T>,
    pub adam_m: Tensor<T>,
    pub adam_v: Tensor<T>,
    pub step_count: u64,
}

impl<T: Scalar> ParamState<T> {
    pub fn new(value: Tensor<T>) -> Self {
        let shape = value.shape();
        Self {
            value,
            grad: Tensor::zeros(shape),
            adam_m: Tensor::zeros(shape),
            adam_v: Tensor::zeros(shape),
            step_count: 0,
        }
    }

    pub fn zero_grad(&mut self) {
        for g in self.grad.data_mut() {
            *g = T::zero();
        }
    }

    /// Accumulates an increment into the stored gradient.
    pub fn accumulate_grad(&mut self, delta: &Tensor<T>) -> Result<(), NumericsError> {
        if delta.shape() != self.grad.shape() {
            return Err(NumericsError::ShapeMismatch {
                context: "accumulate_grad",
                dimension: "gradient shape",
                expected: format!("{:?}", self.grad.shape()),
                got: format!("{:?}", delta.shape()),
            });
        }
        for (g, &d) in self.grad.data_mut().iter_mut().zip(delta.data()) {
            *g = *g + d;
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> ParamState<U> {
        ParamState {
            value: self.value.cast(),
            grad: self.grad.cast(),
            adam_m: self.adam_m.cast(),
            adam_v: self.adam_v.cast(),
            step_count: self.step_count,
        }
    }
}

/// Adam hyperparameters; betas and epsilon default to the reference values.
#[derive(Clone, Copy, Debug)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn new(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One bias-corrected Adam update of a single parameter.
pub fn adam_update<T: Scalar>(
    param: &mut ParamState<T>,
    cfg: &AdamConfig,
) -> Result<(), NumericsError> {
    if cfg.learning_rate <= 0.0 || !cfg.learning_rate.is_finite() {
        return Err(NumericsError::InvalidArgument {
            context: "adam_update",
            detail: format!("learning rate must be positive, got {}", cfg.learning_rate),
        });
    }
    let t = param.step_count + 1;
    let beta1 = T::from_f64(cfg.beta1);
    let beta2 = T::from_f64(cfg.beta2);
    let one = T::one();
    let bias1 = T::from_f64(1.0 - cfg.beta1.powi(t as i32));
    let bias2 = T::from_f64(1.0 - cfg.beta2.powi(t as i32));
    let lr = T::from_f64(cfg.learning_rate);
    let eps = T::from_f64(cfg.epsilon);

    let value = param.value.data_mut();
    let grad = param.grad.data();
    let m = param.adam_m.data_mut();
    let v = param.adam_v.data_mut();
    for i in 0..value.len() {
        let g = grad[i];
        m[i] = beta1 * m[i] + (one - beta1) * g;
        v[i] = beta2 * v[i] + (one - beta2) * g * g;
        let m_hat = m[i] / bias1;
        let v_hat = v[i] / bias2;
        value[i] = value[i] - lr * m_hat / (v_hat.sqrt() + eps);
    }
    param.step_count = t;
    Ok(())
}

/// One Adam step over a list of parameters.
pub fn adam_step<T: Scalar>(
    params: &mut [ParamState<T>],
    cfg: &AdamConfig,
) -> Result<(), NumericsError> {
    for p in params.iter_mut() {
        adam_update(p, cfg)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_param(value: f64, grad: f64) -> ParamState<f64> {
        let mut p = ParamState::new(Tensor::from_vec([1, 1, 1, 1], vec![value]).unwrap());
        p.grad = Tensor::from_vec([1, 1, 1, 1], vec![grad]).unwrap();
        p
    }

    #[test]
    fn zero_gradient_leaves_value() {
        let mut p = scalar_param(3.0, 0.0);
        adam_update(&mut p, &AdamConfig::new(0.1)).unwrap();
        assert_eq!(p.value.data()[0], 3.0);
        assert_eq!(p.step_count, 1);
    }

    #[test]
    fn first_step_hand_value() {
        // Bias-corrected first step: 1.0 - 0.1 * 2 / (2 + 1e-8).
        let mut p = scalar_param(1.0, 2.0);
        adam_update(&mut p, &AdamConfig::new(0.1)).unwrap();
        let expected = 1.0 - 0.1 * (2.0 / (2.0 + 1e-8));
        assert!((p.value.data()[0] - expected).abs() < 1e-9);
        assert!((p.value.data()[0] - 0.9).abs() < 1e-6);
    }

    #[test]
    fn converges_on_quadratic_bowl() {
        // f(x) = x^2, gradient 2x, 200 steps at lr 0.1 from x = 5.
        let mut p = scalar_param(5.0, 0.0);
        let cfg = AdamConfig::new(0.1);
        for _ in 0..200 {
            let x = p.value.data()[0];
            p.grad = Tensor::from_vec([1, 1, 1, 1], vec![2.0 * x]).unwrap();
            adam_update(&mut p, &cfg).unwrap();
        }
        assert!(p.value.data()[0].abs() < 0.1, "x = {}", p.value.data()[0]);
        assert_eq!(p.step_count, 200);
    }

    #[test]
    fn rejects_non_positive_learning_rate() {
        let mut p = scalar_param(1.0, 1.0);
        assert!(adam_update(&mut p, &AdamConfig::new(0.0)).is_err());
        assert!(adam_update(&mut p, &AdamConfig::new(-0.1)).is_err());
    }

    #[test]
    fn first_step_magnitude_approximates_signed_lr() {
        for &g in &[5.0, -3.0, 0.5] {
            let mut p = scalar_param(0.0, g);
            adam_update(&mut p, &AdamConfig::new(0.01)).unwrap();
            let step = p.value.data()[0];
            assert!((step + 0.01 * g.signum()).abs() < 1e-6, "grad {g}: step {step}");
        }
    }
}
