//! Parameter initialization: bilinear upsampling kernels and truncated
//! Gaussian draws.

use rand_distr::{Distribution, Normal};

use super::tensor::{Scalar, Tensor};
use super::NumericsError;
use crate::seed;

/// Per-channel transposed-convolution kernel that performs bilinear
/// upsampling by `factor`.
///
/// Kernel size is `k = 2*factor - (factor % 2)` with the separable 1-D
/// profile `w[i] = 1 - |i - c| / factor`, `c = (k - 1) / 2`. Cross-channel
/// entries are zero. Applied with stride `factor` and cropping chosen for
/// exact extent multiplication, interior pixels reproduce bilinear
/// interpolation.
pub fn bilinear_kernel<T: Scalar>(factor: usize, channels: usize) -> Tensor<T> {
    assert!(factor >= 1, "factor must be >= 1");
    let k = 2 * factor - (factor % 2);
    let c = (k as f64 - 1.0) / 2.0;
    let profile: Vec<f64> = (0..k)
        .map(|i| 1.0 - (i as f64 - c).abs() / factor as f64)
        .collect();
    let mut kernel = Tensor::zeros([channels, channels, k, k]);
    for ch in 0..channels {
        for (i, &wi) in profile.iter().enumerate() {
            for (j, &wj) in profile.iter().enumerate() {
                *kernel.at_mut(ch, ch, i, j) = T::from_f64(wi * wj);
            }
        }
    }
    kernel
}

/// Default standard deviation when a caller asks for a "low" one.
pub const DEFAULT_TRUNC_STD: f64 = 0.01;

/// Seeded draws from `N(0, std^2)` with resampling of anything outside
/// `[-2*std, 2*std]`.
pub fn truncated_gaussian_init<T: Scalar>(
    shape: [usize; 4],
    std: f64,
    rng_seed: u64,
) -> Result<Tensor<T>, NumericsError> {
    if std <= 0.0 || !std.is_finite() {
        return Err(NumericsError::InvalidArgument {
            context: "truncated_gaussian_init",
            detail: format!("std must be positive and finite, got {std}"),
        });
    }
    let normal = Normal::new(0.0f64, std).expect("std validated above");
    let mut rng = seed::rng(rng_seed);
    let bound = 2.0 * std;
    let n: usize = shape.iter().product();
    let mut data = Vec::with_capacity(n);
    while data.len() < n {
        let v = normal.sample(&mut rng);
        if v.abs() <= bound {
            data.push(T::from_f64(v));
        }
    }
    Tensor::from_vec(shape, data)
}
