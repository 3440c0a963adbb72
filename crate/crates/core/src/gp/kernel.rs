//! Matérn-5/2 kernel with automatic relevance determination.
//!
//! With `r² = Σ_d (a_d − b_d)² / ℓ_d²`:
//! `k(r) = σ_f² (1 + √5 r + 5r²/3) exp(−√5 r)`.
//! Derivatives with respect to the first argument are expressed through
//! `u_d = (a_d − b_d) / ℓ_d²`, which keeps them finite at `r = 0`.

const SQRT5: f64 = 2.236_067_977_499_79;

/// Kernel hyperparameters in natural units.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelParams {
    pub lengthscales: Vec<f64>,
    pub signal_std: f64,
    pub noise_std: f64,
}

impl KernelParams {
    pub const LENGTHSCALE_MIN: f64 = 0.031_622_776_601_683_79;
    pub const LENGTHSCALE_MAX: f64 = 31.622_776_601_683_79;
    pub const SIGNAL_STD_MIN: f64 = 0.031_622_776_601_683_79;
    pub const SIGNAL_STD_MAX: f64 = 31.622_776_601_683_79;
    pub const NOISE_VAR_MIN: f64 = 1e-6;
    pub const NOISE_VAR_MAX: f64 = 1e-3;

    pub fn new(lengthscales: Vec<f64>, signal_std: f64, noise_std: f64) -> Self {
        Self {
            lengthscales,
            signal_std,
            noise_std,
        }
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_std * self.noise_std
    }

    pub fn signal_var(&self) -> f64 {
        self.signal_std * self.signal_std
    }

    /// Packs into `[ln ℓ_1.., ln σ_f, ln σ_n²]`.
    pub fn to_log(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.lengthscales.iter().map(|l| l.ln()).collect();
        v.push(self.signal_std.ln());
        v.push(self.noise_var().ln());
        v
    }

    pub fn from_log(theta: &[f64]) -> Self {
        let d = theta.len() - 2;
        Self {
            lengthscales: theta[..d].iter().map(|t| t.exp()).collect(),
            signal_std: theta[d].exp(),
            noise_std: (theta[d + 1].exp()).sqrt(),
        }
    }

    /// Box bounds of the packed log parameters.
    pub fn log_bounds(dim: usize) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![Self::LENGTHSCALE_MIN.ln(); dim];
        let mut hi = vec![Self::LENGTHSCALE_MAX.ln(); dim];
        lo.push(Self::SIGNAL_STD_MIN.ln());
        hi.push(Self::SIGNAL_STD_MAX.ln());
        lo.push(Self::NOISE_VAR_MIN.ln());
        hi.push(Self::NOISE_VAR_MAX.ln());
        (lo, hi)
    }

    pub fn within_bounds(&self) -> bool {
        let tol = 1e-9;
        self.lengthscales.iter().all(|&l| {
            l >= Self::LENGTHSCALE_MIN * (1.0 - tol) && l <= Self::LENGTHSCALE_MAX * (1.0 + tol)
        }) && self.signal_std >= Self::SIGNAL_STD_MIN * (1.0 - tol)
            && self.signal_std <= Self::SIGNAL_STD_MAX * (1.0 + tol)
            && self.noise_var() >= Self::NOISE_VAR_MIN * (1.0 - tol)
            && self.noise_var() <= Self::NOISE_VAR_MAX * (1.0 + tol)
    }

    /// Clamps every parameter into its admissible interval.
    pub fn clamped(&self) -> Self {
        let (lo, hi) = Self::log_bounds(self.dim());
        let theta: Vec<f64> = self
            .to_log()
            .iter()
            .zip(lo.iter().zip(&hi))
            .map(|(t, (l, h))| t.clamp(*l, *h))
            .collect();
        Self::from_log(&theta)
    }
}

/// Scaled distance `r` between `a` and `b`.
pub fn scaled_distance(inv_ls2: &[f64], a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(inv_ls2)
        .map(|((x, y), w)| (x - y) * (x - y) * w)
        .sum::<f64>()
        .sqrt()
}

/// `k(r)` for a given signal variance.
pub fn value_at(signal_var: f64, r: f64) -> f64 {
    let s = SQRT5 * r;
    signal_var * (1.0 + s + s * s / 3.0) * (-s).exp()
}

/// `k(a, b)`.
pub fn value(p: &KernelParams, a: &[f64], b: &[f64]) -> f64 {
    let inv: Vec<f64> = p.lengthscales.iter().map(|l| 1.0 / (l * l)).collect();
    value_at(p.signal_var(), scaled_distance(&inv, a, b))
}

/// Gradient of `k(a, b)` with respect to `a`, accumulated as `out += scale · ∇k`.
/// Returns `k(a, b)`.
pub fn accumulate_grad(
    signal_var: f64,
    inv_ls2: &[f64],
    a: &[f64],
    b: &[f64],
    scale: f64,
    out: &mut [f64],
) -> f64 {
    let r = scaled_distance(inv_ls2, a, b);
    let s = SQRT5 * r;
    let e = (-s).exp();
    let g = -(5.0 / 3.0) * signal_var * (1.0 + s) * e;
    for d in 0..a.len() {
        out[d] += scale * g * (a[d] - b[d]) * inv_ls2[d];
    }
    signal_var * (1.0 + s + s * s / 3.0) * e
}

/// Hessian of `k(a, b)` with respect to `a`, accumulated as `out += scale · H`
/// into a row-major `D×D` buffer.
pub fn accumulate_hessian(
    signal_var: f64,
    inv_ls2: &[f64],
    a: &[f64],
    b: &[f64],
    scale: f64,
    out: &mut [f64],
) {
    let dim = a.len();
    let r = scaled_distance(inv_ls2, a, b);
    let s = SQRT5 * r;
    let e = (-s).exp();
    let g = -(5.0 / 3.0) * signal_var * (1.0 + s) * e;
    let c = (25.0 / 3.0) * signal_var * e;
    let u: Vec<f64> = (0..dim).map(|d| (a[d] - b[d]) * inv_ls2[d]).collect();
    for i in 0..dim {
        out[i * dim + i] += scale * g * inv_ls2[i];
        for j in 0..dim {
            out[i * dim + j] += scale * c * u[i] * u[j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_at_zero_is_signal_variance() {
        let p = KernelParams::new(vec![0.3, 2.0], 1.7, 1e-3);
        assert!((value(&p, &[0.2, 0.4], &[0.2, 0.4]) - 1.7 * 1.7).abs() < 1e-15);
    }

    #[test]
    fn gradient_and_hessian_match_finite_differences() {
        let p = KernelParams::new(vec![0.3, 0.7, 1.1], 1.3, 1e-3);
        let inv: Vec<f64> = p.lengthscales.iter().map(|l| 1.0 / (l * l)).collect();
        let a = [0.1, 0.5, 0.9];
        let b = [0.3, 0.2, 0.6];
        let h = 1e-6;
        let mut grad = vec![0.0; 3];
        accumulate_grad(p.signal_var(), &inv, &a, &b, 1.0, &mut grad);
        let mut hess = vec![0.0; 9];
        accumulate_hessian(p.signal_var(), &inv, &a, &b, 1.0, &mut hess);
        for d in 0..3 {
            let mut ap = a;
            let mut am = a;
            ap[d] += h;
            am[d] -= h;
            let fd = (value(&p, &ap, &b) - value(&p, &am, &b)) / (2.0 * h);
            assert!((fd - grad[d]).abs() < 1e-7, "grad {d}");
            let mut gp = vec![0.0; 3];
            let mut gm = vec![0.0; 3];
            accumulate_grad(p.signal_var(), &inv, &ap, &b, 1.0, &mut gp);
            accumulate_grad(p.signal_var(), &inv, &am, &b, 1.0, &mut gm);
            for e in 0..3 {
                let fd = (gp[e] - gm[e]) / (2.0 * h);
                assert!((fd - hess[d * 3 + e]).abs() < 1e-6, "hess {d},{e}");
            }
        }
    }

    #[test]
    fn log_packing_round_trips_and_clamps() {
        let p = KernelParams::new(vec![0.5, 100.0], 1e-4, 1.0);
        let q = KernelParams::from_log(&p.to_log());
        assert!((q.lengthscales[1] - 100.0).abs() < 1e-9);
        let c = p.clamped();
        assert!(c.within_bounds());
        assert!(!p.within_bounds());
    }
}
