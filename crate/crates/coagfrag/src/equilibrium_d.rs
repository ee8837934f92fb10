//! Model D equilibria: the ν₀-driven recursion, the μ ↔ ν₀ correspondence,
//! the exponential cutoff λ_μ = 1 + 4/(27μ) and the completely monotone
//! rescaled sequence γ_i = f_i·λ^i with its i^{−3/2} tail.

use crate::continuum_profile::u_star;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct EquilibriumD {
    pub nu0: f64,
    pub mu: f64,
    pub lambda: f64,
    /// f_1..f_N
    pub f: Vec<f64>,
    /// β_1..β_N, tail sums Σ_{j≥i} f_j/(j+1)
    pub beta: Vec<f64>,
    /// γ_i = f_i λ^i
    pub gamma: Vec<f64>,
}

/// μ = ν₀/(1−ν₀)³ (first moment from the zeroth).
pub fn mu_from_nu(nu0: f64) -> Result<f64> {
    if !(0.0 < nu0 && nu0 < 1.0) {
        return Err(Error::Domain(format!("nu0 must lie in (0,1), got {nu0}")));
    }
    Ok(nu0 / (1.0 - nu0).powi(3))
}

/// Inverse of [`mu_from_nu`]: the unique ν ∈ (0,1) with ν/(1−ν)³ = μ,
/// identical to U★(μ).
pub fn nu_from_mu(mu: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::Domain(format!("mu must be positive, got {mu}")));
    }
    u_star(mu)
}

/// Forward recursion for the equilibrium profile:
/// β₁ = (ν₀ − ν₀²)/2, f_i = (2β_i + Σ_{j<i} f_j f_{i−j})/(1 + 2ν₀),
/// β_{i+1} = β_i − f_i/(i+1).
pub fn equilibrium_recursion(nu0: f64, n: usize) -> Result<EquilibriumD> {
    let mu = mu_from_nu(nu0)?;
    if n == 0 {
        return Err(Error::Domain("n must be >= 1".into()));
    }
    let lambda = 1.0 + 4.0 / (27.0 * mu);
    let denom = 1.0 + 2.0 * nu0;
    let mut f = vec![0.0f64; n + 1]; // index by size, f[0] unused
    let mut beta = vec![0.0f64; n + 2];
    beta[1] = (nu0 - nu0 * nu0) / 2.0;
    for i in 1..=n {
        let mut conv = 0.0;
        for j in 1..i {
            conv += f[j] * f[i - j];
        }
        // the exact sequence is strictly positive; once the λ^{-i} tail falls
        // below the accumulated roundoff of the β-subtraction, the computed
        // value is noise and may dip negative — floor it at zero
        f[i] = ((2.0 * beta[i] + conv) / denom).max(0.0);
        beta[i + 1] = beta[i] - f[i] / ((i + 1) as f64);
    }
    let mut gamma = vec![0.0f64; n];
    let mut lam_pow = 1.0f64;
    for i in 1..=n {
        lam_pow *= lambda;
        gamma[i - 1] = if lam_pow.is_finite() {
            f[i] * lam_pow
        } else {
            // past f64 range: recover the product through logs
            (f[i].ln() + (i as f64) * lambda.ln()).exp()
        };
    }
    Ok(EquilibriumD {
        nu0,
        mu,
        lambda,
        f: f[1..].to_vec(),
        beta: beta[1..=n].to_vec(),
        gamma,
    })
}

impl EquilibriumD {
    pub fn to_size_distribution(&self) -> crate::measures::SizeDistribution {
        crate::measures::SizeDistribution::new(self.f.clone()).expect("equilibrium entries nonnegative")
    }

    /// γ_i / [(9/8)·√(μλ/π)·i^{−3/2}] (→ 1 as i → ∞ by the tail law).
    pub fn tail_asymptotic_ratio(&self, i: usize) -> Result<f64> {
        if i == 0 || i > self.gamma.len() {
            return Err(Error::Domain(format!("index {i} outside 1..={}", self.gamma.len())));
        }
        let lead = 9.0 / 8.0 * (self.mu * self.lambda / std::f64::consts::PI).sqrt()
            * (i as f64).powf(-1.5);
        Ok(self.gamma[i - 1] / lead)
    }

    /// CSV `i,f,beta,gamma,tail_ratio`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,f,beta,gamma,tail_ratio\n");
        for i in 1..=self.f.len() {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                i,
                self.f[i - 1],
                self.beta[i - 1],
                self.gamma[i - 1],
                self.tail_asymptotic_ratio(i).unwrap(),
            ));
        }
        out
    }
}

/// Taylor coefficients g_0..g_n of G(z) = B₃(μ(z−1)) about z = 0, computed
/// independently of the recursion by a power-series Newton iteration on the
/// functional equation P = 1 + w(z)·P³ with w(z) = −μ + μz.
///
/// g_0 is the ghost value f₀ = 1 − U★(μ); g_i for i ≥ 1 must reproduce the
/// recursion's f_i.
pub fn generating_oracle(mu: f64, n: usize) -> Result<Vec<f64>> {
    if !(mu > 0.0) {
        return Err(Error::Domain("mu must be positive".into()));
    }
    let len = n + 1;
    let mut w = vec![0.0; len];
    w[0] = -mu;
    if len > 1 {
        w[1] = mu;
    }
    let mut p = vec![0.0; len];
    p[0] = 1.0 - u_star(mu)?; // scalar root B₃(−μ) as Newton seed
    let iters = (usize::BITS - len.leading_zeros()) as usize + 2;
    for _ in 0..iters {
        let p2 = series_mul(&p, &p, len);
        let p3 = series_mul(&p2, &p, len);
        // residual P − 1 − w·P³
        let wp3 = series_mul(&w, &p3, len);
        let mut resid = p.clone();
        resid[0] -= 1.0;
        for k in 0..len {
            resid[k] -= wp3[k];
        }
        // derivative 1 − 3w·P²
        let wp2 = series_mul(&w, &p2, len);
        let mut deriv = vec![0.0; len];
        deriv[0] = 1.0;
        for k in 0..len {
            deriv[k] -= 3.0 * wp2[k];
        }
        let inv = series_inv(&deriv, len)?;
        let delta = series_mul(&resid, &inv, len);
        for k in 0..len {
            p[k] -= delta[k];
        }
    }
    // the coefficients must decay like λ^{-i}; growth signals instability
    if n >= 8 {
        let a = p[n].abs();
        let b = p[n / 2].abs();
        if a > b && b > 0.0 {
            return Err(Error::Invariant(format!(
                "oracle coefficients grow: |g_{}| = {a:e} > |g_{}| = {b:e}",
                n,
                n / 2
            )));
        }
    }
    Ok(p)
}

fn series_mul(a: &[f64], b: &[f64], len: usize) -> Vec<f64> {
    let mut c = vec![0.0; len];
    for i in 0..len {
        if a[i] == 0.0 {
            continue;
        }
        for j in 0..len - i {
            c[i + j] += a[i] * b[j];
        }
    }
    c
}

fn series_inv(a: &[f64], len: usize) -> Result<Vec<f64>> {
    if a[0] == 0.0 {
        return Err(Error::Invariant("series inversion with zero constant term".into()));
    }
    let mut x = vec![0.0; len];
    x[0] = 1.0 / a[0];
    for k in 1..len {
        let mut acc = 0.0;
        for i in 1..=k {
            acc += a[i] * x[k - i];
        }
        x[k] = -acc / a[0];
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct CmReport {
    pub max_order: usize,
    pub window: usize,
    /// most negative (I−S)^k γ_j / γ_j over the checked range
    pub most_negative_normalized: f64,
    pub pass: bool,
}

/// Backward differences (I−S)^k γ_j for k ≤ max_order, j < window; complete
/// monotonicity demands they all stay ≥ −1e−12·γ_j numerically.
pub fn check_complete_monotonicity(gamma: &[f64], max_order: usize, window: usize) -> Result<CmReport> {
    if max_order > 8 {
        return Err(Error::Domain("max_order must be <= 8".into()));
    }
    if window + max_order > gamma.len() {
        return Err(Error::Domain(format!(
            "window {window} + order {max_order} exceeds sequence length {}",
            gamma.len()
        )));
    }
    let mut work = gamma.to_vec();
    let mut worst = 0.0f64;
    for _k in 1..=max_order {
        for j in 0..work.len() - 1 {
            work[j] -= work[j + 1];
        }
        work.pop();
        for j in 0..window.min(work.len()) {
            let norm = work[j] / gamma[j];
            worst = worst.min(norm);
        }
    }
    Ok(CmReport {
        max_order,
        window,
        most_negative_normalized: worst,
        pass: worst >= -1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mu_nu_round_trip() {
        assert_eq!(mu_from_nu(0.5).unwrap(), 4.0);
        assert!((mu_from_nu(0.6).unwrap() - 9.375).abs() < 1e-14);
        assert!((nu_from_mu(4.0).unwrap() - 0.5).abs() < 1e-13);
        assert!(mu_from_nu(1.5).is_err());
    }

    #[test]
    fn recursion_hand_values() {
        let eq = equilibrium_recursion(0.5, 8).unwrap();
        assert!((eq.beta[0] - 0.125).abs() < 1e-16);
        assert!((eq.f[0] - 0.125).abs() < 1e-16);
        assert!((eq.f[1] - 0.0703125).abs() < 1e-16);
        assert_eq!(eq.mu, 4.0);
        assert!((eq.lambda - (1.0 + 1.0 / 27.0)).abs() < 1e-16);
        // β strictly decreasing, f strictly positive
        assert!(eq.beta.windows(2).all(|w| w[1] < w[0]));
        assert!(eq.f.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn partial_sums_approach_nu0() {
        let eq = equilibrium_recursion(0.5, 2000).unwrap();
        let m0: f64 = eq.f.iter().sum();
        assert!((m0 - 0.5).abs() < 1e-10, "{m0}");
        let m1: f64 = eq.f.iter().enumerate().map(|(j, &f)| (j + 1) as f64 * f).sum();
        assert!((m1 - 4.0).abs() < 1e-7, "{m1}");
    }

    #[test]
    fn oracle_matches_recursion() {
        let g = generating_oracle(4.0, 12).unwrap();
        assert!((g[0] - 0.5).abs() < 1e-13);
        assert!((g[1] - 0.125).abs() < 1e-13);
        assert!((g[2] - 0.0703125).abs() < 1e-13);
        let eq = equilibrium_recursion(0.5, 12).unwrap();
        for i in 1..=12 {
            let rel = ((g[i] - eq.f[i - 1]) / eq.f[i - 1]).abs();
            assert!(rel < 1e-12, "i={i} rel={rel}");
        }
    }

    #[test]
    fn cm_trivial_sequences() {
        let constant = vec![2.0; 64];
        assert!(check_complete_monotonicity(&constant, 6, 50).unwrap().pass);
        let geom: Vec<f64> = (0..64).map(|j| 0.8f64.powi(j)).collect();
        assert!(check_complete_monotonicity(&geom, 6, 50).unwrap().pass);
        let not_cm: Vec<f64> = (0..64).map(|j| ((j as f64) * 0.3).sin() + 2.0).collect();
        assert!(!check_complete_monotonicity(&not_cm, 6, 50).unwrap().pass);
    }

    #[test]
    fn tail_ratio_monotone_trend() {
        let eq = equilibrium_recursion(0.6, 2000).unwrap();
        let mut prev = f64::INFINITY;
        for &i in &[250usize, 500, 1000, 2000] {
            let dev = (eq.tail_asymptotic_ratio(i).unwrap() - 1.0).abs();
            assert!(dev < prev, "i={i} dev={dev} prev={prev}");
            prev = dev;
        }
    }
}
