//! Model C in Bernstein-transform space: ∂ₜU = −U² − U + 2A(U) with the
//! running average A₀(U)(s) = (1/s)∫₀^s U, or the scaled operator
//! A_h(U)(s) = h/(1−e^{−sh})·∫₀^s U(r)e^{−rh} dr for the Model D transform
//! equation, integrated with the unconditionally stable implicit–explicit
//! scheme Û = U + 2Δt·A(U), U⁺ = −α + √(α² + Û/Δt), α = (1+Δt)/(2Δt).

use crate::continuum_profile::u_star;
use crate::quad::cumulative_integral;
use crate::{Error, Result};

/// U(s,t) on a positive s-grid plus the s = ∞ slot (which carries m₀).
#[derive(Debug, Clone)]
pub struct BernsteinField {
    s_grid: Vec<f64>,
    values: Vec<f64>,
    m0: f64,
    time: f64,
}

impl BernsteinField {
    pub fn new(s_grid: Vec<f64>, values: Vec<f64>, m0: f64) -> Result<Self> {
        if s_grid.len() != values.len() || s_grid.is_empty() {
            return Err(Error::Domain("grid/value length mismatch".into()));
        }
        if s_grid[0] <= 0.0 || s_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("s grid must be positive and strictly increasing".into()));
        }
        let f = Self { s_grid, values, m0, time: 0.0 };
        f.validate()?;
        Ok(f)
    }

    /// 200 log-spaced nodes on [1e−4, 1e3]: small s for slope extraction,
    /// large s for equilibrium saturation.
    pub fn default_grid() -> Vec<f64> {
        log_grid(1e-4, 1e3, 200)
    }

    pub fn from_fn(s_grid: Vec<f64>, f: impl Fn(f64) -> f64, m0: f64) -> Result<Self> {
        let values = s_grid.iter().map(|&s| f(s)).collect();
        Self::new(s_grid, values, m0)
    }

    /// Sampled equilibrium U★(μs); the s = ∞ slot carries
    /// m₀ = lim_{s→∞} U★(μs) = 1.
    pub fn equilibrium(mu: f64, s_grid: Vec<f64>) -> Result<Self> {
        let values: Result<Vec<f64>> = s_grid.iter().map(|&s| u_star(mu * s)).collect();
        Self::new(s_grid, values?, 1.0)
    }

    pub fn s_grid(&self) -> &[f64] {
        &self.s_grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn m0(&self) -> f64 {
        self.m0
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(w) = self.values.windows(2).find(|w| w[1] < w[0] - 1e-9) {
            return Err(Error::Invariant(format!("values not nondecreasing: {:?}", w)));
        }
        for v in &self.values {
            if *v < -1e-12 || *v > self.m0 + 1e-9 {
                return Err(Error::Invariant(format!("value {v} outside [0, m0 = {}]", self.m0)));
            }
        }
        // concavity along the grid: second divided differences ≤ ~0
        for w in 0..self.s_grid.len().saturating_sub(2) {
            let (s0, s1, s2) = (self.s_grid[w], self.s_grid[w + 1], self.s_grid[w + 2]);
            let (u0, u1, u2) = (self.values[w], self.values[w + 1], self.values[w + 2]);
            let d1 = (u1 - u0) / (s1 - s0);
            let d2 = (u2 - u1) / (s2 - s1);
            if (d2 - d1) / (s2 - s0) > 1e-10 {
                return Err(Error::Invariant(format!("convexity detected near s = {s1}")));
            }
        }
        Ok(())
    }

    /// Slope at 0 (≈ m₁ for finite-m₁ data) by Richardson extrapolation of
    /// U(s)/s at the two smallest nodes.
    pub fn mu_estimate(&self) -> f64 {
        let (s0, s1) = (self.s_grid[0], self.s_grid[1]);
        let (v0, v1) = (self.values[0] / s0, self.values[1] / s1);
        (v0 * s1 - v1 * s0) / (s1 - s0)
    }

    /// CSV `s,U`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,U\n");
        for (s, u) in self.s_grid.iter().zip(&self.values) {
            out.push_str(&format!("{:.16e},{:.16e}\n", s, u));
        }
        out
    }
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            // pin the endpoints so range checks on [lo, hi] hold exactly
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                (la + (lb - la) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct ImexConfig {
    pub dt: f64,
    pub t_end: f64,
    pub record_every: f64,
}

impl ImexConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= 0.5) {
            return Err(Error::Domain("dt must lie in (0, 0.5]".into()));
        }
        if !(self.t_end >= 0.0 && self.record_every > 0.0) {
            return Err(Error::Domain("t_end and record_every must be positive".into()));
        }
        Ok(())
    }
}

/// All node values of A(U): A₀ for h = 0, A_h for h > 0, plus the s = ∞ slot.
fn averages(field: &BernsteinField, h: f64) -> (Vec<f64>, f64) {
    let s = &field.s_grid;
    let u = &field.values;
    if h == 0.0 {
        let cum = cumulative_integral(s, u);
        let nodes = cum.iter().zip(s).map(|(&c, &sj)| c / sj).collect();
        (nodes, field.m0)
    } else {
        let weighted: Vec<f64> = u.iter().zip(s).map(|(&uj, &sj)| uj * (-sj * h).exp()).collect();
        let cum = cumulative_integral(s, &weighted);
        let nodes = cum
            .iter()
            .zip(s)
            .map(|(&c, &sj)| c * h / (1.0 - (-sj * h).exp()))
            .collect();
        // A_h(U)(∞) = h ∫₀^∞ U e^{−rh} dr; beyond the grid U ≈ m₀
        let smax = *s.last().unwrap();
        let inf = cum.last().unwrap() * h + field.m0 * (-smax * h).exp();
        (nodes, inf)
    }
}

/// A₀(U)(s_j) (h = 0) or A_h(U)(s_j); the averaging operator value at a node.
pub fn running_average(field: &BernsteinField, s_index: usize) -> f64 {
    averages(field, 0.0).0[s_index]
}

pub fn scaled_average(field: &BernsteinField, s_index: usize, h: f64) -> f64 {
    averages(field, h).0[s_index]
}

/// One IMEX step; h = 0 selects Model C, h > 0 the scaled Model D transform.
pub fn imex_step(field: &BernsteinField, dt: f64, h: f64) -> Result<BernsteinField> {
    let (av, av_inf) = averages(field, h);
    let alpha = (1.0 + dt) / (2.0 * dt);
    let push = |u: f64, a: f64| {
        let uhat = u + 2.0 * dt * a;
        -alpha + (alpha * alpha + uhat / dt).sqrt()
    };
    let values: Vec<f64> = field
        .values
        .iter()
        .zip(&av)
        .map(|(&u, &a)| push(u, a))
        .collect();
    if let Some(w) = values.windows(2).find(|w| w[1] < w[0] - 1e-9) {
        return Err(Error::Invariant(format!(
            "monotonicity broken by more than 1e-9 after step: {:?} (quadrature too coarse)",
            w
        )));
    }
    Ok(BernsteinField {
        s_grid: field.s_grid.clone(),
        values,
        m0: push(field.m0, av_inf),
        time: field.time + dt,
    })
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct EvolveDiagnostics {
    pub t: f64,
    pub m0: f64,
    pub mu_est: f64,
    pub sup_dist_to_equilibrium: f64,
    /// max over nodes and steps so far of U_n / (e^{n·dt}·U₀): ≤ 1 iff the
    /// growth bound holds everywhere
    pub growth_bound_ratio: f64,
}

pub struct Snapshot {
    pub field: BernsteinField,
    pub diagnostics: EvolveDiagnostics,
}

/// Iterate the scheme, recording snapshots every `record_every`.
pub fn evolve(init: &BernsteinField, cfg: &ImexConfig, h: f64) -> Result<Vec<Snapshot>> {
    cfg.validate()?;
    let mut field = init.clone();
    field.time = 0.0;
    let mut out = Vec::new();
    let mut growth_max = 0.0f64;
    let nsteps = (cfg.t_end / cfg.dt).round() as usize;
    let record_stride = (cfg.record_every / cfg.dt).round().max(1.0) as usize;
    let diag = |field: &BernsteinField, growth: f64| {
        let mu = field.mu_estimate();
        let sup = field
            .s_grid
            .iter()
            .zip(&field.values)
            .map(|(&s, &u)| (u - u_star(mu * s).unwrap_or(f64::NAN)).abs())
            .fold(0.0f64, f64::max);
        EvolveDiagnostics {
            t: field.time,
            m0: field.m0,
            mu_est: mu,
            sup_dist_to_equilibrium: sup,
            growth_bound_ratio: growth,
        }
    };
    out.push(Snapshot { field: field.clone(), diagnostics: diag(&field, 0.0) });
    for n in 1..=nsteps {
        field = imex_step(&field, cfg.dt, h)?;
        let bound = ((n as f64) * cfg.dt).exp();
        for (u, u0) in field.values.iter().zip(&init.values) {
            if *u0 > 0.0 {
                growth_max = growth_max.max(u / (bound * u0));
            }
        }
        if n % record_stride == 0 || n == nsteps {
            out.push(Snapshot { field: field.clone(), diagnostics: diag(&field, growth_max) });
        }
    }
    Ok(out)
}
