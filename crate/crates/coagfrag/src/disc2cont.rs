//! Discrete-to-continuum study: scaled Model D on a grid of width h, the
//! ν_h ↔ μ_h relation, Figure-2 data, ghost-cluster traces and the empirical
//! h → 0 convergence of the scaled Bernstein transforms.

use crate::bernstein_evolution::{evolve, BernsteinField, ImexConfig};
use crate::continuum_profile::{u_star, ContinuumProfile};
use crate::dynamics_d::{run_with_ghosts, RunReport, SimulationConfigD, Simulation};
use crate::equilibrium_d::{equilibrium_recursion, nu_from_mu, EquilibriumD};
use crate::measures::SizeDistribution;
use crate::{Error, Result};
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct ScaledEquilibrium {
    pub h: f64,
    pub nu_h: f64,
    pub mu_h: f64,
    pub eq: EquilibriumD,
    /// ghost value f₀ = 1 − ν_h
    pub ghost_f0: f64,
}

/// h = μ_h(1−ν_h)³/ν_h (Eq. relating the scaled moments).
pub fn h_from(nu_h: f64, mu_h: f64) -> Result<f64> {
    if !(0.0 < nu_h && nu_h < 1.0) {
        return Err(Error::Domain("nu_h must lie in (0,1)".into()));
    }
    if !(mu_h > 0.0) {
        return Err(Error::Domain("mu_h must be positive".into()));
    }
    Ok(mu_h * (1.0 - nu_h).powi(3) / nu_h)
}

pub fn scaled_equilibrium(nu_h: f64, mu_h: f64, n: usize) -> Result<ScaledEquilibrium> {
    let h = h_from(nu_h, mu_h)?;
    let eq = equilibrium_recursion(nu_h, n)?;
    Ok(ScaledEquilibrium { h, nu_h, mu_h, ghost_f0: 1.0 - nu_h, eq })
}

impl ScaledEquilibrium {
    /// Exact transform identity: breve F^h(s) = U★(μ_h·(1−e^{−sh})/h).
    pub fn transform(&self, s: f64) -> Result<f64> {
        u_star(self.mu_h * (1.0 - (-s * self.h).exp()) / self.h)
    }
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct Figure2Row {
    pub x: f64,
    pub discrete_over_h: f64,
    pub f_star: f64,
    pub ratio: f64,
    pub asym3: f64,
}

/// Rows (x = ih, f^h_i/h, f★(x), ratio, asym3) with
/// asym3 = exp(4ih/27)·(1+4h/27)^{−i+1/2}, for μ_h = 1 comparisons.
pub fn figure2_data(nu_h: f64, mu_h: f64, n: usize) -> Result<Vec<Figure2Row>> {
    let sc = scaled_equilibrium(nu_h, mu_h, n)?;
    let profile = ContinuumProfile::default();
    let h = sc.h;
    (1..=n)
        .into_par_iter()
        .map(|i| {
            let x = i as f64 * h;
            let fs = profile.f_star(x / sc.mu_h)? / sc.mu_h;
            let d = sc.eq.f[i - 1] / h;
            Ok(Figure2Row {
                x,
                discrete_over_h: d,
                f_star: fs,
                ratio: d / fs,
                asym3: (4.0 * i as f64 * h / 27.0).exp()
                    * (1.0 + 4.0 * h / 27.0).powf(-(i as f64) + 0.5),
            })
        })
        .collect()
}

pub fn figure2_csv(rows: &[Figure2Row]) -> String {
    let mut out = String::from("x,discrete_over_h,f_star,ratio,asym3\n");
    for r in rows {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.x, r.discrete_over_h, r.f_star, r.ratio, r.asym3
        ));
    }
    out
}

/// Head ratio (f^h_1/h)/f★(h) for μ_h = 1, which approaches Γ(1/3)/3 as
/// h → 0; f^h_1/h = (ν−ν²)/(1+2ν)·ν/(1−ν)³ from the first recursion step.
pub fn head_ratio(h: f64) -> Result<f64> {
    let nu = nu_from_mu(1.0 / h)?;
    let f1_over_h = (nu - nu * nu) / (1.0 + 2.0 * nu) * nu / (1.0 - nu).powi(3);
    let profile = ContinuumProfile::default();
    Ok(f1_over_h / profile.f_star(h)?)
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct HStudyRow {
    pub h: f64,
    pub e: f64,
    /// empirical order vs the previous row (NaN for the first)
    pub order: f64,
}

/// E(h) = max over s_probe of |breve F^h(s) − U★(μs)| using the exact
/// transform identity, plus empirical convergence orders.
pub fn h_convergence_study(mu: f64, h_values: &[f64], s_probe: &[f64]) -> Result<Vec<HStudyRow>> {
    if h_values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain("h values must be strictly decreasing".into()));
    }
    let mut rows: Vec<HStudyRow> = Vec::new();
    for &h in h_values {
        if !(0.0 < h && h <= 1.0) {
            return Err(Error::Domain("h values must lie in (0, 1]".into()));
        }
        let e = s_probe
            .iter()
            .map(|&s| {
                let breve = u_star(mu * (1.0 - (-s * h).exp()) / h)?;
                Ok((breve - u_star(mu * s)?).abs())
            })
            .try_fold(0.0f64, |a, b: Result<f64>| b.map(|v| a.max(v)))?;
        let order = rows
            .last()
            .map_or(f64::NAN, |p| (p.e / e).log2() / (p.h / h).log2());
        rows.push(HStudyRow { h, e, order });
    }
    Ok(rows)
}

pub fn h_study_csv(rows: &[HStudyRow]) -> String {
    let mut out = String::from("h,E,order\n");
    for r in rows {
        out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", r.h, r.e, r.order));
    }
    out
}

/// Dynamic variant: integrate scaled Model D (transformed) and Model C from
/// matched initial data, reporting the sup-distance over the probe grid at
/// the sample times. Initial continuum data F₀(dx) = e^{−x}dx is sampled
/// onto the h-grid by left-endpoint binning f^h_i = ∫_{(i−1)h}^{ih} e^{−x}dx.
pub fn dynamic_h_comparison(h: f64, t_samples: &[f64], s_probe: &[f64]) -> Result<Vec<(f64, f64)>> {
    let n = ((40.0 / h).ceil() as usize).max(64);
    let f: Vec<f64> = (1..=n)
        .map(|i| (-(i as f64 - 1.0) * h).exp() - (-(i as f64) * h).exp())
        .collect();
    let dist = SizeDistribution::new(f)?;
    let u0 = BernsteinField::from_fn(s_probe.to_vec(), |s| s / (1.0 + s), 1.0)?;
    let dt = 0.01;
    let t_end = t_samples.iter().fold(0.0f64, |a, &b| a.max(b));
    let snaps = evolve(&u0, &ImexConfig { dt, t_end, record_every: dt }, 0.0)?;
    let mut sim = Simulation::new(&dist, false, 0.0);
    let mut out = Vec::new();
    for &t in t_samples {
        while sim.time() < t - 1e-9 {
            sim.step(dt.min(t - sim.time()).max(1e-9))?;
        }
        let snap = snaps
            .iter()
            .min_by(|a, b| {
                (a.field.time() - t).abs().total_cmp(&(b.field.time() - t).abs())
            })
            .unwrap();
        let breve = sim.state().bernstein_of(s_probe, h);
        let sup = breve
            .iter()
            .zip(snap.field.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        out.push((t, sup));
    }
    Ok(out)
}

/// ν̂₀(t) = f₀ + m₀ trace of a ghost-co-integrated scaled run.
pub fn ghost_trace(
    init: &SizeDistribution,
    ghost_f0: f64,
    cfg: &SimulationConfigD,
) -> Result<(RunReport, Vec<f64>)> {
    let (report, _) = run_with_ghosts(init, ghost_f0, cfg)?;
    let trace = report.nu_hat_trace.clone().expect("ghost run records nu_hat");
    Ok((report, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h_from_figure2_caption() {
        let h = h_from(0.6, 1.0).unwrap();
        assert!((h - 0.4f64.powi(3) / 0.6).abs() < 1e-15);
        assert!((h - 0.10667).abs() < 1e-5);
        assert_eq!(h_from(0.5, 4.0).unwrap(), 1.0);
    }

    #[test]
    fn nu_asymptotic_small_h() {
        // ν_h ~ 1 − (h/μ_h)^{1/3}
        for &h in &[1e-3, 1e-5] {
            let nu = nu_from_mu(1.0 / h).unwrap();
            let lead = 1.0 - h.powf(1.0 / 3.0);
            assert!((nu - lead).abs() < 2.0 * h.powf(2.0 / 3.0), "h={h}");
        }
    }

    #[test]
    fn scaled_transform_identity_vs_summation() {
        let sc = scaled_equilibrium(0.6, 1.0, 4000).unwrap();
        let d = sc.eq.to_size_distribution();
        for &s in &[0.5, 1.0, 2.0] {
            let direct = d.bernstein_at(s, sc.h);
            let ident = sc.transform(s).unwrap();
            assert!((direct - ident).abs() < 1e-10, "s={s}: {direct} vs {ident}");
        }
    }

    #[test]
    fn figure2_head_value() {
        // f^h_1/h at ν = 0.6, μ = 1 → (0.24/2.2)·9.375
        let rows = figure2_data(0.6, 1.0, 4).unwrap();
        let expect = 0.24 / 2.2 * 9.375;
        assert!((rows[0].discrete_over_h - expect).abs() < 1e-12);
    }

    #[test]
    fn e_of_h_exact_for_equilibrium_input() {
        // with the identity route, E at matched arguments is pure roundoff
        let sc = scaled_equilibrium(0.6, 1.0, 16).unwrap();
        let s = 1.0;
        let lhs = sc.transform(s).unwrap();
        let rhs = u_star(sc.mu_h * (1.0 - (-s * sc.h).exp()) / sc.h).unwrap();
        assert!((lhs - rhs).abs() < 1e-15);
    }

    #[test]
    fn ghost_fixed_point() {
        // ν̂₀(0) = 1 stays 1
        let init = SizeDistribution::monodisperse(64, 0.4).unwrap();
        let cfg = SimulationConfigD {
            truncation_n: 64,
            t_end: 2.0,
            dt_init: 0.01,
            dt_control: crate::dynamics_d::DtControl::Fixed,
            record_every: 0.5,
            ghosts: true,
        };
        let (_, trace) = ghost_trace(&init, 0.6, &cfg).unwrap();
        for v in trace {
            assert!((v - 1.0).abs() < 1e-10, "{v}");
        }
    }
}
