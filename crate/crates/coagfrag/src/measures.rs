//! Discrete size distributions, moments/norms and Bernstein transforms.

use crate::{Error, Result};

/// State of Model D: number densities f_1..f_N plus the cumulative first
/// moment dropped past the truncation boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeDistribution {
    entries: Vec<f64>,
    lost_mass: f64,
}

impl SizeDistribution {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Domain("distribution needs at least one class".into()));
        }
        if let Some(&bad) = entries.iter().find(|&&v| !(v >= 0.0)) {
            return Err(Error::Invariant(format!("negative or NaN entry {bad}")));
        }
        Ok(Self { entries, lost_mass: 0.0 })
    }

    pub fn monodisperse(n: usize, f1: f64) -> Result<Self> {
        let mut e = vec![0.0; n.max(1)];
        e[0] = f1;
        Self::new(e)
    }

    /// f_i ∝ i^{−exponent}, normalized to m₀ = 1.
    pub fn power_law(n: usize, exponent: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("n must be positive".into()));
        }
        let mut e: Vec<f64> = (1..=n).map(|i| (i as f64).powf(-exponent)).collect();
        let z: f64 = e.iter().sum();
        e.iter_mut().for_each(|v| *v /= z);
        Self::new(e)
    }

    /// f_i ∝ q^i, normalized to m₀ = 1.
    pub fn geometric(n: usize, q: f64) -> Result<Self> {
        if !(0.0 < q && q < 1.0) {
            return Err(Error::Domain("geometric ratio must lie in (0,1)".into()));
        }
        let mut e: Vec<f64> = (1..=n).map(|i| q.powi(i as i32)).collect();
        let z: f64 = e.iter().sum();
        e.iter_mut().for_each(|v| *v /= z);
        Self::new(e)
    }

    pub(crate) fn from_raw(entries: Vec<f64>, lost_mass: f64) -> Self {
        Self { entries, lost_mass }
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn truncation_n(&self) -> usize {
        self.entries.len()
    }

    pub fn lost_mass(&self) -> f64 {
        self.lost_mass
    }

    /// Σ i^k f_i over the truncated range; no tail extrapolation.
    pub fn moment(&self, k: u32) -> f64 {
        assert!(k <= 3, "moments restricted to k in 0..=3");
        self.entries
            .iter()
            .enumerate()
            .map(|(j, &f)| ((j + 1) as f64).powi(k as i32) * f)
            .sum()
    }

    /// U(s) = Σ (1 − e^{−s·i·h}) f_i; s = ∞ gives m₀.
    ///
    /// Evaluated with a cached geometric factor q = e^{−sh} and running
    /// powers, one transcendental call per s.
    pub fn bernstein_at(&self, s: f64, bin_width: f64) -> f64 {
        assert!(bin_width > 0.0);
        if s.is_infinite() {
            return self.moment(0);
        }
        let q = (-s * bin_width).exp();
        let mut qi = 1.0;
        let mut acc = 0.0;
        for &f in &self.entries {
            qi *= q;
            acc += (1.0 - qi) * f;
        }
        acc
    }

    pub fn bernstein_of(&self, s_values: &[f64], bin_width: f64) -> Vec<f64> {
        s_values.iter().map(|&s| self.bernstein_at(s, bin_width)).collect()
    }

    /// CSV with header `i,f`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,f\n");
        for (j, &f) in self.entries.iter().enumerate() {
            out.push_str(&format!("{},{:.16e}\n", j + 1, f));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            if ln == 0 {
                if line.trim() != "i,f" {
                    return Err(Error::Config(format!("unexpected CSV header {line:?}")));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let i: usize = parts
                .next()
                .and_then(|t| t.trim().parse().ok())
                .ok_or_else(|| Error::Config(format!("bad index on line {}", ln + 1)))?;
            let f: f64 = parts
                .next()
                .and_then(|t| t.trim().parse().ok())
                .ok_or_else(|| Error::Config(format!("bad value on line {}", ln + 1)))?;
            if i != entries.len() + 1 {
                return Err(Error::Config(format!("non-contiguous index {i}")));
            }
            entries.push(f);
        }
        Self::new(entries)
    }
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct MomentReport {
    pub m0: f64,
    pub m1: f64,
    pub m2: f64,
    pub time: f64,
}

impl MomentReport {
    pub fn of(dist: &SizeDistribution, time: f64) -> Self {
        Self {
            m0: dist.moment(0),
            m1: dist.moment(1),
            m2: dist.moment(2),
            time,
        }
    }
}

/// ℓ_{1,k} distance Σ i^k |a_i − b_i|; the shorter distribution is
/// zero-padded.
pub fn weighted_distance(a: &SizeDistribution, b: &SizeDistribution, k: u32) -> f64 {
    assert!(k <= 1, "weighted distances restricted to k in {{0,1}}");
    let (long, short) = if a.entries.len() >= b.entries.len() {
        (&a.entries, &b.entries)
    } else {
        (&b.entries, &a.entries)
    };
    long.iter()
        .enumerate()
        .map(|(j, &v)| {
            let w = ((j + 1) as f64).powi(k as i32);
            let other = short.get(j).copied().unwrap_or(0.0);
            w * (v - other).abs()
        })
        .sum()
}
