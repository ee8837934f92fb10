//! Small special-function helpers shared by the profile evaluators.

use statrs::function::gamma::{gamma, ln_gamma};

pub const S0: f64 = 4.0 / 27.0;

/// 1/Γ(a), finite everywhere (zero at the poles a = 0, −1, −2, …).
///
/// For a ≤ 0 the reflection formula 1/Γ(a) = Γ(1−a)·sin(πa)/π is used so the
/// poles come out as exact zeros instead of overflow.
pub fn inv_gamma(a: f64) -> f64 {
    if a > 0.0 {
        1.0 / gamma(a)
    } else if a == a.floor() {
        0.0 // pole
    } else {
        let s = (std::f64::consts::PI * a).sin();
        (ln_gamma(1.0 - a).exp()) * s / std::f64::consts::PI
    }
}

pub fn gamma_fn(a: f64) -> f64 {
    gamma(a)
}

/// Imaginary part of the upper-half-plane root of z·B³ − B + 1 = 0 for
/// z > 4/27 (on the branch cut of the Fuss–Catalan function B₃).
///
/// Dividing by z gives the monic cubic B³ + pB + q with p = −1/z, q = 1/z,
/// whose discriminant (q/2)² + (p/3)³ = (27z−4)/(108z³) is positive there:
/// one real root r (Cardano) and a conjugate pair with sum −r and product
/// −q/r; the pair's imaginary part is √(−q/r − r²/4).
pub fn im_b3_cut(z: f64) -> f64 {
    debug_assert!(z > S0);
    let p = -1.0 / z;
    let q = 1.0 / z;
    let disc = (q / 2.0) * (q / 2.0) + (p / 3.0) * (p / 3.0) * (p / 3.0);
    let sq = disc.sqrt();
    let r = (-q / 2.0 + sq).cbrt() + (-q / 2.0 - sq).cbrt();
    let im2 = -q / r - r * r / 4.0;
    if im2 > 0.0 {
        im2.sqrt()
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inv_gamma_poles_and_values() {
        assert_eq!(inv_gamma(0.0), 0.0);
        assert_eq!(inv_gamma(-1.0), 0.0);
        assert_eq!(inv_gamma(-2.0), 0.0);
        assert!((inv_gamma(1.0) - 1.0).abs() < 1e-15);
        assert!((inv_gamma(0.5) - 1.0 / std::f64::consts::PI.sqrt()).abs() < 1e-15);
        // reflection vs direct at a negative non-pole
        let a = -2.0 / 3.0;
        let direct = 1.0 / gamma(a);
        assert!((inv_gamma(a) - direct).abs() < 1e-14 * direct.abs());
    }

    #[test]
    fn cubic_root_is_a_root() {
        for &z in &[0.149, 0.2, 0.5, 1.0, 10.0, 1e3] {
            let im = im_b3_cut(z);
            assert!(im > 0.0, "z={z}");
            // reconstruct the complex root: real part is -r/2
            let p = -1.0 / z;
            let q = 1.0 / z;
            let disc = (q / 2.0) * (q / 2.0) + (p / 3.0) * (p / 3.0) * (p / 3.0);
            let r = (-q / 2.0 + disc.sqrt()).cbrt() + (-q / 2.0 - disc.sqrt()).cbrt();
            let (br, bi) = (-r / 2.0, im);
            // z*(br+i*bi)^3 - (br+i*bi) + 1, real and imaginary residuals
            let b2 = (br * br - bi * bi, 2.0 * br * bi);
            let b3 = (b2.0 * br - b2.1 * bi, b2.0 * bi + b2.1 * br);
            let re = z * b3.0 - br + 1.0;
            let imr = z * b3.1 - bi;
            assert!(re.abs() < 1e-12 && imr.abs() < 1e-12, "z={z} re={re} im={imr}");
        }
    }
}
