//! Property-based invariants (proptest) plus the fixed cross-model
//! consistency check between Model D trajectories and the transform-space
//! scheme.

use coagfrag::bernstein_evolution::{evolve, log_grid, BernsteinField, ImexConfig};
use coagfrag::dynamics_d::{Convolver, Simulation};
use coagfrag::equilibrium_d::{check_complete_monotonicity, generating_oracle};
use coagfrag::measures::{weighted_distance, SizeDistribution};
use proptest::prelude::*;

fn small_distribution() -> impl Strategy<Value = SizeDistribution> {
    prop::collection::vec(0.0f64..1.0, 1..40)
        .prop_map(|v| SizeDistribution::new(v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bernstein_transform_monotone_concave(d in small_distribution(), h in 0.01f64..2.0) {
        let s = log_grid(1e-3, 1e2, 40);
        let u = d.bernstein_of(&s, h);
        // nondecreasing in s, bounded by m0, concave along the grid
        prop_assert!(u.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        prop_assert!(u.iter().all(|&v| -1e-12 <= v && v <= d.moment(0) + 1e-12));
        for w in s.windows(3).zip(u.windows(3)) {
            let (sg, ug) = w;
            let d1 = (ug[1] - ug[0]) / (sg[1] - sg[0]);
            let d2 = (ug[2] - ug[1]) / (sg[2] - sg[1]);
            prop_assert!(d2 <= d1 + 1e-10);
        }
    }

    #[test]
    fn moments_linear_and_ordered(d in small_distribution(), c in 0.1f64..5.0) {
        let scaled = SizeDistribution::new(d.entries().iter().map(|&v| c * v).collect()).unwrap();
        for k in 0..=2u32 {
            prop_assert!((scaled.moment(k) - c * d.moment(k)).abs() <= 1e-12 * (1.0 + d.moment(k)) * c.max(1.0));
        }
        prop_assert!(d.moment(0) <= d.moment(1) + 1e-15);
        prop_assert!(d.moment(1) <= d.moment(2) + 1e-15);
    }

    #[test]
    fn weighted_distance_metric(a in small_distribution(), b in small_distribution(), c in small_distribution()) {
        for k in 0..=1u32 {
            prop_assert!(weighted_distance(&a, &a, k) == 0.0);
            prop_assert!((weighted_distance(&a, &b, k) - weighted_distance(&b, &a, k)).abs() < 1e-12);
            let (ab, bc, ac) = (
                weighted_distance(&a, &b, k),
                weighted_distance(&b, &c, k),
                weighted_distance(&a, &c, k),
            );
            prop_assert!(ac <= ab + bc + 1e-10);
        }
    }

    #[test]
    fn fft_convolution_matches_direct(v in prop::collection::vec(0.0f64..1.0, 1030..1100)) {
        let mut conv = Convolver::new(v.len());
        let a = conv.self_convolution(&v);
        let b = Convolver::direct(&v);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn oracle_output_completely_monotone(mu in 0.5f64..20.0) {
        // γ_i = g_i λ^i must pass the finite CM check
        let n = 80;
        let g = generating_oracle(mu, n).unwrap();
        let lambda = 1.0 + 4.0 / (27.0 * mu);
        let gamma: Vec<f64> = (1..=n).map(|i| g[i] * lambda.powi(i as i32)).collect();
        let cm = check_complete_monotonicity(&gamma, 4, 40).unwrap();
        prop_assert!(cm.most_negative_normalized >= -1e-10, "{}", cm.most_negative_normalized);
    }

    #[test]
    fn rk4_positivity_and_m0_decay(d in small_distribution(), steps in 1usize..20) {
        // skip near-zero inputs where m0 dynamics are trivial
        let m0_init = d.moment(0);
        prop_assume!(m0_init > 1e-3);
        let mut sim = Simulation::new(&d, false, 0.0);
        for _ in 0..steps {
            let dt = 0.05 / (1.0 + 2.0 * sim.state().moment(0));
            sim.step(dt).unwrap();
        }
        let s = sim.state();
        prop_assert!(s.entries().iter().all(|&v| v >= 0.0));
        // m1 + lost conserved
        prop_assert!(((s.moment(1) + s.lost_mass()) - d.moment(1)).abs() <= 1e-10 * (1.0 + d.moment(1)));
    }
}

/// The transform of a Model D trajectory obeys the h > 0 transform equation:
/// evolving breve F^h(0) with the A_h IMEX scheme tracks the transform of the
/// RK4 Model D solution within the combined scheme error.
#[test]
fn cross_model_consistency() {
    let h = 0.1;
    let n = 600;
    // left-endpoint binning of e^{−x} dx
    let f: Vec<f64> = (1..=n)
        .map(|i| (-(i as f64 - 1.0) * h).exp() - (-(i as f64) * h).exp())
        .collect();
    let dist = SizeDistribution::new(f).unwrap();
    let grid = log_grid(1e-2, 10.0, 80);
    let u0 = BernsteinField::new(grid.clone(), dist.bernstein_of(&grid, h), dist.moment(0)).unwrap();
    let dt = 0.0005; // IMEX is first order in dt; 1e-4 needs a small step
    let t_end = 2.0;
    let snaps = evolve(&u0, &ImexConfig { dt, t_end, record_every: t_end }, h).unwrap();
    let mut sim = Simulation::new(&dist, false, 0.0);
    while sim.time() < t_end - 1e-9 {
        sim.step(dt).unwrap();
    }
    let breve = sim.state().bernstein_of(&grid, h);
    let last = snaps.last().unwrap();
    let sup = breve
        .iter()
        .zip(last.field.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    assert!(sup <= 1e-4, "cross-model sup distance {sup}");
}
