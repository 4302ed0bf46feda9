//! Closed-form proximal operators against the exhaustive grid oracle, and
//! the contraction properties the solver analysis relies on.

use normprr_core::linalg;
use normprr_core::prox::{
    brute_force_grid_spacing, brute_force_prox, check_cocoercivity, Regularizer,
};
use normprr_core::rng::SplitMix64;
use proptest::prelude::*;

fn all_kinds() -> Vec<Regularizer> {
    vec![
        Regularizer::Zero,
        Regularizer::L1 { nu: 0.01 },
        Regularizer::Box { lo: -1.0, hi: 2.0 },
        Regularizer::Nonneg,
        Regularizer::Simplex,
        Regularizer::ElasticNet { nu1: 0.05, nu2: 0.1 },
        Regularizer::Mcp { nu: 1.0, gamma: 2.0 },
    ]
}

/// Step sizes keeping step * rho < 1 for every kind above.
fn admissible_step(rng: &mut SplitMix64) -> f64 {
    rng.uniform(0.1, 1.5)
}

#[test]
fn prox_matches_grid_oracle_1d() {
    let mut rng = SplitMix64::new(101);
    let grid_points = 4001;
    for reg in all_kinds() {
        for _ in 0..80 {
            let z = vec![rng.uniform(-3.0, 3.0)];
            let step = admissible_step(&mut rng).min(1.9); // mcp needs step < 2
            let radius = z[0].abs() + 1.5;
            let exact = reg.prox(&z, step).unwrap();
            let grid = brute_force_prox(&reg, &z, step, radius, grid_points).unwrap();
            let spacing = brute_force_grid_spacing(radius, grid_points);
            let dev = (exact[0] - grid[0]).abs();
            assert!(
                dev <= 2.0 * spacing,
                "{} 1-d: |exact - grid| = {dev} > 2 * {spacing}",
                reg.kind_name()
            );
        }
    }
}

#[test]
fn prox_matches_grid_oracle_2d() {
    let mut rng = SplitMix64::new(202);
    let grid_points = 801;
    for reg in all_kinds() {
        for _ in 0..20 {
            let z = vec![rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)];
            let step = admissible_step(&mut rng).min(1.9);
            let radius = z.iter().fold(0.0f64, |m, x| m.max(x.abs())) + 1.5;
            let exact = reg.prox(&z, step).unwrap();
            let grid = brute_force_prox(&reg, &z, step, radius, grid_points).unwrap();
            // the simplex grid walks the constraint segment; its effective
            // spacing along each coordinate equals the parameter spacing
            let spacing = if matches!(reg, Regularizer::Simplex) {
                1.0 / (grid_points - 1) as f64
            } else {
                brute_force_grid_spacing(radius, grid_points)
            };
            let dev = exact
                .iter()
                .zip(&grid)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            assert!(
                dev <= 2.0 * spacing,
                "{} 2-d: ||exact - grid||_inf = {dev} > 2 * {spacing} (z = {z:?})",
                reg.kind_name()
            );
        }
    }
}

#[test]
fn cocoercivity_all_kinds() {
    let mut rng = SplitMix64::new(303);
    for reg in all_kinds() {
        let step = if reg.rho() > 0.0 { 0.9 / reg.rho() } else { 1.0 };
        let rep = check_cocoercivity(&reg, step, 5, 200, &mut rng).unwrap();
        assert!(
            rep.passed(),
            "{}: {} violations, worst gap {:?}",
            reg.kind_name(),
            rep.violations.len(),
            rep.violations.first().map(|v| v.2)
        );
    }
}

#[test]
fn prox_lipschitz_modulus() {
    // ||P(w) - P(y)|| <= ||w - y|| / (1 - step rho)
    let mut rng = SplitMix64::new(404);
    for reg in all_kinds() {
        let step = if reg.rho() > 0.0 { 0.5 / reg.rho() } else { 1.0 };
        let modulus = 1.0 / (1.0 - step * reg.rho());
        for _ in 0..200 {
            let w: Vec<f64> = (0..4).map(|_| rng.uniform(-5.0, 5.0)).collect();
            let y: Vec<f64> = (0..4).map(|_| rng.uniform(-5.0, 5.0)).collect();
            let pw = reg.prox(&w, step).unwrap();
            let py = reg.prox(&y, step).unwrap();
            assert!(
                linalg::dist(&pw, &py) <= modulus * linalg::dist(&w, &y) + 1e-12,
                "{} violates the prox Lipschitz bound",
                reg.kind_name()
            );
        }
    }
}

proptest! {
    #[test]
    fn soft_threshold_shrinks_toward_zero(z in -10.0f64..10.0, nu in 1e-6f64..2.0, step in 1e-3f64..3.0) {
        let reg = Regularizer::L1 { nu };
        let p = reg.prox(&[z], step).unwrap()[0];
        prop_assert!(p.abs() <= z.abs());
        prop_assert!(p * z >= 0.0);
        // subgradient optimality of the scalar prox
        if p != 0.0 {
            let resid = (z - p) / step - nu * p.signum();
            prop_assert!(resid.abs() <= 1e-9);
        } else {
            prop_assert!(z.abs() <= step * nu + 1e-12);
        }
    }

    #[test]
    fn simplex_projection_idempotent(a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0) {
        let reg = Regularizer::Simplex;
        let z = vec![a, b, c];
        let p = reg.prox(&z, 1.0).unwrap();
        let pp = reg.prox(&p, 1.0).unwrap();
        for (x, y) in p.iter().zip(&pp) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }
}
