use std::f64::consts::E;

use gef_core::constants::{h, q_of_p, z_const};
use gef_core::optimizer::discrete_i;
use gef_core::radial::{b_alpha, catalog, functional_i, g_nu, jensen_check, Catalog};
use gef_core::roots::{count_in_disk, relative_residuals, roots};
use gef_core::sampler::density::{log_joint_density_of, log_s_quadrature};
use gef_core::sampler::energy::{discrete_energy, smoothed_energy_of};
use gef_core::sampler::JointDensityContext;
use gef_core::{Annulus, Atom, CoeffVector, Complex64, Constraint, RadialMeasure, ShellGrid, StreamSeed};
use proptest::prelude::*;

fn measure() -> impl Strategy<Value = RadialMeasure> {
    (
        prop::collection::vec((0.05f64..3.0, 0.01f64..1.0), 0..4),
        prop::collection::vec(0.0f64..3.0, 2..=4),
        prop::collection::vec(0.1f64..1.0, 2),
    )
        .prop_filter_map("needs positive mass", |(atoms, mut cuts, cs)| {
            cuts.sort_by(f64::total_cmp);
            let annuli: Vec<Annulus> = cuts
                .chunks_exact(2)
                .zip(cs)
                .filter(|(w, _)| w[1] > w[0])
                .map(|(w, c)| Annulus { lo: w[0], hi: w[1], c })
                .collect();
            let atoms = atoms.into_iter().map(|(r, mass)| Atom { r, mass }).collect();
            let nu = RadialMeasure::new(atoms, annuli).ok()?;
            let m = nu.total_mass();
            (m > 0.0).then(|| nu.scaled(1.0 / m))
        })
}

fn points(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-2.5f64..2.5, -2.5f64..2.5), n)
        .prop_map(|v| v.into_iter().map(|(x, y)| Complex64::new(x, y)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn q_solves_the_companion_equation(p in 0.0f64..6.0) {
        let q = q_of_p(p).unwrap();
        if p > 0.0 && p < E && (p - 1.0).abs() > 1e-3 {
            prop_assert!((h(q) - h(p)).abs() < 1e-12);
            prop_assert!((q - 1.0) * (p - 1.0) < 0.0);
            prop_assert!((q_of_p(q).unwrap() - p).abs() < 1e-8);
        }
        prop_assert!(z_const(p).unwrap() >= 0.0);
    }

    #[test]
    fn catalog_measures_are_probabilities(p in prop_oneof![0.0f64..0.99, 1.01f64..6.0], extra in 0.5f64..10.0) {
        let q = q_of_p(p).unwrap();
        let alpha = p.max(q).max(E) + extra;
        let nu = catalog(p, alpha, Catalog::GefConstrained).unwrap();
        prop_assert!((nu.total_mass() - 1.0).abs() < 1e-12);
        let (b, _) = b_alpha(&nu, alpha);
        for k in 0..200 {
            let s = 3.0 * alpha.sqrt() * k as f64 / 199.0;
            prop_assert!(g_nu(&nu, alpha, b, s) <= 1e-10);
        }
    }

    #[test]
    fn jensen_sides_agree(nu in measure(), r in 0.01f64..4.0) {
        prop_assume!(nu.atoms.iter().all(|a| a.r > 0.0));
        let (a, b) = jensen_check(&nu, r).unwrap();
        prop_assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn b_alpha_dominates_probe_grid(nu in measure(), alpha in 3.0f64..20.0) {
        let (b, _) = b_alpha(&nu, alpha);
        for k in 0..500 {
            let s = 10.0 * alpha.sqrt() * k as f64 / 499.0;
            prop_assert!(2.0 * (nu.log_potential(s) - s * s / (2.0 * alpha)) <= b + 1e-10);
        }
    }

    #[test]
    fn shell_grid_functional_matches_radial(masses in prop::collection::vec(0.0f64..1.0, 10..60), alpha in 4.0f64..16.0) {
        let total: f64 = masses.iter().sum();
        prop_assume!(total > 0.1);
        let m = masses.len();
        let radii = ShellGrid::uniform_radii(m, alpha).unwrap();
        let masses = masses.iter().map(|x| x / total).collect();
        let g = ShellGrid::new(radii, masses, Constraint::None).unwrap();
        let t = g.default_smoothing();
        let d = discrete_i(&g, alpha, t);
        let rep = functional_i(&g.to_measure(t), alpha).unwrap();
        prop_assert!((d.i_alpha - rep.i_alpha).abs() < 1e-9);
    }

    #[test]
    fn density_is_permutation_invariant(z in points(2..20), l in 0.5f64..3.0, seed in any::<u64>()) {
        let ctx = JointDensityContext::new(z.len(), l).unwrap();
        let a = log_joint_density_of(&z, &ctx);
        prop_assume!(a.is_ok());
        let a = a.unwrap();
        let mut w = z.clone();
        let k = (seed as usize) % w.len();
        w.rotate_left(k);
        w.reverse();
        let b = log_joint_density_of(&w, &ctx).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn vieta_s_matches_quadrature(z in points(1..16), l in 0.5f64..3.0) {
        let ctx = JointDensityContext::new(z.len(), l).unwrap();
        prop_assert!((ctx.log_s(&z) - log_s_quadrature(&z, l)).abs() < 1e-9);
    }

    #[test]
    fn smoothed_energy_bounds_discrete(z in points(2..40), logt in -4.0f64..-1.0) {
        let t = 10f64.powf(logt);
        let n = z.len() as f64;
        prop_assume!(gef_core::roots::min_gap(&z).map_or(true, |g| g.2 > 1e-9));
        prop_assert!(discrete_energy(&z) <= smoothed_energy_of(&z, t) + (1.0 / t).ln() / n + 1e-12);
    }

    #[test]
    fn roots_have_small_residuals(seed in any::<u64>(), n in 1usize..60) {
        let c = CoeffVector::sample(n, 1.5, &mut StreamSeed(seed).stream(0)).unwrap();
        let zc = roots(&c).unwrap();
        prop_assert_eq!(zc.zeros.len(), n);
        prop_assert_eq!(count_in_disk(&zc, f64::INFINITY), n);
        for res in relative_residuals(&c, &zc) {
            prop_assert!(res < 1e-10, "residual {}", res);
        }
    }
}
