use exciton_fcs::bath::BathSpec;
use exciton_fcs::lds::{theta_full, theta_prime};
use exciton_fcs::*;
use nalgebra::DMatrix;
use proptest::prelude::*;

// Random 2–4 site models with well-separated site energies so that exciton
// gaps stay nondegenerate.
fn site_model() -> impl Strategy<Value = SiteModel> {
    (2usize..=4)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(-40.0f64..40.0, n),
                prop::collection::vec(-90.0f64..90.0, n * (n - 1) / 2),
                Just(n),
            )
        })
        .prop_map(|(jitter, j, n)| {
            let energies: Vec<f64> = (0..n)
                .map(|m| 137.0 * m as f64 * (1.0 + 0.31 * m as f64) + jitter[m])
                .collect();
            let mut pairs = Vec::new();
            let mut k = 0;
            for a in 0..n {
                for b in a + 1..n {
                    pairs.push((a, b, j[k]));
                    k += 1;
                }
            }
            SiteModel::from_pairs(energies, &pairs).unwrap()
        })
}

fn bath() -> impl Strategy<Value = BathSpec> {
    (10.0f64..80.0, 50.0f64..300.0, 50.0f64..400.0)
        .prop_map(|(er, wc, t)| BathSpec::new(er, wc, t).unwrap())
}

fn generator(model: &SiteModel, bath: &BathSpec) -> Option<TiltedGenerator> {
    let basis = diagonalize(model).ok()?;
    TiltedGenerator::new(&basis, bath, &[ChannelSelector::AllDown]).ok()
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn basis_is_orthonormal_and_reconstructs(model in site_model()) {
        let basis = diagonalize(&model).unwrap();
        let c = basis.amplitudes();
        let n = model.n_sites();
        prop_assert!(max_abs(&(c.transpose() * c - DMatrix::identity(n, n))) < 1e-10);
        prop_assert!(max_abs(&(basis.reconstruct_hamiltonian() - model.hamiltonian())) < 1e-9);
        let trace: f64 = model.energies().iter().sum();
        let sum: f64 = basis.energies().iter().sum();
        prop_assert!((trace - sum).abs() < 1e-9);
        prop_assert!(basis.energies().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn intensity_factor_symmetric_with_unit_row_sums(model in site_model()) {
        let basis = diagonalize(&model).unwrap();
        let n = basis.n_excitons();
        for a in 0..n {
            let mut row = 0.0;
            for b in 0..n {
                let i_ab = basis.intensity_factor(a, b).unwrap();
                prop_assert!((0.0..=1.0 + 1e-12).contains(&i_ab));
                prop_assert!((i_ab - basis.intensity_factor(b, a).unwrap()).abs() < 1e-14);
                row += i_ab;
            }
            prop_assert!((row - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rates_obey_detailed_balance(model in site_model(), bath in bath()) {
        let Some(g) = generator(&model, &bath) else { return Ok(()) };
        for up in g.channels().iter().filter(|c| !c.is_dephasing() && c.omega > 0.0) {
            let down = g.channel(up.to, up.from).unwrap();
            if down.rate == 0.0 {
                continue;
            }
            let expected = libm::exp(-bath.beta() * up.omega);
            prop_assert!(((up.rate / down.rate) - expected).abs() <= 1e-10 * expected);
        }
    }

    #[test]
    fn untilted_generator_preserves_trace(model in site_model(), bath in bath()) {
        let Some(g) = generator(&model, &bath) else { return Ok(()) };
        let scale = g.channels().iter().map(|c| c.rate).fold(1.0, f64::max);
        prop_assert!(g.trace_residual(0.0) < 1e-12 * scale);
    }

    #[test]
    fn stationary_density_is_boltzmann(model in site_model(), bath in bath()) {
        let Some(g) = generator(&model, &bath) else { return Ok(()) };
        let rho = g.stationary_density().unwrap();
        for (a, p) in g.boltzmann_populations().iter().enumerate() {
            prop_assert!((rho[(a, a)].re - p).abs() < 1e-8);
        }
    }

    #[test]
    fn population_block_carries_the_top_eigenvalue(
        model in site_model(),
        bath in bath(),
        s in -2.0f64..10.0,
    ) {
        let Some(g) = generator(&model, &bath) else { return Ok(()) };
        let block = theta(&g, s).unwrap();
        let full = theta_full(&g, s).unwrap();
        let scale = g.channels().iter().map(|c| c.rate).fold(1.0, f64::max);
        prop_assert!((block - full).abs() < 1e-9 * scale, "{block} vs {full}");
    }

    #[test]
    fn theta_is_convex_and_activity_decreasing(model in site_model(), bath in bath()) {
        let Some(g) = generator(&model, &bath) else { return Ok(()) };
        let grid = SGrid::new(-2.0, 10.0, 61).unwrap();
        let pts = scan(&g, &grid).unwrap();
        for w in pts.windows(3) {
            prop_assert!(w[0].theta - 2.0 * w[1].theta + w[2].theta >= -1e-9);
        }
        for w in pts.windows(2) {
            prop_assert!(w[1].activity <= w[0].activity * (1.0 + 1e-9) + 1e-12);
        }
        prop_assert!(pts[10].theta.abs() < 1e-10);
    }

    #[test]
    fn derivative_identity_matches_central_difference(
        model in site_model(),
        bath in bath(),
        s in -1.0f64..2.0,
    ) {
        let Some(g) = generator(&model, &bath) else { return Ok(()) };
        let analytic = theta_prime(&g, s).unwrap();
        let fd = lds::first_derivative_fd(&g, s).unwrap();
        prop_assert!((analytic - fd).abs() <= 1e-7 * analytic.abs().max(1e-12));
    }

    #[test]
    fn uncoupled_sites_never_jump(
        energies in prop::collection::vec(0.0f64..1.0, 2..=4),
        s in -2.0f64..10.0,
    ) {
        let energies: Vec<f64> = energies.iter().enumerate().map(|(m, e)| 100.0 * m as f64 + e).collect();
        let model = SiteModel::from_pairs(energies, &[]).unwrap();
        let basis = diagonalize(&model).unwrap();
        let g = TiltedGenerator::new(&basis, &BathSpec::fmo(300.0).unwrap(), &[ChannelSelector::AllDown]).unwrap();
        prop_assert!(g.channels().iter().filter(|c| !c.is_dephasing()).all(|c| c.rate == 0.0));
        prop_assert_eq!(theta(&g, s).unwrap(), 0.0);
        prop_assert_eq!(lds::theta_derivatives(&g, s).unwrap().mandel, None);
    }

    #[test]
    fn two_state_mandel_matches_closed_form(kappa in 0.1f64..50.0, gamma in 0.1f64..50.0, s in -2.0f64..12.0) {
        let two = ClassicalTwoState::new(kappa, gamma).unwrap();
        let q = mandel(&two, s).unwrap();
        let expected = two.mandel(s);
        prop_assert!(((q - expected) / expected).abs() < 1e-8, "{q} vs {expected}");
        prop_assert!(q < 0.0);
    }
}
