use nvcpt::analysis::{dip_profile, linear_fit, LorentzianModel, Peak};
use nvcpt::bath::NoiseModel;
use nvcpt::experiments::power_to_rabi;
use nvcpt::nv::{cpt_resonance_positions, dressed_energies, eq1_amplitudes, eq1_state, DressedAmplitudes};
use nvcpt::quantum::{build_liouvillian, propagate, steady_state, CMatrix, CollapseOp, DensityMatrix, Operator, C64};
use nvcpt::spectrum::linspace;
use nvcpt::Spectrum;
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| C64::new(a, b))
}

fn hermitian(d: usize) -> impl Strategy<Value = Operator> {
    prop::collection::vec(complex(), d * d).prop_map(move |v| {
        let m = CMatrix::from_vec(d, d, v);
        Operator::new((&m + m.adjoint()) * C64::new(0.5, 0.0)).unwrap()
    })
}

fn channels(d: usize) -> impl Strategy<Value = Vec<CollapseOp>> {
    prop::collection::vec((0..d, 0..d, 0.05..3.0f64), 1..4)
        .prop_map(move |v| v.into_iter().map(|(i, j, g)| CollapseOp::new(Operator::transition(d, i, j), g)).collect())
}

fn state(d: usize) -> impl Strategy<Value = DensityMatrix> {
    prop::collection::vec(complex(), d * d).prop_map(move |v| {
        let a = CMatrix::from_vec(d, d, v);
        let m = &a * a.adjoint() + CMatrix::identity(d, d) * C64::new(1e-3, 0.0);
        let tr = m.trace();
        DensityMatrix::new(m / tr).unwrap()
    })
}

fn open_system() -> impl Strategy<Value = (Operator, Vec<CollapseOp>, DensityMatrix)> {
    (2usize..=4).prop_flat_map(|d| (hermitian(d), channels(d), state(d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn liouvillian_preserves_trace((h, ops, _) in open_system()) {
        let l = build_liouvillian(&h, &ops).unwrap();
        prop_assert!(l.trace_preservation_error() < 1e-12);
    }

    #[test]
    fn propagation_stays_physical((h, ops, rho0) in open_system()) {
        let traj = propagate(&h, None, &ops, &rho0, 0.5, 0.01).unwrap();
        for rho in &traj.states {
            prop_assert!((rho.trace() - 1.0).norm() < 1e-9);
            prop_assert!(rho.hermiticity_error() < 1e-10);
            prop_assert!(rho.min_eigenvalue() > -1e-8);
        }
    }

    #[test]
    fn steady_state_is_stationary((h, ops, _) in open_system()) {
        let l = build_liouvillian(&h, &ops).unwrap();
        // random channels may leave a decoherence-free subspace
        if let Ok(rho) = steady_state(&l) {
            prop_assert!((rho.trace() - 1.0).norm() < 1e-10);
            let drift = l.apply(&rho).unwrap();
            prop_assert!(drift.norm() < 1e-7 * l.norm().max(1.0));
        }
    }

    #[test]
    fn dressed_ladder_is_symmetric(om in 0.01..10.0f64, dn in -5.0..5.0f64) {
        let (l, d, u) = dressed_energies(om, dn);
        prop_assert_eq!(d, 0.0);
        prop_assert!((l + u).abs() < 1e-12);
        prop_assert!(u >= om / 2f64.sqrt() - 1e-12);
        prop_assert_eq!(dressed_energies(om, -dn), (l, d, u));
    }

    #[test]
    fn resonances_are_symmetric(om in 0.01..10.0f64, wb in 0.0..500.0f64) {
        let p = cpt_resonance_positions(om, wb);
        prop_assert_eq!(p[2], wb);
        for k in 0..2 {
            prop_assert!(((p[4 - k] - wb) + (p[k] - wb)).abs() < 1e-9);
            prop_assert!(p[k] < p[k + 1]);
        }
    }

    #[test]
    fn dressed_amplitudes_round_trip(
        c in prop::array::uniform4(complex()),
        t in 0.0..20.0f64,
        om in 0.05..5.0f64,
        wb in 0.0..300.0f64,
        nu in 0.0..5000.0f64,
    ) {
        let amps = DressedAmplitudes { c_d: c[0], c_l: c[1], c_u: c[2], c_e: c[3] };
        let psi = eq1_state(&amps, t, om, wb, nu);
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((norm - amps.norm_sqr()).abs() < 1e-10);
        let back = eq1_amplitudes(&psi, t, om, wb, nu);
        prop_assert!((back.c_d - amps.c_d).norm() < 1e-10);
        prop_assert!((back.c_l - amps.c_l).norm() < 1e-10);
        prop_assert!((back.c_u - amps.c_u).norm() < 1e-10);
        prop_assert!((back.c_e - amps.c_e).norm() < 1e-10);
    }

    #[test]
    fn line_fit_recovers_exact_lines(m in -10.0..10.0f64, b in -10.0..10.0f64, n in 3usize..40) {
        let x: Vec<f64> = (0..n).map(|i| i as f64 * 0.37 - 2.0).collect();
        let y: Vec<f64> = x.iter().map(|v| m * v + b).collect();
        let f = linear_fit(&x, &y, None).unwrap();
        prop_assert!((f.slope - m).abs() < 1e-9 * (1.0 + m.abs()));
        prop_assert!((f.intercept - b).abs() < 1e-9 * (1.0 + b.abs()));
    }

    #[test]
    fn dips_never_rise_above_baseline(
        base in -5.0..5.0f64,
        peaks in prop::collection::vec((-3.0..3.0f64, 0.01..2.0f64, 0.0..4.0f64), 1..6),
        x in -10.0..10.0f64,
    ) {
        let m = LorentzianModel { baseline: base, peaks: peaks.iter().map(|&(c, w, a)| Peak::dip(c, w, a)).collect() };
        prop_assert!(m.eval(x) <= base + 1e-12);
    }

    #[test]
    fn rabi_scales_with_root_power(p in 0.0..100.0f64, k in 0.1..2.0f64) {
        let r = power_to_rabi(p, k).unwrap();
        prop_assert!((r - k * p.sqrt()).abs() < 1e-12 * (1.0 + r));
        prop_assert!((power_to_rabi(4.0 * p, k).unwrap() - 2.0 * r).abs() < 1e-12 * (1.0 + r));
    }

    #[test]
    fn bath_draws_are_reproducible(sigma in 0.001..2.0f64, seed in any::<u64>(), index in 0usize..10_000) {
        let m = NoiseModel::static_gaussian(sigma, seed, 10_000);
        let a = m.sample(index, 1.0, 0.1).unwrap();
        prop_assert_eq!(a.clone(), m.sample(index, 1.0, 0.1).unwrap());
        prop_assert!(a.delta_n.is_finite());
    }

    #[test]
    fn half_depth_width_of_gaussians(w in 0.2..1.5f64, c in -0.3..0.3f64, depth in 0.01..1.0f64, curve in -0.05..0.05f64) {
        let x = linspace(-4.0, 4.0, 801);
        let y: Vec<f64> = x
            .iter()
            .map(|&v| 3.0 + curve * v * v - depth * (-4.0 * 2f64.ln() * (v - c).powi(2) / (w * w)).exp())
            .collect();
        let p = dip_profile(&Spectrum::new(x, y).unwrap(), 0.25).unwrap();
        prop_assert!((p.fwhm - w).abs() < 0.01 * w, "{} vs {}", p.fwhm, w);
    }
}
