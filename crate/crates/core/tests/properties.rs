use std::f64::consts::PI;

use echoq_core::analysis::{fit_revival, FitOptions};
use echoq_core::bath::{hyperfine_vector, BathConfig, BathRealization, NucleusCoupling, PolarizationSpec};
use echoq_core::constants::larmor_c13;
use echoq_core::echo::{bath_signal, pseudo_spin_closed, pseudo_spin_exact, uniform_grid, EchoSignal, SignalMeta};
use echoq_core::su2::{density_from_polarization, unitary_from_axis_angle, ComplexMat2, Su2};
use echoq_core::Vec3;
use num_complex::Complex64;
use proptest::prelude::*;

fn unit() -> impl Strategy<Value = Vec3> {
    (0.0..PI, 0.0..2.0 * PI).prop_map(|(t, p)| Vec3::new(t.sin() * p.cos(), t.sin() * p.sin(), t.cos()))
}

/// Taylor series of exp(−iθ n·σ/2), 40 terms.
fn taylor(axis: Vec3, angle: f64) -> ComplexMat2 {
    let h = ComplexMat2::pauli_dot(&axis).scale(Complex64::new(0.0, -0.5 * angle));
    let mut term = ComplexMat2::identity();
    let mut sum = ComplexMat2::identity();
    for k in 1..40 {
        term = (term * h).scale(Complex64::new(1.0 / k as f64, 0.0));
        sum = sum + term;
    }
    sum
}

fn coupling(omega0: f64, larmor_dir: Vec3, hyperfine: Vec3, p: f64) -> NucleusCoupling {
    NucleusCoupling::from_vectors(larmor_dir * omega0, hyperfine, Vec3::Z, &PolarizationSpec::along_field(p), None)
        .unwrap()
}

fn rotate(v: Vec3, axis: Vec3, angle: f64) -> Vec3 {
    Su2::rotation(axis, angle).rotate_bloch(&v)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn unitary_matches_series(axis in unit(), angle in -4.0 * PI..4.0 * PI) {
        let u = unitary_from_axis_angle(axis, angle).unwrap();
        prop_assert!(u.max_abs_diff(&taylor(axis, angle)) < 1e-12);
    }

    #[test]
    fn same_axis_rotations_compose(axis in unit(), a in -7.0..7.0f64, b in -7.0..7.0f64) {
        let ua = unitary_from_axis_angle(axis, a).unwrap();
        let ub = unitary_from_axis_angle(axis, b).unwrap();
        let uab = unitary_from_axis_angle(axis, a + b).unwrap();
        prop_assert!((ua * ub).max_abs_diff(&uab) < 1e-12);
    }

    #[test]
    fn purity_of_density(p in -1.0..=1.0f64, m in unit()) {
        let rho = density_from_polarization(p, m).unwrap();
        let purity = (rho * rho).trace();
        prop_assert!((purity.re - 0.5 * (1.0 + p * p)).abs() < 1e-12);
        prop_assert!(purity.im.abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_trace(
        omega0 in 1e2..1e7f64,
        ratio in 0.01..50.0f64,
        tilt in 0.0..PI,
        tau in 0.0..1e-3f64,
        p in -1.0..=1.0f64,
    ) {
        let n = NucleusCoupling::synthetic(omega0, ratio * omega0, tilt, &PolarizationSpec::along_field(p)).unwrap();
        let exact = pseudo_spin_exact(&n, tau);
        let closed = pseudo_spin_closed(&n, tau).unwrap();
        prop_assert!((exact - closed).norm() <= 1e-10, "{exact} vs {closed}");
    }

    #[test]
    fn real_part_ignores_polarization(omega0 in 1e3..1e6f64, ratio in 0.1..10.0f64, tilt in 0.0..PI, tau in 0.0..1e-3f64) {
        let re = |p: f64| {
            let n = NucleusCoupling::synthetic(omega0, ratio * omega0, tilt, &PolarizationSpec::along_field(p)).unwrap();
            pseudo_spin_exact(&n, tau).re
        };
        prop_assert!((re(-1.0) - re(0.0)).abs() < 1e-12);
        prop_assert!((re(1.0) - re(0.0)).abs() < 1e-12);
    }

    #[test]
    fn imaginary_part_linear_and_odd(omega0 in 1e3..1e6f64, ratio in 0.1..10.0f64, tilt in 0.0..PI, tau in 0.0..1e-3f64, p in -1.0..=1.0f64) {
        let im = |p: f64| {
            let n = NucleusCoupling::synthetic(omega0, ratio * omega0, tilt, &PolarizationSpec::along_field(p)).unwrap();
            pseudo_spin_exact(&n, tau).im
        };
        prop_assert!((im(p) - p * im(1.0)).abs() < 1e-12);
        prop_assert!((im(-p) + im(p)).abs() < 1e-12);
    }

    #[test]
    fn reversing_field_coupling_and_polarization_conjugates(
        dir in unit(),
        a in unit(),
        a_scale in 1e2..1e6f64,
        b in 0.5..500.0f64,
        tau in 0.0..1e-3f64,
        p in -1.0..=1.0f64,
    ) {
        let omega0 = larmor_c13(b);
        let fwd = coupling(omega0, dir, a * a_scale, p);
        let rev = coupling(omega0, -dir, -(a * a_scale), -p);
        let s = pseudo_spin_exact(&fwd, tau);
        let r = pseudo_spin_exact(&rev, tau);
        prop_assert!((r - s.conj()).norm() < 1e-10, "{s} {r}");
    }

    #[test]
    fn bath_modulus_is_product_of_moduli(
        b in 1.0..200.0f64,
        specs in proptest::collection::vec((0.05..20.0f64, 0.0..PI, -1.0..=1.0f64), 1..12),
        tau in proptest::collection::vec(1e-7..1e-3f64, 1..8),
    ) {
        let omega0 = larmor_c13(b);
        let nuclei: Vec<NucleusCoupling> = specs
            .iter()
            .map(|&(r, t, p)| NucleusCoupling::synthetic(omega0, r * omega0, t, &PolarizationSpec::along_field(p)).unwrap())
            .collect();
        let bath = BathRealization {
            config: BathConfig::hollow_sphere(b, 0.01, 0),
            polarization_spec: PolarizationSpec::along_field(1.0),
            realization: 0,
            occupation_seed: 0,
            nuclei: nuclei.clone(),
        };
        let mut grid = tau.clone();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let sig = bath_signal(&bath, &grid).unwrap();
        for (t, s) in grid.iter().zip(&sig.s) {
            let prod: f64 = nuclei.iter().map(|n| pseudo_spin_exact(n, *t).norm()).product();
            prop_assert!((s.norm() - prod).abs() < 1e-9);
        }
    }

    #[test]
    fn hyperfine_rotates_with_geometry(pos in unit(), r in 0.3..6.0f64, axis in unit(), angle in 0.0..2.0 * PI) {
        let rot = (pos + Vec3::new(0.3, -0.2, 0.1)).normalized().unwrap();
        let nv = Vec3::new(1.0, 1.0, 1.0).normalized().unwrap();
        let p = pos * r;
        let a = hyperfine_vector(p, nv).unwrap();
        let a_rot = hyperfine_vector(rotate(p, rot, angle), rotate(nv, rot, angle)).unwrap();
        prop_assert!((a_rot - rotate(a, rot, angle)).norm() <= 1e-10 * a.norm());
        let _ = axis;
    }

    #[test]
    fn couplings_invariant_under_joint_rotation(pos in unit(), r in 0.65..5.5f64, b in 1.0..500.0f64, rot in unit(), angle in 0.0..2.0 * PI) {
        let nv = Vec3::new(1.0, 1.0, 1.0).normalized().unwrap();
        let omega0 = larmor_c13(b);
        let pol = PolarizationSpec::along_field(1.0);
        let p = pos * r;
        let n = NucleusCoupling::from_vectors(nv * omega0, hyperfine_vector(p, nv).unwrap(), nv, &pol, Some(p)).unwrap();
        let nv_r = rotate(nv, rot, angle);
        let p_r = rotate(p, rot, angle);
        let m = NucleusCoupling::from_vectors(nv_r * omega0, hyperfine_vector(p_r, nv_r).unwrap(), nv_r, &pol, Some(p_r)).unwrap();
        prop_assert!(((n.omega1 - m.omega1) / n.omega1).abs() < 1e-10);
        prop_assert!((n.mixing().sqrt() - m.mixing().sqrt()).abs() < 1e-10);
    }

    #[test]
    fn fit_recovers_synthetic_revivals(
        cycles in 1.5..8.0f64,
        width_frac in 0.04..0.12f64,
        c in 0.1..0.95f64,
        phi in -PI..PI,
        sign in prop_oneof![Just(1.0), Just(-1.0)],
    ) {
        let omega0 = 2.0 * PI * 10.705e3;
        let period = 2.0 * PI / omega0;
        let width = width_frac * period;
        let varpi = sign * cycles / width;
        let tr = period;
        let tau = uniform_grid(0.5 * tr, 1.5 * tr, 2001);
        let s = tau
            .iter()
            .map(|&t| {
                let env = (-((t - tr) / width).powi(2)).exp();
                let lam = 0.01 + 0.99 * env;
                let q = env * c * (varpi * (t - tr) + phi).sin();
                Complex64::new((lam * lam - q * q).max(0.0).sqrt(), q)
            })
            .collect();
        let sig = EchoSignal { tau, s, meta: SignalMeta { omega0, ..Default::default() } };
        let fit = fit_revival(&sig, 1, &FitOptions::default()).unwrap();
        // (ϖ, φ) and (−ϖ, π − φ) give the same Q; the sign follows the phase rotation
        prop_assert!(((fit.varpi.abs() - varpi.abs()) / varpi).abs() < 0.01, "varpi {} vs {varpi}", fit.varpi);
        let expected_phase = if fit.varpi.signum() == varpi.signum() { phi } else { PI - phi };
        let dphi = (fit.phase - expected_phase + PI).rem_euclid(2.0 * PI) - PI;
        prop_assert!(dphi.abs() < 0.02, "phase {} vs {expected_phase}", fit.phase);
        prop_assert!(((fit.delta_t - width) / width).abs() < 0.01, "dt {} vs {width}", fit.delta_t);
        prop_assert!(((fit.amplitude - c) / c).abs() < 0.02, "C {} vs {c}", fit.amplitude);
        prop_assert!(fit.delta_t > 0.0 && (0.0..=1.0).contains(&fit.contrast));
    }
}

#[test]
fn lattice_equivalent_axes_give_same_couplings() {
    use echoq_core::bath::build_bath;
    let pol = PolarizationSpec::along_field(1.0);
    let mut a = BathConfig::hollow_sphere(10.0, 1.0, 0);
    a.r_max_nm = 1.2;
    let mut b = a.clone();
    b.nv_axis = Vec3::new(1.0, -1.0, -1.0).normalized().unwrap();
    let key = |cfg: &BathConfig| {
        let mut v: Vec<(i64, i64)> = build_bath(cfg, &pol, 0)
            .unwrap()
            .nuclei
            .iter()
            .map(|n| ((n.omega1 * 1e3).round() as i64, (n.mixing() * 1e12).round() as i64))
            .collect();
        v.sort();
        v
    };
    assert_eq!(key(&a), key(&b));
}
