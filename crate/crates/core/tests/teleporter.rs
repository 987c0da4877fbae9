use proptest::prelude::*;
use std::f64::consts::SQRT_2;
use teleportsim::teleporter::{
    closed_form, conditional_variance_epr, output_moments, tv_parameters, unity_gain_phi, unity_gain_phi_xy,
};
use teleportsim::{EprSpec, TeleporterConfig};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Output mean of the x quadrature built directly from the conditional
/// moments of the lossless symmetric teleporter.
fn mean_x_reference(r: f64, phi: f64, g: f64, xin: f64) -> f64 {
    let (c11, _, c13, _) = EprSpec::symmetric(r).entries();
    let g2 = g * g;
    c13 * (1.0 - g2) * xin / (1.0 + c11) + phi * g2 * xin / SQRT_2
}

fn var_x_reference(r: f64, phi: f64, g: f64) -> f64 {
    let (c11, _, c13, _) = EprSpec::symmetric(r).entries();
    let vm = (1.0 + c11) / 2.0;
    let c = -c13 / SQRT_2;
    let conditional = c11 - c * c / vm;
    let g2 = g * g;
    // Bob's quadrature given the amplified outcome: conditional variance plus
    // the regression term driven by the amplified outcome variance.
    conditional + (c / vm + phi).powi(2) * g2 * vm
}

#[test]
fn schur_path_reproduces_epr_conditional_variance() {
    use teleportsim::gaussian::{epr_covariance, Quadrature};
    for k in 0..20 {
        let r = 0.1 * k as f64;
        let s = epr_covariance(&EprSpec::symmetric(r)).unwrap();
        let post = s.condition_on_quadrature(0, Quadrature::X, 0.7).unwrap();
        assert!((post.cov()[(0, 0)] - conditional_variance_epr(r)).abs() < 1e-10);
        assert!((conditional_variance_epr(r) - 1.0 / (2.0 * r).cosh()).abs() < 1e-12);
    }
}

#[test]
fn classical_bound_holds_without_squeezing() {
    for k in 0..=60 {
        let phi = 0.05 * k as f64;
        let cfg = TeleporterConfig::unity_gain(0.0, [1.0, 1.0]).with_phi(phi);
        let tv = tv_parameters(&cfg).unwrap();
        assert!(tv.t_q < 1.0 + 1e-9 || tv.v_q > 1.0 - 1e-9, "phi={phi}: {tv:?}");
    }
}

#[test]
fn variance_grows_with_loss_at_unity_gain() {
    for r in [0.2, 0.3454, 0.8, 1.5] {
        for g in [1.0, 1.2, 1.5] {
            let mut last = f64::NEG_INFINITY;
            for k in 0..=20 {
                let eta = 1.0 - 0.04 * k as f64;
                let base = TeleporterConfig::unity_gain(r, [1.0, 1.0])
                    .with_gain(g)
                    .with_efficiency(eta);
                let (px, py) = unity_gain_phi_xy(&base).unwrap();
                let cfg = TeleporterConfig {
                    phi_x: px,
                    phi_y: py,
                    ..base
                };
                let m = output_moments(&cfg).unwrap();
                assert!((m.mean_x - 1.0).abs() < 1e-10);
                let excess = m.var_x - 1.0;
                assert!(excess >= last - 1e-12, "r={r} g={g} eta={eta}");
                last = excess;
            }
        }
    }
}

#[test]
fn unity_gain_phi_closed_form() {
    for r in [0.0, 0.3, 1.0] {
        for g in [1.0, 1.3, 2.0] {
            let phi = unity_gain_phi(r, g).unwrap();
            let expected = (SQRT_2 + SQRT_2 * r.tanh() * (g * g - 1.0)) / (g * g);
            assert!((phi - expected).abs() < 1e-12);
            let cfg = TeleporterConfig::unity_gain(r, [0.9, -0.4]).with_gain(g).with_phi(phi);
            let m = output_moments(&cfg).unwrap();
            assert!((m.mean_x - 0.9).abs() < 1e-10);
            assert!((m.mean_y + 0.4).abs() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn moments_match_conditional_reference(r in 0.0..2.0f64, phi in 0.0..3.0f64, g in 1.0..2.5f64, xin in -3.0..3.0f64) {
        let cfg = TeleporterConfig::unity_gain(r, [xin, 1.0]).with_phi(phi).with_gain(g);
        let m = output_moments(&cfg).unwrap();
        prop_assert!((m.mean_x - mean_x_reference(r, phi, g, xin)).abs() < 1e-9 * (1.0 + xin.abs() * (2.0 * r).cosh()));
        prop_assert!(rel(m.var_x, var_x_reference(r, phi, g)) < 1e-10);
        // x and y are mirror images for symmetric squeezing.
        prop_assert!(rel(m.var_y, m.var_x) < 1e-10);
    }

    #[test]
    fn lossy_closed_forms_reduce_to_lossless(r in 0.0..1.5f64, phi in 0.2..2.5f64, g in 1.0..2.0f64, xin in 0.2..3.0f64) {
        let t5 = closed_form::t_q_lossy(xin, phi, g, r, 1.0);
        let t3 = closed_form::t_q_ideal(xin, phi, g, r);
        prop_assert!(rel(t5, t3) < 1e-8);
        let v6 = closed_form::v_q_lossy(xin, phi, g, r, 1.0);
        let v4 = closed_form::v_q_ideal(xin, phi, g, r);
        prop_assert!(rel(v6, v4) < 1e-8);
    }

    #[test]
    fn first_principles_tv_match_closed_forms(r in 0.0..1.5f64, phi in 0.2..2.5f64, g in 1.0..2.0f64, xin in 0.2..3.0f64) {
        let cfg = TeleporterConfig::unity_gain(r, [xin, xin]).with_phi(phi).with_gain(g);
        let tv = tv_parameters(&cfg).unwrap();
        // The printed T_q carries a ⟨X_in⟩² factor; V_q is written for ⟨X_in⟩ = 1.
        prop_assert!(rel(closed_form::t_q_ideal(xin, phi, g, r) / (xin * xin), tv.t_q) < 1e-8);
        prop_assert!(rel(closed_form::v_q_ideal(1.0, phi, g, r), tv.v_q) < 1e-8);
    }

    #[test]
    fn continuous_at_unit_gain(r in 0.0..1.0f64, phi in 0.0..2.0f64, eta in 0.3..=1.0f64) {
        let base = TeleporterConfig::unity_gain(r, [1.2, -0.7]).with_phi(phi).with_efficiency(eta);
        let a = output_moments(&base).unwrap();
        let b = output_moments(&base.with_gain(1.0 + 1e-8)).unwrap();
        for (x, y) in [(a.mean_x, b.mean_x), (a.mean_y, b.mean_y), (a.var_x, b.var_x), (a.var_y, b.var_y)] {
            prop_assert!((x - y).abs() < 1e-6);
        }
    }
}
