use std::f64::consts::PI;

use ibob_core::tissue::{
    complex_permittivity, propagation_constants, tissue_loss_db, ColeColeParams, ColePole, ComplexPermittivity,
    Frequency, TissueTable, C0, EPS0, MU0,
};
use num_complex::Complex64;
use proptest::prelude::*;

/// Published four-pole parameters for muscle, typed in independently of the
/// shipped data file: (eps_inf, sigma_ionic, [(delta_eps, tau, alpha)]).
const MUSCLE: (f64, f64, [(f64, f64, f64); 4]) = (
    4.0,
    0.2,
    [
        (50.0, 7.234e-12, 0.1),
        (7000.0, 353.678e-9, 0.1),
        (1.2e6, 318.31e-6, 0.1),
        (2.5e7, 2.274e-3, 0.0),
    ],
);

/// Direct evaluation with (jωτ)^(1-α) written in polar form.
fn cole_cole_oracle(eps_inf: f64, sigma: f64, poles: &[(f64, f64, f64)], f: f64) -> (f64, f64) {
    let w = 2.0 * PI * f;
    let mut eps = Complex64::new(eps_inf, 0.0);
    for &(de, tau, alpha) in poles {
        let m = (w * tau).powf(1.0 - alpha);
        let phase = PI / 2.0 * (1.0 - alpha);
        let denom = Complex64::new(1.0 + m * phase.cos(), m * phase.sin());
        eps += de / denom;
    }
    eps += Complex64::new(0.0, -sigma / (w * EPS0));
    (eps.re, -w * EPS0 * eps.im)
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

#[test]
fn muscle_at_900_mhz_matches_published_model() {
    let f = Frequency::new(900e6).unwrap();
    let eps = TissueTable::builtin().permittivity("muscle", f).unwrap();
    let (er, sigma) = cole_cole_oracle(MUSCLE.0, MUSCLE.1, &MUSCLE.2, 900e6);
    assert!((eps.eps_r_real - 55.0).abs() <= 2.0, "eps_r {}", eps.eps_r_real);
    assert!((eps.sigma_eff - 0.94).abs() <= 0.05, "sigma {}", eps.sigma_eff);
    assert!((eps.eps_r_real - er).abs() / er < 1e-12);
    assert!((eps.sigma_eff - sigma).abs() / sigma < 1e-12);
}

#[test]
fn builtin_tissues_match_direct_evaluation() {
    let table = TissueTable::builtin();
    for name in ["skin", "skin_wet", "muscle", "fat"] {
        let p = table.get(name).unwrap();
        let poles: Vec<_> = p.poles().iter().map(|q| (q.delta_eps, q.tau_s, q.alpha)).collect();
        for f in log_grid(1e6, 1e10, 20) {
            let eps = complex_permittivity(p, Frequency::new(f).unwrap()).unwrap();
            let (er, s) = cole_cole_oracle(p.eps_inf(), p.sigma_ionic(), &poles, f);
            assert!((eps.eps_r_real - er).abs() <= 1e-12 * er, "{name} {f}");
            assert!((eps.sigma_eff - s).abs() <= 1e-12 * s, "{name} {f}");
        }
    }
}

#[test]
fn conductivity_rises_with_frequency_and_media_are_passive() {
    let table = TissueTable::builtin();
    for name in table.names() {
        let p = table.get(name).unwrap();
        let mut prev = 0.0;
        for f in log_grid(1e6, 1e10, 200) {
            let f = Frequency::new(f).unwrap();
            assert!(p.relative_permittivity(f).im <= 0.0, "{name} active at {f}");
            let s = complex_permittivity(p, f).unwrap().sigma_eff;
            assert!(s >= prev - 1e-9 * prev, "{name}: sigma fell at {f}");
            prev = s;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn conductivity_monotone_for_random_params(
        eps_inf in 1.0f64..10.0,
        sigma in 0.0f64..2.0,
        raw in prop::collection::vec((0.0f64..1e5, -12.0f64..-2.0, 0.0f64..0.95), 1..=4),
    ) {
        let poles = raw.iter().map(|&(de, lt, a)| ColePole { delta_eps: de, tau_s: 10f64.powf(lt), alpha: a }).collect();
        let p = ColeColeParams::new(eps_inf, poles, sigma).unwrap();
        let mut prev = 0.0;
        for f in log_grid(1e6, 1e10, 60) {
            let f = Frequency::new(f).unwrap();
            prop_assert!(p.relative_permittivity(f).im <= 0.0);
            let s = complex_permittivity(&p, f).unwrap().sigma_eff;
            prop_assert!(s >= prev - 1e-9 * prev);
            prev = s;
        }
    }
}

/// α and β from the textbook expression, without any rearrangement.
fn alpha_beta_oracle(er: f64, sigma: f64, f: f64) -> (f64, f64) {
    let w = 2.0 * PI * f;
    let t = sigma / (w * EPS0 * er);
    let k = MU0 * EPS0 * er / 2.0;
    (
        w * (k * ((1.0 + t * t).sqrt() - 1.0)).sqrt(),
        w * (k * ((1.0 + t * t).sqrt() + 1.0)).sqrt(),
    )
}

#[test]
fn propagation_constants_match_closed_form() {
    let table = TissueTable::builtin();
    for name in table.names() {
        for f in log_grid(1e6, 1e10, 20) {
            let band = Frequency::new(f).unwrap();
            let eps = table.permittivity(name, band).unwrap();
            let pc = propagation_constants(&eps, band).unwrap();
            let (a, b) = alpha_beta_oracle(eps.eps_r_real, eps.sigma_eff, f);
            assert!((pc.alpha_np_per_m - a).abs() <= 1e-9 * a, "{name} alpha at {f}");
            assert!((pc.beta_rad_per_m - b).abs() <= 1e-9 * b, "{name} beta at {f}");
            assert_eq!(pc.skin_depth_m, 1.0 / pc.alpha_np_per_m);
        }
    }
}

#[test]
fn muscle_per_cm_loss_at_2_4_ghz() {
    let f = Frequency::new(2.4e9).unwrap();
    let eps = TissueTable::builtin().permittivity("muscle", f).unwrap();
    let (a, _) = alpha_beta_oracle(eps.eps_r_real, eps.sigma_eff, 2.4e9);
    let per_cm = tissue_loss_db(&eps, f, 0.01).unwrap();
    let expect = 20.0 / std::f64::consts::LN_10 * a * 0.01;
    assert!((per_cm - expect).abs() <= 1e-9 * expect);
}

#[test]
fn good_conductor_skin_depth() {
    let f = Frequency::new(1e6).unwrap();
    let copper = ComplexPermittivity::new(1.0, 5.8e7).unwrap();
    let d = propagation_constants(&copper, f).unwrap().skin_depth_m;
    let oracle = (1.0 / (PI * 1e6 * MU0 * 5.8e7)).sqrt();
    assert!((d - oracle).abs() / oracle < 0.01);
    assert!((d - 66e-6).abs() / 66e-6 < 0.01, "{d}");
}

#[test]
fn lossless_media() {
    for f in log_grid(1e6, 1e10, 9) {
        let band = Frequency::new(f).unwrap();
        let pc = propagation_constants(&ComplexPermittivity::VACUUM, band).unwrap();
        assert_eq!(pc.alpha_np_per_m, 0.0);
        assert!(pc.skin_depth_m.is_infinite());
        assert!((pc.beta_rad_per_m - 2.0 * PI * f / C0).abs() <= 1e-12 * pc.beta_rad_per_m);
        let glass = ComplexPermittivity::new(4.0, 0.0).unwrap();
        let pc = propagation_constants(&glass, band).unwrap();
        assert_eq!(pc.beta_rad_per_m, band.omega() * (MU0 * EPS0 * 4.0).sqrt());
    }
}

#[test]
fn skin_depth_falls_with_frequency() {
    let eps = ComplexPermittivity::new(50.0, 0.8).unwrap();
    let mut prev = f64::INFINITY;
    for f in log_grid(1e6, 1e10, 100) {
        let d = propagation_constants(&eps, Frequency::new(f).unwrap())
            .unwrap()
            .skin_depth_m;
        assert!(d < prev);
        prev = d;
    }
}

#[test]
fn layer_losses_add() {
    let f = Frequency::new(900e6).unwrap();
    let table = TissueTable::builtin();
    let muscle = table.permittivity("muscle", f).unwrap();
    let fat = table.permittivity("fat", f).unwrap();
    assert_eq!(tissue_loss_db(&muscle, f, 0.0).unwrap(), 0.0);
    let a = tissue_loss_db(&muscle, f, 0.013).unwrap() + tissue_loss_db(&fat, f, 0.007).unwrap();
    let b = tissue_loss_db(&muscle, f, 0.005).unwrap()
        + tissue_loss_db(&muscle, f, 0.008).unwrap()
        + tissue_loss_db(&fat, f, 0.007).unwrap();
    assert!((a - b).abs() <= 1e-12 * a);
    assert!(tissue_loss_db(&muscle, f, -0.01).is_err());
}

#[test]
fn one_neper_per_meter_is_8_686_db() {
    // α = 1 Np/m needs tan δ chosen so that ω·sqrt(k(√(1+t²)−1)) = 1.
    let f = Frequency::new(1e8).unwrap();
    let w = f.omega();
    let er = 10.0;
    let k = MU0 * EPS0 * er / 2.0;
    let s = 1.0 / (w * w * k) + 1.0;
    let t = (s * s - 1.0).sqrt();
    let eps = ComplexPermittivity::new(er, t * w * EPS0 * er).unwrap();
    let l = tissue_loss_db(&eps, f, 1.0).unwrap();
    assert!((l - 8.686).abs() < 1e-3, "{l}");
}
