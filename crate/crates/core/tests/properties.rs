use proptest::prelude::*;

use microdisk::cmt::{array_transmission, doublet_transmission, linspace, JointLossModel, ResonatorCMTParams};
use microdisk::fitting::fit_doublet;
use microdisk::perturb::{
    adsorption_shift, film_shift_to_thickness, thickness_to_shift, AdsorptionModel, FilmModel,
};
use microdisk::units::{finesse, q_from_linewidth, wavelength_offset_to_frequency_hz};

fn resonator() -> impl Strategy<Value = ResonatorCMTParams> {
    (845.0..860.0f64, 1e6..1e9f64, 0.0..5.0f64, 0.0..5.0f64)
        .prop_map(|(l, ki, e, b)| ResonatorCMTParams::new("p", l, ki, ki * e, ki * b).unwrap())
}

/// Grid with `per_width` samples per loaded linewidth over ±10 linewidths plus the splitting.
fn fit_grid(p: &ResonatorCMTParams, per_width: f64) -> Vec<f64> {
    let w = p.loaded_linewidth_nm();
    let split = (0.5 * p.beta_hz / wavelength_offset_to_frequency_hz(p.lambda0_nm, 1.0)).abs();
    let half = 10.0 * w + split;
    let n = (2.0 * half / (w / per_width)).ceil() as usize + 1;
    linspace(p.lambda0_nm - half, p.lambda0_nm + half, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transmission_is_bounded(p in resonator(), x in -20.0..20.0f64) {
        let t = p.amplitude(x * p.kappa_total_hz()).norm_sqr();
        prop_assert!((-1e-15..=1.0 + 1e-12).contains(&t));
    }

    #[test]
    fn doublet_is_symmetric(p in resonator(), x in 0.0..20.0f64) {
        let d = x * p.kappa_total_hz();
        prop_assert!((p.amplitude(d).norm_sqr() - p.amplitude(-d).norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn array_ignores_order(ps in prop::collection::vec(resonator(), 2..6), shift in 0usize..6) {
        let grid = linspace(845.0, 860.0, 3001);
        let joints = JointLossModel::new(0.88, 2).unwrap();
        let mut rotated = ps.clone();
        rotated.rotate_left(shift % ps.len());
        rotated.reverse();
        let a = array_transmission(&ps, &joints, &grid).unwrap();
        let b = array_transmission(&rotated, &joints, &grid).unwrap();
        for (x, y) in a.transmission().iter().zip(b.transmission()) {
            prop_assert!((x - y).abs() <= 1e-14);
        }
    }

    #[test]
    fn thickness_shift_round_trip(s in 0.0..10.0f64, lam in 700.0..1000.0f64, nf in 1.1..3.0f64) {
        let film = FilmModel::new(nf, 0.0026, 0.4).unwrap();
        let back = film_shift_to_thickness(thickness_to_shift(s, lam, &film).unwrap(), lam, &film).unwrap();
        prop_assert!((back.thickness_nm - s).abs() <= 8.0 * f64::EPSILON * s.max(1e-300));
    }

    #[test]
    fn adsorption_is_concave_and_increasing(a in 0.01..1.0f64, tau in 0.1..500.0f64, t in 0.0..1000.0f64) {
        let m = AdsorptionModel::new(a, tau).unwrap();
        let h = 1e-3 * tau;
        let (y0, y1, y2) = (
            adsorption_shift(t, &m).unwrap(),
            adsorption_shift(t + h, &m).unwrap(),
            adsorption_shift(t + 2.0 * h, &m).unwrap(),
        );
        prop_assert!(y1 > y0);
        prop_assert!(y2 - 2.0 * y1 + y0 <= 1e-15 * a);
        let slope = adsorption_shift(1e-7 * tau, &m).unwrap() / (1e-7 * tau);
        prop_assert!((slope / (a / tau) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn finesse_is_q_times_fsr_over_lambda(fsr in 1.0..50.0f64, lw in 0.01..10.0f64, lam in 700.0..1000.0f64) {
        let f = finesse(fsr, lw).unwrap();
        let q = q_from_linewidth(lam, lw).unwrap();
        prop_assert!((f / (q * fsr / lam) - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn noiseless_round_trip(
        lam in 848.0..856.0f64,
        ki in 1e6..1e9f64,
        e in 0.2..3.0f64,
        b in 0.5..5.0f64,
        bump in -0.1..0.1f64,
    ) {
        let truth = ResonatorCMTParams::new("r", lam, ki, ki * e, ki * b).unwrap();
        let trace = doublet_transmission(&truth, &fit_grid(&truth, 20.0)).unwrap();
        let seed = ResonatorCMTParams::new(
            "r",
            lam + bump * truth.loaded_linewidth_nm(),
            ki * (1.0 + bump),
            ki * e * (1.0 - bump),
            ki * b * (1.0 + 0.5 * bump),
        )
        .unwrap();
        let fit = fit_doublet(&trace, &seed).unwrap();
        prop_assert!(fit.converged);
        prop_assert!((fit.params.lambda0_nm - lam).abs() < 1e-3 * truth.loaded_linewidth_nm());
        prop_assert!((fit.params.kappa_i_hz / ki - 1.0).abs() < 1e-3);
        prop_assert!((fit.params.kappa_e_hz / (ki * e) - 1.0).abs() < 1e-3);
        prop_assert!((fit.params.beta_hz / (ki * b) - 1.0).abs() < 1e-3);
    }
}

/// Reported 1σ errors shrink as 1/√N when the sampling density grows at fixed noise.
#[test]
fn uncertainty_scales_inverse_sqrt_samples() {
    let truth = ResonatorCMTParams::new("u", 852.0, 1.07e8, 4.2e7, 3.2e8).unwrap();
    let sigma_ki = |per_width: f64| -> f64 {
        let grid = fit_grid(&truth, per_width);
        let runs: Vec<f64> = (0..6)
            .map(|seed| {
                let trace = doublet_transmission(&truth, &grid).unwrap().with_noise(0.005, 100 + seed).unwrap();
                fit_doublet(&trace, &truth).unwrap().sigma.kappa_i_hz
            })
            .collect();
        runs.iter().sum::<f64>() / runs.len() as f64
    };
    let ratio = sigma_ki(10.0) / sigma_ki(40.0);
    assert!((ratio / 2.0 - 1.0).abs() < 0.1, "σ ratio {ratio}");
}
