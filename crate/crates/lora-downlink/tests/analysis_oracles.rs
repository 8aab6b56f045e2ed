//! Oracles for the closed-form performance expressions.
//!
//! The scheduling probabilities have exact series definitions: both are
//! expectations over the cell-load distribution of the serving gateway.
//! The closed forms evaluate them through gamma/hypergeometric identities;
//! the oracles here evaluate the defining sums directly, term by term, and
//! the two routes must agree to tight relative error. End-to-end coverage
//! and rate-density values are anchored against a 25-digit independent
//! evaluation of the same model.

use lora_downlink::analysis::{
    active_prob, ase, coverage, p_sir, pcov_snr, selection_prob, InterferenceMode,
};
use lora_downlink::model::{rejection_matrix, sf_allocation, NetworkParams, Scheme, Sf};
use lora_downlink::specialfn::{ln_gamma, QuadratureSpec};
use proptest::prelude::*;

const LN_35: f64 = 1.252_762_968_495_367_7; // ln(3.5)
const SHAPE: f64 = 3.5;

fn assert_rel(actual: f64, expected: f64, tol: f64, what: &str) {
    let rel = (actual - expected).abs() / expected.abs().max(1e-300);
    assert!(rel <= tol, "{what}: got {actual}, want {expected} (rel {rel:.3e})");
}

/// Parameters whose derived load ratio equals `a` with `n` channels, built
/// by adjusting the device activity so the density invariants stay valid.
fn derived_for(a: f64, n: u32, rho: f64) -> lora_downlink::model::DerivedParams {
    let mu = 1.0 - (1.0 - rho).powi(n as i32);
    let base = NetworkParams::default();
    let params = NetworkParams {
        duty_cycle: rho,
        n_channels: n,
        active_fraction: a * mu * base.lambda_gw / base.lambda_ed,
        ..base
    };
    params.derive().expect("valid parameters")
}

#[derive(Clone, Copy)]
enum LoadLaw {
    /// Cell-load pmf of the typical gateway: a Poisson mixture over the
    /// 3.5-shaped cell-area distribution.
    Stationary,
    /// Load seen by a device inside the cell (size-biased: shape 4.5).
    SizeBiased,
}

/// ln Pr{load = k} for the gamma-mixture cell-load laws.
fn ln_load_pmf(k: u32, a: f64, law: LoadLaw) -> f64 {
    let shift = match law {
        LoadLaw::Stationary => SHAPE,
        LoadLaw::SizeBiased => SHAPE + 1.0,
    };
    let kf = f64::from(k);
    SHAPE * LN_35 + ln_gamma(kf + shift).unwrap() + kf * a.ln()
        - ln_gamma(SHAPE).unwrap()
        - ln_gamma(kf + 1.0).unwrap()
        - (kf + shift) * (a + SHAPE).ln()
}

/// Kahan-compensated accumulator; the oracle sums run to 1e5 terms.
#[derive(Default)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, v: f64) {
        let y = v - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

fn ln_binomial(n: u32, i: u32) -> f64 {
    ln_gamma(f64::from(n) + 1.0).unwrap()
        - ln_gamma(f64::from(i) + 1.0).unwrap()
        - ln_gamma(f64::from(n - i) + 1.0).unwrap()
}

/// Availability-count pmf V(n, i, rho) normalized by mu.
fn avail_weight(n: u32, i: u32, rho: f64) -> f64 {
    let mu = 1.0 - (1.0 - rho).powi(n as i32);
    let ln_v =
        ln_binomial(n, i) + f64::from(i) * rho.ln() + f64::from(n - i) * (1.0 - rho).ln();
    ln_v.exp() / mu
}

/// Channel-activity probability evaluated from its definition: with i free
/// channels and k competing devices, min(k, i) channels are used out of n.
fn active_direct_sum(a: f64, n: u32, rho: f64, k_cap: u32) -> f64 {
    let mut outer = Kahan::default();
    for i in 1..=n {
        let mut used = Kahan::default();
        for k in 0..=k_cap {
            let p = ln_load_pmf(k, a, LoadLaw::Stationary).exp();
            used.add(f64::from(k.min(i)) * p);
            if k > 4 * (i + 1) && p < 1e-18 * used.sum {
                break;
            }
        }
        outer.add(used.sum / f64::from(n) * avail_weight(n, i, rho));
    }
    outer.sum
}

/// Selection probability evaluated from its definition: a device competing
/// with k others for i channels is served with probability min(1, i/(k+1)),
/// averaged over the size-biased load it observes.
fn selection_direct_sum(a: f64, n: u32, rho: f64, k_cap: u32) -> f64 {
    let mut outer = Kahan::default();
    for i in 1..=n {
        let mut served = Kahan::default();
        for k in 0..=k_cap {
            let p = ln_load_pmf(k, a, LoadLaw::SizeBiased).exp();
            let share = if k < i { 1.0 } else { f64::from(i) / f64::from(k + 1) };
            served.add(share * p);
            if k > 4 * (i + 1) && p < 1e-18 * served.sum {
                break;
            }
        }
        outer.add(served.sum * avail_weight(n, i, rho));
    }
    outer.sum
}

#[test]
fn selection_closed_form_matches_direct_double_sum() {
    for rho in [0.01, 0.25] {
        for a in [0.1, 1.0, 5.0, 20.0, 100.0] {
            for n in [1u32, 2, 4, 8] {
                let d = derived_for(a, n, rho);
                let closed = selection_prob(&d).unwrap();
                let oracle = selection_direct_sum(d.a_ratio, n, rho, 100_000);
                assert_rel(closed, oracle, 1e-8, &format!("selection A={a} N={n} rho={rho}"));
            }
        }
    }
}

#[test]
fn activity_closed_form_matches_direct_enumeration() {
    for a in [0.1, 1.0, 5.0, 20.0, 100.0] {
        for n in [1u32, 2, 4, 8] {
            let d = derived_for(a, n, 0.01);
            let closed = active_prob(&d).unwrap();
            let oracle = active_direct_sum(d.a_ratio, n, 0.01, 10_000);
            assert_rel(closed, oracle, 1e-8, &format!("activity A={a} N={n}"));
        }
    }
}

#[test]
fn section_defaults_match_frozen_references() {
    let d = NetworkParams::default().derive().unwrap();
    assert_rel(d.a_ratio, 64.720_474_056_438_165, 1e-13, "load ratio");
    assert_rel(active_prob(&d).unwrap(), 0.129_436_518_293_314_79, 1e-11, "activity");
    assert_rel(selection_prob(&d).unwrap(), 0.015_999_452_436_697_83, 1e-10, "selection");

    let fair = sf_allocation(Scheme::FairCollision);
    let rej = rejection_matrix();
    let p_act = active_prob(&d).unwrap();
    let sir77 = p_sir(Sf::Sf7, Sf::Sf7, &fair, p_act, &rej, d.delta).unwrap();
    assert_rel(sir77, 0.882_418_003_852_665, 1e-9, "same-SF capture, SF7");

    let quad = QuadratureSpec::default();
    assert_rel(
        pcov_snr(Sf::Sf12, &d, &quad).unwrap(),
        0.998_786_197_099_212_82,
        1e-8,
        "SNR coverage SF12",
    );
    assert_rel(
        pcov_snr(Sf::Sf7, &d, &quad).unwrap(),
        0.970_864_186_743_627_15,
        1e-8,
        "SNR coverage SF7",
    );
}

#[test]
fn coverage_and_rate_density_match_independent_evaluation() {
    let d = NetworkParams::default().derive().unwrap();
    let rej = rejection_matrix();
    let quad = QuadratureSpec::default();
    // (scheme, mode, per-SF coverage, total rate density) from a 25-digit
    // evaluation of the same closed forms in independent software.
    let cases: [(Scheme, InterferenceMode, [f64; 6], f64); 4] = [
        (
            Scheme::FairCollision,
            InterferenceMode::CoOnly,
            [0.856_708_04, 0.915_356_91, 0.951_659_77, 0.973_024_96, 0.984_954_65, 0.991_707_02],
            5.105_651_546e-4,
        ),
        (
            Scheme::FairCollision,
            InterferenceMode::CoAndInter,
            [0.838_442_25, 0.901_108_78, 0.942_594_56, 0.969_163_30, 0.983_075_47, 0.990_785_93],
            5.011_201_94e-4,
        ),
        (
            Scheme::Random,
            InterferenceMode::CoOnly,
            [0.925_184_32, 0.938_707_14, 0.945_725_57, 0.949_306_82, 0.950_895_46, 0.951_792_58],
            3.032_458_239e-4,
        ),
        (
            Scheme::Random,
            InterferenceMode::CoAndInter,
            [0.897_204_83, 0.924_559_87, 0.936_651_89, 0.945_500_07, 0.949_052_25, 0.950_950_59],
            2.974_293_011e-4,
        ),
    ];
    for (scheme, mode, pcov_ref, ase_ref) in cases {
        let alloc = sf_allocation(scheme);
        let result = ase(&alloc, mode, &d, &rej, &quad).unwrap();
        for sf in Sf::ALL {
            assert_rel(
                result.pcov[sf.index()],
                pcov_ref[sf.index()],
                1e-6,
                &format!("{sf} coverage, {scheme:?} {mode:?}"),
            );
            let direct = coverage(sf, &alloc, mode, &d, &rej, &quad).unwrap();
            assert_rel(result.pcov[sf.index()], direct, 1e-12, "result consistency");
        }
        assert_rel(result.ase_total, ase_ref, 1e-6, &format!("total {scheme:?} {mode:?}"));
    }
}

proptest! {
    #[test]
    fn scheduling_probabilities_stay_in_unit_interval(
        a in 0.05f64..200.0,
        n in 1u32..=16,
        rho in 1e-4f64..0.1,
    ) {
        let d = derived_for(a, n, rho);
        let p_act = active_prob(&d).unwrap();
        let p_sel = selection_prob(&d).unwrap();
        prop_assert!((0.0..=1.0).contains(&p_act), "activity {p_act}");
        prop_assert!((0.0..=1.0).contains(&p_sel), "selection {p_sel}");
        // The per-channel duty budget caps activity at rho/mu.
        prop_assert!(p_act <= rho / d.mu + 1e-12, "activity above duty budget");
    }

    #[test]
    fn activity_rises_and_selection_falls_with_load(
        a in 0.05f64..100.0,
        factor in 1.05f64..4.0,
        n in 1u32..=8,
    ) {
        let lo = derived_for(a, n, 0.01);
        let hi = derived_for(a * factor, n, 0.01);
        prop_assert!(active_prob(&hi).unwrap() > active_prob(&lo).unwrap());
        prop_assert!(selection_prob(&hi).unwrap() < selection_prob(&lo).unwrap());
    }

    #[test]
    fn capture_probability_decreases_with_activity(
        p_lo in 0.0f64..0.5,
        bump in 0.01f64..0.5,
    ) {
        let d = NetworkParams::default().derive().unwrap();
        let rej = rejection_matrix();
        let alloc = sf_allocation(Scheme::FairCollision);
        let lo = p_sir(Sf::Sf7, Sf::Sf8, &alloc, p_lo, &rej, d.delta).unwrap();
        let hi = p_sir(Sf::Sf7, Sf::Sf8, &alloc, p_lo + bump, &rej, d.delta).unwrap();
        prop_assert!(hi < lo, "more channel activity must lower capture odds");
        prop_assert!(lo <= 1.0 && hi > 0.0);
    }
}
