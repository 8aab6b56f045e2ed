//! Closed-form network performance expressions.
//!
//! Three quantities drive everything: the probability a channel of an
//! available gateway is actively serving, the probability an active end
//! device is selected by its gateway, and the coverage probability of a
//! served device. Coverage combines an SNR condition toward the serving
//! gateway with SIR conditions against co- and inter-SF interference, all
//! averaged over the Poisson spatial ensemble with Rayleigh fading.

use crate::error::Error;
use crate::model::{DerivedParams, RejectionMatrix, Sf, SfAllocation};
use crate::specialfn::{self, QuadratureSpec};

/// Which interference the SIR conditions account for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InterferenceMode {
    /// Only interferers using the same SF as the desired link.
    CoOnly,
    /// Co-SF and inter-SF interferers.
    CoAndInter,
}

impl InterferenceMode {
    pub const ALL: [InterferenceMode; 2] = [InterferenceMode::CoOnly, InterferenceMode::CoAndInter];

    pub fn label(self) -> &'static str {
        match self {
            InterferenceMode::CoOnly => "co",
            InterferenceMode::CoAndInter => "bo",
        }
    }
}

/// Full analytical evaluation at one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerfResult {
    pub p_act: f64,
    pub p_sel: f64,
    /// SNR-only coverage per SF.
    pub pcov_snr: [f64; 6],
    /// Combined SNR x SIR coverage per SF.
    pub pcov: [f64; 6],
    /// Area spectral efficiency per SF, bit/s/m^2.
    pub ase_per_sf: [f64; 6],
    /// Sum of per-SF ASE, bit/s/m^2.
    pub ase_total: f64,
}

/// Shape parameter of the gamma approximation to the normalized Voronoi cell
/// area; also the rate, so the approximation keeps unit mean.
pub const CELL_AREA_SHAPE: f64 = 3.5;

/// ln of the binomial pmf C(n,i) p^i (1-p)^(n-i).
fn ln_binomial_pmf(n: u32, i: u32, p: f64) -> Result<f64, Error> {
    let (nf, fi) = (f64::from(n), f64::from(i));
    let ln_choose = specialfn::ln_gamma(nf + 1.0)?
        - specialfn::ln_gamma(fi + 1.0)?
        - specialfn::ln_gamma(nf - fi + 1.0)?;
    Ok(ln_choose + fi * p.ln() + (nf - fi) * (1.0 - p).ln())
}

/// Probability that the cell of a uniformly chosen gateway holds `k` active
/// end devices, with `a` devices per gateway on average. Mixed Poisson under
/// the gamma cell-area approximation; computed in log space so large `k` and
/// `a` cannot overflow.
fn gw_cell_load_pmf(k: usize, a: f64) -> Result<f64, Error> {
    let s = CELL_AREA_SHAPE;
    let kf = k as f64;
    let ln = s * s.ln() + specialfn::ln_gamma(kf + s)? + kf * a.ln()
        - specialfn::ln_gamma(s)?
        - specialfn::ln_gamma(kf + 1.0)?
        - (kf + s) * (a + s).ln();
    Ok(ln.exp())
}

/// Probability that a channel of the typical available gateway is busy
/// serving an end device.
pub fn active_prob(derived: &DerivedParams) -> Result<f64, Error> {
    let n = derived.params.n_channels;
    let rho = derived.params.duty_cycle;
    let a = derived.a_ratio;
    let nf = f64::from(n);
    let t1: Vec<f64> =
        (0..n as usize).map(|k| gw_cell_load_pmf(k, a)).collect::<Result<_, _>>()?;
    let mut total = 0.0;
    for i in 1..=n {
        let fi = f64::from(i);
        let mut undersupply = 0.0;
        for (k, &t) in t1.iter().take(i as usize).enumerate() {
            undersupply += (1.0 - k as f64 / fi) * t;
        }
        let bracket = 1.0 - ((nf - fi) / nf + fi / nf * undersupply);
        debug_assert!(bracket > -1e-9, "channel-use term {bracket} at i={i}");
        total += bracket.clamp(0.0, 1.0) * ln_binomial_pmf(n, i, rho)?.exp();
    }
    Ok((total / derived.mu).clamp(0.0, 1.0))
}

/// Probability that the typical active end device is among those its serving
/// gateway schedules.
pub fn selection_prob(derived: &DerivedParams) -> Result<f64, Error> {
    let n = derived.params.n_channels;
    let rho = derived.params.duty_cycle;
    let a = derived.a_ratio;
    let s = CELL_AREA_SHAPE;
    let z = a / (a + s);
    let ln_prefactor = s * s.ln() - specialfn::ln_gamma(s)?;
    let mut total = 0.0;
    for i in 1..=n {
        let fi = f64::from(i);
        // b1 pairs a gamma ratio with a^i / (a+s)^(i+s+1); log space keeps the
        // large-i factors finite.
        let ln_b1 = ln_prefactor + specialfn::ln_gamma(fi + s + 1.0)? + fi * a.ln()
            - (fi + s + 1.0) * (a + s).ln();
        let f2 = specialfn::hyp2f1(1.0, fi + s + 1.0, fi + 1.0, z)?;
        let f3 = specialfn::hyp2f1(1.0, fi + s + 1.0, fi + 2.0, z)?;
        // b2 - b3 = [f2 - i/(i+1) f3] / Gamma(i+1).
        let miss = (ln_b1 - specialfn::ln_gamma(fi + 1.0)?).exp() * (f2 - fi / (fi + 1.0) * f3);
        let served = 1.0 - miss;
        debug_assert!(served > -1e-9, "selection term {served} at i={i}");
        total += served.clamp(0.0, 1.0) * ln_binomial_pmf(n, i, rho)?.exp();
    }
    Ok((total / derived.mu).clamp(0.0, 1.0))
}

/// Probability that the desired signal survives interference from gateways
/// serving SF `k_tilde` on the same channel.
pub fn p_sir(
    k: Sf,
    k_tilde: Sf,
    alloc: &SfAllocation,
    p_act: f64,
    rej: &RejectionMatrix,
    delta: f64,
) -> Result<f64, Error> {
    if !(0.0..=1.0).contains(&p_act) {
        return Err(Error::domain("p_sir", format!("p_act must lie in [0,1], got {p_act}")));
    }
    let interferer_fraction = alloc.p(k_tilde) * p_act;
    if interferer_fraction == 0.0 {
        return Ok(1.0);
    }
    let th = specialfn::theta(rej.linear(k, k_tilde), delta)?;
    Ok(1.0 / (1.0 + interferer_fraction * th))
}

/// SIR coverage of an SF-`k` device under the chosen interference accounting.
pub fn pcov_sir(
    k: Sf,
    alloc: &SfAllocation,
    mode: InterferenceMode,
    p_act: f64,
    rej: &RejectionMatrix,
    delta: f64,
) -> Result<f64, Error> {
    match mode {
        InterferenceMode::CoOnly => p_sir(k, k, alloc, p_act, rej, delta),
        InterferenceMode::CoAndInter => {
            let mut prod = 1.0;
            for kt in Sf::ALL {
                prod *= p_sir(k, kt, alloc, p_act, rej, delta)?;
            }
            Ok(prod)
        }
    }
}

/// Probability that the typical device's SNR toward its serving gateway meets
/// the SF-`k` sensitivity threshold.
///
/// The distance average reduces to an integral of exp(-v - b v^(1/delta));
/// the substitution v = pi lambda (r^2-like term) removes the endpoint
/// singularity and normalizes the exponential decay to unit rate.
pub fn pcov_snr(k: Sf, derived: &DerivedParams, quad: &QuadratureSpec) -> Result<f64, Error> {
    let inv_delta = 1.0 / derived.delta;
    let b = derived.gamma_d_lin[k.index()] * derived.sigma2_mw / derived.p_tx_ch_mw
        * derived.k0
        * (std::f64::consts::PI * derived.lambda_gw_a).powf(-inv_delta);
    let value = specialfn::integrate(|v| (-v - b * v.powf(inv_delta)).exp(), quad)?;
    Ok(value.clamp(0.0, 1.0))
}

/// Combined coverage probability: SNR and SIR conditions both satisfied,
/// treated as independent.
pub fn coverage(
    k: Sf,
    alloc: &SfAllocation,
    mode: InterferenceMode,
    derived: &DerivedParams,
    rej: &RejectionMatrix,
    quad: &QuadratureSpec,
) -> Result<f64, Error> {
    let p_act = active_prob(derived)?;
    let snr = pcov_snr(k, derived, quad)?;
    let sir = pcov_sir(k, alloc, mode, p_act, rej, derived.delta)?;
    Ok(snr * sir)
}

/// Area spectral efficiency and every intermediate quantity at one operating
/// point.
pub fn ase(
    alloc: &SfAllocation,
    mode: InterferenceMode,
    derived: &DerivedParams,
    rej: &RejectionMatrix,
    quad: &QuadratureSpec,
) -> Result<PerfResult, Error> {
    let p_act = active_prob(derived)?;
    let p_sel = selection_prob(derived)?;
    let mut pcov_snr_all = [0.0; 6];
    let mut pcov_all = [0.0; 6];
    let mut ase_per_sf = [0.0; 6];
    let mut ase_total = 0.0;
    for sf in Sf::ALL {
        let i = sf.index();
        pcov_snr_all[i] = pcov_snr(sf, derived, quad)?;
        let sir = pcov_sir(sf, alloc, mode, p_act, rej, derived.delta)?;
        pcov_all[i] = pcov_snr_all[i] * sir;
        ase_per_sf[i] =
            alloc.p(sf) * derived.lambda_ed_a * derived.rate_bps[i] * p_sel * pcov_all[i];
        ase_total += ase_per_sf[i];
    }
    Ok(PerfResult { p_act, p_sel, pcov_snr: pcov_snr_all, pcov: pcov_all, ase_per_sf, ase_total })
}
