//! Monte-Carlo engine for the downlink model: spatial sampling on a disk,
//! channel availability thinning, min-path-loss association, per-cell
//! scheduling, and coverage evaluation for the typical device at the origin.
//!
//! Each realization consumes one counter-addressed RNG stream, so estimates
//! are bit-identical for a fixed seed at any parallelism degree. Two
//! interferer models are provided: `FullFidelity` simulates every interfering
//! cell's schedule inside the sampling disk, `Thinned` replaces interferers
//! with the independently thinned point process the closed forms assume.

mod load;
mod realization;
mod thinned;
mod typical;

pub use load::{simulate_load, Schedule, ServedEntry, TYPICAL};
pub use realization::{sample_realization, Gateway, Realization};
pub use thinned::thinned_sir_pass;
pub use typical::{evaluate_typical, SimOutcome};

use rayon::prelude::*;

use crate::analysis::InterferenceMode;
use crate::error::Error;
use crate::model::{sf_allocation, rejection_matrix, DerivedParams, NetworkParams, Scheme, Sf};

/// How interfering gateways are generated when evaluating SIR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InterfererModel {
    /// Interference comes from the simulated schedules of every other
    /// available gateway inside the sampling disk.
    FullFidelity,
    /// Interferers form an independent Poisson field of density
    /// `channel_activity·p_k̃·λ_GW^(A)` per SF, extended beyond the disk by
    /// an exact tail term. `channel_activity` is the probability that a
    /// given channel of an available gateway carries a downlink.
    Thinned { channel_activity: f64 },
}

/// Simulation controls. `region_radius_m` trades truncation bias for cost
/// under the full-fidelity model; `interior_margin_m` keeps the channel
/// occupancy estimator away from the disk edge, where cells are clipped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub region_radius_m: f64,
    pub n_iterations: usize,
    pub rng_seed: u64,
    pub interference_enabled: bool,
    pub mode: InterferenceMode,
    pub scheme: Scheme,
    pub interferer_model: InterfererModel,
    pub interior_margin_m: f64,
}

/// Rayleigh scale of the typical device's serving distance, `1/√(πλ_GW^(A))`.
pub fn association_scale_m(derived: &DerivedParams) -> f64 {
    1.0 / (std::f64::consts::PI * derived.lambda_gw_a).sqrt()
}

impl SimConfig {
    /// Defaults: disk radius 5 association scales (the warning floor),
    /// interior margin 3 scales, full-fidelity interference, both kinds of
    /// interferers tested.
    pub fn recommended(derived: &DerivedParams, n_iterations: usize, rng_seed: u64) -> SimConfig {
        let scale = association_scale_m(derived);
        SimConfig {
            region_radius_m: 5.0 * scale,
            n_iterations,
            rng_seed,
            interference_enabled: true,
            mode: InterferenceMode::CoAndInter,
            scheme: Scheme::FairCollision,
            interferer_model: InterfererModel::FullFidelity,
            interior_margin_m: 3.0 * scale,
        }
    }

    /// Checks the configuration against hard errors, returning soft warnings.
    pub fn validate(&self, derived: &DerivedParams) -> Result<Vec<String>, Error> {
        if self.n_iterations == 0 {
            return Err(Error::Validation("n_iterations must be at least 1".into()));
        }
        if !self.region_radius_m.is_finite() || self.region_radius_m <= 0.0 {
            return Err(Error::Validation(format!(
                "region_radius_m must be positive and finite, got {}",
                self.region_radius_m
            )));
        }
        if !self.interior_margin_m.is_finite()
            || self.interior_margin_m < 0.0
            || self.interior_margin_m >= self.region_radius_m
        {
            return Err(Error::Validation(format!(
                "interior_margin_m must lie in [0, region_radius_m), got {}",
                self.interior_margin_m
            )));
        }
        if let InterfererModel::Thinned { channel_activity } = self.interferer_model {
            if !(0.0..=1.0).contains(&channel_activity) {
                return Err(Error::Validation(format!(
                    "thinned channel_activity must lie in [0, 1], got {channel_activity}"
                )));
            }
        }
        let mut warnings = Vec::new();
        let floor = 5.0 * association_scale_m(derived);
        if self.region_radius_m < floor {
            warnings.push(format!(
                "region_radius_m = {:.0} m is below the recommended minimum {:.0} m \
                 (5/sqrt(pi*lambda_gw_a)); boundary truncation bias may be visible",
                self.region_radius_m, floor
            ));
        }
        Ok(warnings)
    }
}

/// Sample mean with its standard error and sample count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: u64,
}

impl Estimate {
    fn empty() -> Estimate {
        Estimate {
            mean: f64::NAN,
            std_error: f64::NAN,
            n: 0,
        }
    }

    pub fn from_bernoulli(successes: u64, n: u64) -> Estimate {
        if n == 0 {
            return Estimate::empty();
        }
        let p = successes as f64 / n as f64;
        Estimate {
            mean: p,
            std_error: (p * (1.0 - p) / n as f64).sqrt(),
            n,
        }
    }

    /// Standardized distance to a reference value; infinite when the
    /// standard error is zero and the means differ.
    pub fn z_score(&self, reference: f64) -> f64 {
        let diff = self.mean - reference;
        if diff == 0.0 {
            0.0
        } else {
            (diff / self.std_error).abs()
        }
    }
}

/// Streaming mean/variance accumulator.
#[derive(Debug, Clone, Copy)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn new() -> Welford {
        Welford {
            n: 0,
            mean: 0.0,
            m2: 0.0,
        }
    }

    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn estimate(&self) -> Estimate {
        if self.n == 0 {
            return Estimate::empty();
        }
        let se = if self.n >= 2 {
            (self.m2 / (self.n as f64 * (self.n - 1) as f64)).sqrt()
        } else {
            f64::NAN
        };
        Estimate {
            mean: self.mean,
            std_error: se,
            n: self.n,
        }
    }
}

/// Aggregated simulation estimates.
///
/// `p_act` pools served channels over slots across every gateway inside the
/// interior window, the origin's own seat excluded, so it estimates the
/// stationary per-channel activity; `p_act_typical` reads the same fraction
/// off the serving gateway alone, whose size-biased cell makes it comparable
/// only where every free channel is in use. `pcov` conditions only on the
/// device being active with a serving gateway (the quantity the coverage
/// closed forms define); `pcov_scheduled` additionally conditions on the
/// scheduler having served the device, which skews toward lightly loaded
/// cells. `ase_per_sf` composes the selection and coverage estimates with
/// the per-SF rate and active-device density.
#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub p_act: Estimate,
    pub p_act_typical: Estimate,
    pub p_sel: Estimate,
    pub pcov: [Estimate; 6],
    pub pcov_scheduled: [Estimate; 6],
    pub ase_per_sf: [Estimate; 6],
    pub ase_total: Estimate,
    pub degenerate_rate: f64,
    pub n_realizations: usize,
}

/// One realization's contribution to the aggregate, kept compact because a
/// run may hold 10⁵ of these.
#[derive(Debug, Clone, Copy)]
struct RealizationSample {
    degenerate: bool,
    scheduled: bool,
    covered: bool,
    /// Granted SF index; 255 when degenerate.
    sf: u8,
    /// Bit 0: SNR pass; bit 1+k̃: SIR factor k̃ pass.
    factors: u8,
    /// Scheduler's SF index; 255 when not served.
    scheduled_sf: u8,
    covered_scheduled: bool,
    /// Served channels summed over interior available gateways, with the
    /// typical device's own seat removed at its serving gateway so every
    /// counted cell carries the stationary load.
    interior_served: u32,
    /// Total channels (gateways x N_Ch) behind `interior_served`.
    interior_slots: u32,
    /// Served-channel fraction of the serving gateway; NaN when degenerate.
    p_act_typical: f64,
}

const NO_SF: u8 = 255;

fn simulate_one(
    derived: &DerivedParams,
    cfg: &SimConfig,
    alloc: &crate::model::SfAllocation,
    rej: &crate::model::RejectionMatrix,
    stream: u64,
) -> RealizationSample {
    let (real, mut rng) = sample_realization(derived, cfg, stream);
    let Some(serving) = real.serving else {
        return RealizationSample {
            degenerate: true,
            scheduled: false,
            covered: false,
            sf: NO_SF,
            factors: 0,
            scheduled_sf: NO_SF,
            covered_scheduled: false,
            interior_served: 0,
            interior_slots: 0,
            p_act_typical: f64::NAN,
        };
    };
    let schedule = simulate_load(&real, derived, alloc, &mut rng);
    let outcome = evaluate_typical(&real, &schedule, derived, rej, alloc, cfg, &mut rng)
        .expect("non-degenerate realization");

    let n_ch = f64::from(derived.params.n_channels);
    // Channel-activity tally over a fixed spatial window. Gateways are
    // selected by position alone and the typical device's seat is excluded,
    // so the summed served/slot counts are free of the size bias that the
    // origin's serving cell carries.
    let mut cell_load = vec![0u32; real.gateways.len()];
    for &g in &real.ed_assoc {
        cell_load[g as usize] += 1;
    }
    let interior = cfg.region_radius_m - cfg.interior_margin_m;
    let mut interior_served = 0u32;
    let mut interior_slots = 0u32;
    for (g, gw) in real.gateways.iter().enumerate() {
        if gw.dist <= interior {
            interior_served += cell_load[g].min(u32::from(gw.n_available));
            interior_slots += derived.params.n_channels;
        }
    }
    let p_act_typical = schedule.served[serving as usize].len() as f64 / n_ch;

    let mut factors = u8::from(outcome.snr_pass);
    for (kt, &p) in outcome.sir_pass.iter().enumerate() {
        factors |= u8::from(p) << (kt + 1);
    }
    RealizationSample {
        degenerate: false,
        scheduled: outcome.scheduled,
        covered: outcome.covered,
        sf: outcome.granted_sf.index() as u8,
        factors,
        scheduled_sf: outcome.scheduled_sf.map_or(NO_SF, |s| s.index() as u8),
        covered_scheduled: outcome.covered_scheduled.unwrap_or(false),
        interior_served,
        interior_slots,
        p_act_typical,
    }
}

/// Per-SF tallies needed by both coverage estimators.
struct SfBucket {
    n: u64,
    covered: u64,
    factor: [u64; 7],
    pair: [[u64; 7]; 7],
}

impl SfBucket {
    fn new() -> SfBucket {
        SfBucket {
            n: 0,
            covered: 0,
            factor: [0; 7],
            pair: [[0; 7]; 7],
        }
    }

    fn push(&mut self, factors: u8, covered: bool) {
        self.n += 1;
        self.covered += u64::from(covered);
        for j in 0..7 {
            if factors & (1 << j) != 0 {
                self.factor[j] += 1;
                for l in (j + 1)..7 {
                    if factors & (1 << l) != 0 {
                        self.pair[j][l] += 1;
                    }
                }
            }
        }
    }

    /// Product of the selected factor means with a delta-method standard
    /// error using the empirical covariance between factor indicators.
    fn factored_estimate(&self, selected: &[usize]) -> Estimate {
        if self.n == 0 {
            return Estimate::empty();
        }
        let n = self.n as f64;
        let means: Vec<f64> = selected.iter().map(|&j| self.factor[j] as f64 / n).collect();
        let product: f64 = means.iter().product();
        if means.iter().any(|&m| m == 0.0) {
            return Estimate {
                mean: 0.0,
                std_error: 0.0,
                n: self.n,
            };
        }
        let mut rel_var = 0.0;
        for (a, &j) in selected.iter().enumerate() {
            for (b, &l) in selected.iter().enumerate() {
                let cov = if j == l {
                    means[a] * (1.0 - means[a])
                } else {
                    let (lo, hi) = if j < l { (j, l) } else { (l, j) };
                    self.pair[lo][hi] as f64 / n - means[a] * means[b]
                };
                rel_var += cov / (means[a] * means[b]);
            }
        }
        Estimate {
            mean: product,
            std_error: product * (rel_var.max(0.0) / n).sqrt(),
            n: self.n,
        }
    }
}

fn aggregate(
    samples: &[RealizationSample],
    derived: &DerivedParams,
    alloc: &crate::model::SfAllocation,
    cfg: &SimConfig,
) -> SimReport {
    let mut degenerate = 0u64;
    let mut active = 0u64;
    let mut selected = 0u64;
    let mut p_act_typical = Welford::new();
    let mut buckets: Vec<SfBucket> = (0..6).map(|_| SfBucket::new()).collect();
    let mut sched_n = [0u64; 6];
    let mut sched_cov = [0u64; 6];

    for s in samples {
        if s.degenerate {
            degenerate += 1;
            continue;
        }
        active += 1;
        selected += u64::from(s.scheduled);
        p_act_typical.push(s.p_act_typical);
        buckets[s.sf as usize].push(s.factors, s.covered);
        if s.scheduled_sf != NO_SF {
            sched_n[s.scheduled_sf as usize] += 1;
            sched_cov[s.scheduled_sf as usize] += u64::from(s.covered_scheduled);
        }
    }

    // Channel activity as a pooled ratio: summing served channels and slots
    // across realizations before dividing keeps sparse windows (few interior
    // gateways, larger and busier cells) from being overweighted.
    let served_sum: u64 = samples.iter().map(|s| u64::from(s.interior_served)).sum();
    let slot_sum: u64 = samples.iter().map(|s| u64::from(s.interior_slots)).sum();
    let p_act = if slot_sum == 0 {
        Estimate::empty()
    } else {
        let ratio = served_sum as f64 / slot_sum as f64;
        let dev2: f64 = samples
            .iter()
            .map(|s| {
                let d = f64::from(s.interior_served) - ratio * f64::from(s.interior_slots);
                d * d
            })
            .sum();
        let n = samples.len();
        let correction = if n > 1 { n as f64 / (n as f64 - 1.0) } else { 1.0 };
        Estimate {
            mean: ratio,
            std_error: (correction * dev2).sqrt() / slot_sum as f64,
            n: samples.iter().filter(|s| s.interior_slots > 0).count() as u64,
        }
    };

    let pcov: [Estimate; 6] = std::array::from_fn(|k| match cfg.interferer_model {
        InterfererModel::FullFidelity => {
            Estimate::from_bernoulli(buckets[k].covered, buckets[k].n)
        }
        InterfererModel::Thinned { .. } => {
            let mut selected_factors = vec![0usize];
            if cfg.interference_enabled {
                match cfg.mode {
                    InterferenceMode::CoOnly => selected_factors.push(1 + k),
                    InterferenceMode::CoAndInter => selected_factors.extend(1..7),
                }
            }
            buckets[k].factored_estimate(&selected_factors)
        }
    });
    let pcov_scheduled: [Estimate; 6] =
        std::array::from_fn(|k| Estimate::from_bernoulli(sched_cov[k], sched_n[k]));

    let p_sel = Estimate::from_bernoulli(selected, active);
    let lambda = derived.lambda_ed_a;
    let ase_per_sf: [Estimate; 6] = std::array::from_fn(|k| {
        let c = lambda * alloc.p(Sf::ALL[k]) * derived.rate_bps[k];
        if pcov[k].n == 0 || p_sel.n == 0 {
            return Estimate::empty();
        }
        let mean = c * p_sel.mean * pcov[k].mean;
        let var = (c * pcov[k].mean * p_sel.std_error).powi(2)
            + (c * p_sel.mean * pcov[k].std_error).powi(2);
        Estimate {
            mean,
            std_error: var.sqrt(),
            n: pcov[k].n,
        }
    });
    let ase_total = {
        let coeff: Vec<f64> = (0..6)
            .map(|k| lambda * alloc.p(Sf::ALL[k]) * derived.rate_bps[k])
            .collect();
        if p_sel.n == 0 || pcov.iter().any(|e| e.n == 0) {
            Estimate::empty()
        } else {
            let weighted_cov: f64 = (0..6).map(|k| coeff[k] * pcov[k].mean).sum();
            let mean = p_sel.mean * weighted_cov;
            let var = (weighted_cov * p_sel.std_error).powi(2)
                + (0..6)
                    .map(|k| (coeff[k] * p_sel.mean * pcov[k].std_error).powi(2))
                    .sum::<f64>();
            Estimate {
                mean,
                std_error: var.sqrt(),
                n: active,
            }
        }
    };

    SimReport {
        p_act,
        p_act_typical: p_act_typical.estimate(),
        p_sel,
        pcov,
        pcov_scheduled,
        ase_per_sf,
        ase_total,
        degenerate_rate: degenerate as f64 / samples.len() as f64,
        n_realizations: samples.len(),
    }
}

/// Runs `cfg.n_iterations` independent realizations in parallel and
/// aggregates the estimators. Deterministic for a fixed seed at any thread
/// count; degenerate realizations (no available gateway in the region) are
/// excluded from conditional estimates and surfaced via `degenerate_rate`.
pub fn run(params: &NetworkParams, cfg: &SimConfig) -> Result<SimReport, Error> {
    let derived = params.derive()?;
    cfg.validate(&derived)?;
    let alloc = sf_allocation(cfg.scheme);
    let rej = rejection_matrix();
    let samples: Vec<RealizationSample> = (0..cfg.n_iterations as u64)
        .into_par_iter()
        .map(|stream| simulate_one(&derived, cfg, &alloc, &rej, stream))
        .collect();
    Ok(aggregate(&samples, &derived, &alloc, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::Exp1;

    fn base_params() -> NetworkParams {
        NetworkParams::default()
    }

    fn quick_cfg(derived: &DerivedParams, n: usize, seed: u64) -> SimConfig {
        SimConfig {
            interferer_model: InterfererModel::Thinned {
                channel_activity: 0.13,
            },
            ..SimConfig::recommended(derived, n, seed)
        }
    }

    #[test]
    fn config_validation_catches_bad_inputs() {
        let d = base_params().derive().unwrap();
        let good = SimConfig::recommended(&d, 10, 1);
        assert!(good.validate(&d).unwrap().is_empty());

        let mut c = good;
        c.n_iterations = 0;
        assert!(c.validate(&d).is_err());

        c = good;
        c.region_radius_m = -1.0;
        assert!(c.validate(&d).is_err());

        c = good;
        c.interior_margin_m = c.region_radius_m;
        assert!(c.validate(&d).is_err());

        c = good;
        c.interferer_model = InterfererModel::Thinned {
            channel_activity: 1.5,
        };
        assert!(c.validate(&d).is_err());

        c = good;
        c.region_radius_m *= 0.5;
        c.interior_margin_m = 0.0;
        let warnings = c.validate(&d).unwrap();
        assert_eq!(warnings.len(), 1, "small region must warn: {warnings:?}");
    }

    #[test]
    fn estimate_helpers_behave() {
        let e = Estimate::from_bernoulli(25, 100);
        assert!((e.mean - 0.25).abs() < 1e-15);
        assert!((e.std_error - (0.25 * 0.75 / 100.0_f64).sqrt()).abs() < 1e-15);
        assert_eq!(e.z_score(0.25), 0.0);
        assert!(e.z_score(0.30) > 1.0);

        let none = Estimate::from_bernoulli(0, 0);
        assert!(none.mean.is_nan());

        let mut w = Welford::new();
        for x in [1.0, 2.0, 3.0, 4.0] {
            w.push(x);
        }
        let e = w.estimate();
        assert!((e.mean - 2.5).abs() < 1e-15);
        let se = (5.0f64 / 3.0).sqrt() / 2.0;
        assert!((e.std_error - se).abs() < 1e-15);
    }

    #[test]
    fn fixed_seed_reproduces_report() {
        let p = base_params();
        let d = p.derive().unwrap();
        let cfg = quick_cfg(&d, 300, 77);
        let a = run(&p, &cfg).unwrap();
        let b = run(&p, &cfg).unwrap();
        assert_eq!(a.p_act.mean.to_bits(), b.p_act.mean.to_bits());
        assert_eq!(a.p_sel.mean.to_bits(), b.p_sel.mean.to_bits());
        for k in 0..6 {
            assert_eq!(a.pcov[k].mean.to_bits(), b.pcov[k].mean.to_bits());
            assert_eq!(a.ase_per_sf[k].mean.to_bits(), b.ase_per_sf[k].mean.to_bits());
        }
        assert_eq!(a.ase_total.mean.to_bits(), b.ase_total.mean.to_bits());
        assert_eq!(a.degenerate_rate, b.degenerate_rate);

        let single = SimConfig { n_iterations: 1, ..cfg };
        let r1 = run(&p, &single).unwrap();
        let r2 = run(&p, &single).unwrap();
        assert_eq!(r1.p_act_typical.mean.to_bits(), r2.p_act_typical.mean.to_bits());
    }

    #[test]
    fn tiny_region_is_fully_degenerate() {
        let p = base_params();
        let d = p.derive().unwrap();
        let cfg = SimConfig {
            region_radius_m: 1.0,
            interior_margin_m: 0.0,
            ..quick_cfg(&d, 50, 5)
        };
        let r = run(&p, &cfg).unwrap();
        assert_eq!(r.degenerate_rate, 1.0);
        assert!(r.p_sel.mean.is_nan());
        assert!(r.pcov[0].mean.is_nan());
        assert!(r.ase_total.mean.is_nan());
    }

    #[test]
    fn ase_composes_selection_and_coverage() {
        let p = base_params();
        let d = p.derive().unwrap();
        let cfg = quick_cfg(&d, 400, 9);
        let r = run(&p, &cfg).unwrap();
        let alloc = sf_allocation(cfg.scheme);
        let mut total = 0.0;
        for k in 0..6 {
            let c = d.lambda_ed_a * alloc.p(Sf::ALL[k]) * d.rate_bps[k];
            let expect = c * r.p_sel.mean * r.pcov[k].mean;
            assert!((r.ase_per_sf[k].mean - expect).abs() <= 1e-12 * expect.abs().max(1.0));
            total += expect;
        }
        assert!((r.ase_total.mean - total).abs() <= 1e-12 * total.abs().max(1.0));
    }

    #[test]
    fn standard_error_shrinks_like_inverse_sqrt_n() {
        let p = base_params();
        let d = p.derive().unwrap();
        let small = run(&p, &quick_cfg(&d, 500, 31)).unwrap();
        let big = run(&p, &quick_cfg(&d, 2000, 31)).unwrap();
        let ratio = small.p_act.std_error / big.p_act.std_error;
        assert!(
            (1.6..=2.4).contains(&ratio),
            "expected ~2x standard-error drop, got {ratio}"
        );
        let ratio_sel = small.p_sel.std_error / big.p_sel.std_error;
        assert!((1.6..=2.4).contains(&ratio_sel), "got {ratio_sel}");
    }

    #[test]
    fn gateway_counts_pass_poisson_dispersion_check() {
        let d = base_params().derive().unwrap();
        let cfg = SimConfig::recommended(&d, 1, 0);
        let mean_count = d.params.lambda_gw
            * std::f64::consts::PI
            * cfg.region_radius_m
            * cfg.region_radius_m;
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut w = Welford::new();
        for _ in 0..100_000 {
            w.push(realization::poisson_count(&mut rng, mean_count) as f64);
        }
        let e = w.estimate();
        let variance = e.std_error * e.std_error * e.n as f64;
        let ratio = variance / e.mean;
        assert!(
            (0.97..=1.03).contains(&ratio),
            "Poisson variance/mean ratio {ratio} out of band"
        );
    }

    #[test]
    fn fading_draws_have_unit_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(4096);
        let mut sum = 0.0;
        let n = 1_000_000;
        for _ in 0..n {
            let h: f64 = rng.sample(Exp1);
            sum += h;
        }
        let mean = sum / f64::from(n);
        assert!((0.99..=1.01).contains(&mean), "fading mean {mean}");
    }
}
