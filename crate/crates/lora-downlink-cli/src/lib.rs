//! Batch front-end for the LoRa downlink performance models.
//!
//! A single TOML config describes a network operating point, a sweep over one
//! variable, and an optional Monte-Carlo setup. The `sweep` subcommand
//! evaluates the closed forms (and, when enabled, the simulator) at every
//! sweep point and writes one CSV row per (value, scheme, mode, SF); the
//! `validate` subcommand cross-checks every closed form against the simulator
//! at the configured operating point and reports a pass/fail table.
//!
//! Output is deterministic: identical config and seed give byte-identical CSV
//! regardless of thread count, and the CSV's comment header echoes the
//! effective config so a run can be reproduced from its output alone.

use std::fmt::Write as _;
use std::path::Path;

use lora_downlink::analysis::{self, InterferenceMode, PerfResult};
use lora_downlink::model::{rejection_matrix, sf_allocation, NetworkParams, Scheme, Sf};
use lora_downlink::simulator::{self, InterfererModel, SimConfig, SimReport};
use lora_downlink::specialfn::QuadratureSpec;
use lora_downlink::Error as LibError;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Spacing between the per-point RNG seeds of one sweep, so points remain
/// decorrelated while the whole file stays a pure function of (config, seed).
const SEED_STRIDE: u64 = 0x9e37_79b9_7f4a_7c15;

/// Verdict threshold of the validation table, in standard errors.
pub const Z_LIMIT: f64 = 3.0;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Numeric(#[from] LibError),
    #[error("validation failed: {failed} of {total} rows outside {Z_LIMIT} standard errors")]
    ValidationFailed { failed: usize, total: usize },
}

impl CliError {
    /// Process exit code: 1 usage/config, 2 validation failure, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numeric(e) => match e {
                LibError::Domain { .. } | LibError::Convergence { .. } => 3,
                LibError::Validation(_) | LibError::Simulation(_) => 1,
            },
            CliError::ValidationFailed { .. } => 2,
        }
    }
}

/// Top-level config. Every field has a default, so an empty file (or no
/// `--config` at all) evaluates the reference operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub network: NetworkSection,
    pub sweep: SweepSection,
    pub simulation: SimSection,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            network: NetworkSection::default(),
            sweep: SweepSection::default(),
            simulation: SimSection::default(),
        }
    }
}

/// Network operating point. Densities are per square kilometre here and
/// converted to per square metre at the model boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    pub gateway_density_per_km2: f64,
    pub device_density_per_km2: f64,
    pub duty_cycle: f64,
    pub active_fraction: f64,
    pub channels: u32,
    pub total_power_dbm: f64,
    pub path_loss_exp: f64,
    pub noise_figure_db: f64,
    pub bandwidth_hz: f64,
    pub coding_rate: u32,
    pub carrier_hz: f64,
}

impl Default for NetworkSection {
    fn default() -> Self {
        NetworkSection {
            gateway_density_per_km2: 2.0,
            device_density_per_km2: 1000.0,
            duty_cycle: 0.01,
            active_fraction: 0.01,
            channels: 8,
            total_power_dbm: 25.0,
            path_loss_exp: 2.9,
            noise_figure_db: 6.0,
            bandwidth_hz: 125_000.0,
            coding_rate: 1,
            carrier_hz: 868_000_000.0,
        }
    }
}

impl NetworkSection {
    pub fn to_params(&self) -> NetworkParams {
        NetworkParams {
            lambda_gw: self.gateway_density_per_km2 * 1e-6,
            lambda_ed: self.device_density_per_km2 * 1e-6,
            duty_cycle: self.duty_cycle,
            active_fraction: self.active_fraction,
            n_channels: self.channels,
            ptot_dbm: self.total_power_dbm,
            path_loss_exp: self.path_loss_exp,
            noise_figure_db: self.noise_figure_db,
            bandwidth_hz: self.bandwidth_hz,
            coding_rate: self.coding_rate,
            carrier_hz: self.carrier_hz,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub schemes: Vec<SchemeName>,
    pub modes: Vec<ModeName>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            variable: SweepVariable::PtotDbm,
            values: vec![10.0, 15.0, 20.0, 25.0, 30.0],
            schemes: vec![SchemeName::Fair, SchemeName::Random],
            modes: vec![ModeName::Co, ModeName::Bo],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Total gateway transmit power, dBm.
    PtotDbm,
    /// Active-device to gateway density ratio, theta*lambda_ed/lambda_gw.
    DensityRatio,
    /// Per-channel duty cycle rho.
    DutyCycle,
    /// Fraction theta of devices awaiting a downlink.
    ActiveTheta,
}

impl SweepVariable {
    pub fn label(self) -> &'static str {
        match self {
            SweepVariable::PtotDbm => "ptot_dbm",
            SweepVariable::DensityRatio => "density_ratio",
            SweepVariable::DutyCycle => "duty_cycle",
            SweepVariable::ActiveTheta => "active_theta",
        }
    }

    /// The swept point: `base` with this variable set to `value`.
    pub fn apply(self, base: &NetworkParams, value: f64) -> NetworkParams {
        let mut p = base.clone();
        match self {
            SweepVariable::PtotDbm => p.ptot_dbm = value,
            SweepVariable::DensityRatio => {
                p.lambda_ed = value * p.lambda_gw / p.active_fraction;
            }
            SweepVariable::DutyCycle => p.duty_cycle = value,
            SweepVariable::ActiveTheta => p.active_fraction = value,
        }
        p
    }

    fn check_value(self, v: f64) -> Result<(), String> {
        if !v.is_finite() {
            return Err(format!("sweep value {v} is not finite"));
        }
        match self {
            SweepVariable::PtotDbm => Ok(()),
            SweepVariable::DensityRatio if v > 0.0 => Ok(()),
            SweepVariable::DensityRatio => Err(format!("density ratio must be positive, got {v}")),
            SweepVariable::DutyCycle | SweepVariable::ActiveTheta if v > 0.0 && v <= 1.0 => Ok(()),
            SweepVariable::DutyCycle => Err(format!("duty cycle must lie in (0, 1], got {v}")),
            SweepVariable::ActiveTheta => {
                Err(format!("active fraction must lie in (0, 1], got {v}"))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    Fair,
    Random,
}

impl SchemeName {
    pub fn to_scheme(self) -> Scheme {
        match self {
            SchemeName::Fair => Scheme::FairCollision,
            SchemeName::Random => Scheme::Random,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    /// Same-SF interference only.
    Co,
    /// Interference from every SF.
    Bo,
}

impl ModeName {
    pub fn to_mode(self) -> InterferenceMode {
        match self {
            ModeName::Co => InterferenceMode::CoOnly,
            ModeName::Bo => InterferenceMode::CoAndInter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub enabled: bool,
    pub iterations: usize,
    pub seed: u64,
    /// Disk radius in units of the mean association distance.
    pub region_scale: f64,
    /// Interior margin (same units) for the channel-activity window.
    pub margin_scale: f64,
    pub interferer_model: InterfererKind,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            enabled: false,
            iterations: 20_000,
            seed: 42,
            region_scale: 5.0,
            margin_scale: 3.0,
            interferer_model: InterfererKind::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterfererKind {
    /// Every materialized gateway interferes with its scheduled load.
    Full,
    /// Independently thinned interferer field matching the analytical model.
    Thinned,
}

impl Config {
    pub fn from_toml_str(s: &str) -> Result<Config, CliError> {
        toml::from_str(s).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Reads `path`, or returns the built-in defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Config, CliError> {
        match path {
            None => Ok(Config::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    CliError::Config(format!("cannot read {}: {e}", p.display()))
                })?;
                Config::from_toml_str(&text)
            }
        }
    }

    /// Checks everything both subcommands rely on: the operating point, the
    /// scheme/mode sets, and the simulation block.
    pub fn validate_common(&self) -> Result<(), CliError> {
        self.network
            .to_params()
            .derive()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if self.sweep.schemes.is_empty() {
            return Err(CliError::Config("schemes must not be empty".into()));
        }
        if self.sweep.modes.is_empty() {
            return Err(CliError::Config("modes must not be empty".into()));
        }
        for (i, s) in self.sweep.schemes.iter().enumerate() {
            if self.sweep.schemes[..i].contains(s) {
                return Err(CliError::Config(format!("duplicate scheme {s:?}")));
            }
        }
        for (i, m) in self.sweep.modes.iter().enumerate() {
            if self.sweep.modes[..i].contains(m) {
                return Err(CliError::Config(format!("duplicate mode {m:?}")));
            }
        }
        let sim = &self.simulation;
        if !sim.region_scale.is_finite() || sim.region_scale <= 0.0 {
            return Err(CliError::Config(format!(
                "region_scale must be positive, got {}",
                sim.region_scale
            )));
        }
        if !sim.margin_scale.is_finite()
            || sim.margin_scale < 0.0
            || sim.margin_scale >= sim.region_scale
        {
            return Err(CliError::Config(format!(
                "margin_scale must lie in [0, region_scale), got {}",
                sim.margin_scale
            )));
        }
        if sim.enabled && sim.iterations == 0 {
            return Err(CliError::Config("iterations must be at least 1".into()));
        }
        Ok(())
    }

    /// Checks the sweep axis: non-empty, strictly increasing, in-domain.
    pub fn validate_sweep(&self) -> Result<(), CliError> {
        let values = &self.sweep.values;
        if values.is_empty() {
            return Err(CliError::Config("sweep values must not be empty".into()));
        }
        for v in values {
            self.sweep.variable.check_value(*v).map_err(CliError::Config)?;
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Config(
                "sweep values must be strictly increasing".into(),
            ));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.validate_common()?;
        self.validate_sweep()
    }
}

/// One CSV row: analytical quantities for one (value, scheme, mode, SF), plus
/// simulation estimates when enabled. Missing values (failed point, or
/// simulation off) serialize as empty fields.
#[derive(Debug, Clone, Serialize)]
struct Row {
    variable: &'static str,
    value: f64,
    scheme: &'static str,
    mode: &'static str,
    sf: u32,
    p_act: Option<f64>,
    p_sel: Option<f64>,
    pcov_snr: Option<f64>,
    pcov: Option<f64>,
    ase_sf: Option<f64>,
    ase_total: Option<f64>,
    sim_p_act: Option<f64>,
    sim_p_act_se: Option<f64>,
    sim_p_sel: Option<f64>,
    sim_p_sel_se: Option<f64>,
    sim_pcov: Option<f64>,
    sim_pcov_se: Option<f64>,
    sim_ase_sf: Option<f64>,
    sim_ase_sf_se: Option<f64>,
    sim_ase_total: Option<f64>,
    sim_ase_total_se: Option<f64>,
    status: String,
}

fn opt(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepSummary {
    pub rows: usize,
    pub failed_rows: usize,
}

/// Evaluates the sweep and renders the whole CSV file as bytes.
///
/// Points run in parallel; the row order is the deterministic nesting
/// (value, scheme, mode, SF) regardless of thread count.
pub fn run_sweep(cfg: &Config) -> Result<(Vec<u8>, SweepSummary), CliError> {
    cfg.validate()?;
    let base = cfg.network.to_params();
    let mut points = Vec::new();
    for &value in &cfg.sweep.values {
        for &scheme in &cfg.sweep.schemes {
            for &mode in &cfg.sweep.modes {
                points.push((points.len(), value, scheme, mode));
            }
        }
    }
    let rows: Vec<Vec<Row>> = points
        .par_iter()
        .map(|&(idx, value, scheme, mode)| evaluate_point(cfg, &base, idx, value, scheme, mode))
        .collect();

    let mut out = Vec::new();
    write_metadata(&mut out, cfg);
    let mut w = csv::Writer::from_writer(out);
    let mut summary = SweepSummary { rows: 0, failed_rows: 0 };
    for point_rows in &rows {
        for row in point_rows {
            summary.rows += 1;
            if row.status != "ok" {
                summary.failed_rows += 1;
            }
            w.serialize(row).map_err(|e| CliError::Config(format!("csv: {e}")))?;
        }
    }
    w.flush()?;
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Config(format!("csv: {e}")))?;
    Ok((bytes, summary))
}

/// Runs the sweep and writes the CSV to `out`. The file is only created
/// after the config passes validation and the evaluation finished.
pub fn write_sweep(cfg: &Config, out: &Path) -> Result<SweepSummary, CliError> {
    let (bytes, summary) = run_sweep(cfg)?;
    std::fs::write(out, &bytes)?;
    Ok(summary)
}

/// The `#`-prefixed comment header: code version, then the effective config
/// as TOML. Stripping the leading `# ` of the block reproduces the file that
/// reruns this sweep.
fn write_metadata(out: &mut Vec<u8>, cfg: &Config) {
    let mut header = String::new();
    let _ = writeln!(header, "# {} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"));
    let _ = writeln!(header, "# effective config (strip the '# ' prefixes to rerun):");
    for line in cfg.to_toml_string().lines() {
        let _ = writeln!(header, "# {line}");
    }
    out.extend_from_slice(header.as_bytes());
}

fn evaluate_point(
    cfg: &Config,
    base: &NetworkParams,
    point_idx: usize,
    value: f64,
    scheme_name: SchemeName,
    mode_name: ModeName,
) -> Vec<Row> {
    let variable = cfg.sweep.variable.label();
    let scheme = scheme_name.to_scheme();
    let mode = mode_name.to_mode();
    let skeleton = |status: String| -> Vec<Row> {
        (0..6)
            .map(|k| Row {
                variable,
                value,
                scheme: scheme.label(),
                mode: mode.label(),
                sf: 7 + k,
                p_act: None,
                p_sel: None,
                pcov_snr: None,
                pcov: None,
                ase_sf: None,
                ase_total: None,
                sim_p_act: None,
                sim_p_act_se: None,
                sim_p_sel: None,
                sim_p_sel_se: None,
                sim_pcov: None,
                sim_pcov_se: None,
                sim_ase_sf: None,
                sim_ase_sf_se: None,
                sim_ase_total: None,
                sim_ase_total_se: None,
                status: status.clone(),
            })
            .collect()
    };

    let params = cfg.sweep.variable.apply(base, value);
    let derived = match params.derive() {
        Ok(d) => d,
        Err(e) => return skeleton(format!("error: {e}")),
    };
    let alloc = sf_allocation(scheme);
    let rej = rejection_matrix();
    let quad = QuadratureSpec::default();
    let perf = match analysis::ase(&alloc, mode, &derived, &rej, &quad) {
        Ok(p) => p,
        Err(e) => return skeleton(format!("error: {e}")),
    };

    let mut status = "ok".to_string();
    let report: Option<SimReport> = if cfg.simulation.enabled {
        let scale = simulator::association_scale_m(&derived);
        let sc = SimConfig {
            region_radius_m: cfg.simulation.region_scale * scale,
            n_iterations: cfg.simulation.iterations,
            rng_seed: cfg
                .simulation
                .seed
                .wrapping_add((point_idx as u64).wrapping_mul(SEED_STRIDE)),
            interference_enabled: true,
            mode,
            scheme,
            interferer_model: match cfg.simulation.interferer_model {
                InterfererKind::Full => InterfererModel::FullFidelity,
                InterfererKind::Thinned => InterfererModel::Thinned {
                    channel_activity: perf.p_act,
                },
            },
            interior_margin_m: cfg.simulation.margin_scale * scale,
        };
        match simulator::run(&params, &sc) {
            Ok(r) => Some(r),
            Err(e) => {
                status = format!("simulation error: {e}");
                None
            }
        }
    } else {
        None
    };

    let mut rows = skeleton(status);
    for (k, row) in rows.iter_mut().enumerate() {
        row.p_act = Some(perf.p_act);
        row.p_sel = Some(perf.p_sel);
        row.pcov_snr = Some(perf.pcov_snr[k]);
        row.pcov = Some(perf.pcov[k]);
        row.ase_sf = Some(perf.ase_per_sf[k]);
        row.ase_total = Some(perf.ase_total);
        if let Some(r) = &report {
            row.sim_p_act = opt(r.p_act.mean);
            row.sim_p_act_se = opt(r.p_act.std_error);
            row.sim_p_sel = opt(r.p_sel.mean);
            row.sim_p_sel_se = opt(r.p_sel.std_error);
            row.sim_pcov = opt(r.pcov[k].mean);
            row.sim_pcov_se = opt(r.pcov[k].std_error);
            row.sim_ase_sf = opt(r.ase_per_sf[k].mean);
            row.sim_ase_sf_se = opt(r.ase_per_sf[k].std_error);
            row.sim_ase_total = opt(r.ase_total.mean);
            row.sim_ase_total_se = opt(r.ase_total.std_error);
        }
    }
    rows
}

/// One line of the validation table.
#[derive(Debug, Clone)]
pub struct ValidationRow {
    pub quantity: String,
    pub scheme: &'static str,
    pub mode: &'static str,
    pub analytical: f64,
    pub estimate: f64,
    /// Standard error reported by the simulator.
    pub std_error: f64,
    /// Sample count behind the estimate.
    pub samples: u64,
    /// Standardized distance with the small-sample floor applied.
    pub z: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub rows: Vec<ValidationRow>,
}

impl ValidationReport {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.pass).count()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<12} {:<7} {:<5} {:>13} {:>13} {:>10} {:>8} {:>7} verdict",
            "quantity", "scheme", "mode", "analytical", "estimate", "std_error", "samples", "z"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<12} {:<7} {:<5} {:>13.6e} {:>13.6e} {:>10.2e} {:>8} {:>7.2} {}",
                r.quantity,
                r.scheme,
                r.mode,
                r.analytical,
                r.estimate,
                r.std_error,
                r.samples,
                r.z,
                if r.pass { "pass" } else { "FAIL" }
            );
        }
        s
    }
}

/// Standardized distance of a probability estimate from its reference.
///
/// The empirical standard error of a near-degenerate sample can collapse to
/// zero (every draw identical), which would turn a harmless small-sample
/// fluctuation into an infinite z. For probabilities the reference value
/// itself fixes the sampling variance under the hypothesis being tested, so
/// the verdict uses the larger of the reported error and that binomial floor.
fn z_with_floor(analytical: f64, est_mean: f64, est_se: f64, n: u64, probability: bool) -> f64 {
    let mut se = if est_se.is_finite() { est_se } else { 0.0 };
    if probability && n > 0 {
        let floor = (analytical * (1.0 - analytical) / n as f64).sqrt();
        se = se.max(floor);
    }
    if se <= 0.0 {
        return if (analytical - est_mean).abs() == 0.0 { 0.0 } else { f64::INFINITY };
    }
    ((analytical - est_mean) / se).abs()
}

/// Cross-checks every closed form against the simulator at the configured
/// operating point, one thinned run per (scheme, mode).
///
/// The interferer field is always the thinned model with the analytical
/// channel activity, the construction whose estimates are unbiased for the
/// closed forms; the full spatial model carries boundary truncation at any
/// finite radius and is meant for figures, not for this gate.
pub fn run_validation(cfg: &Config) -> Result<ValidationReport, CliError> {
    cfg.validate_common()?;
    if !cfg.simulation.enabled {
        return Err(CliError::Config("validation requires simulation".into()));
    }
    let params = cfg.network.to_params();
    let derived = params.derive()?;
    let p_act = analysis::active_prob(&derived)?;
    let p_sel = analysis::selection_prob(&derived)?;
    let rej = rejection_matrix();
    let quad = QuadratureSpec::default();
    let scale = simulator::association_scale_m(&derived);

    let mut rows = Vec::new();
    for (run_idx, (&scheme_name, &mode_name)) in cfg
        .sweep
        .schemes
        .iter()
        .flat_map(|s| cfg.sweep.modes.iter().map(move |m| (s, m)))
        .enumerate()
    {
        let scheme = scheme_name.to_scheme();
        let mode = mode_name.to_mode();
        let alloc = sf_allocation(scheme);
        let perf: PerfResult = analysis::ase(&alloc, mode, &derived, &rej, &quad)?;
        let sc = SimConfig {
            region_radius_m: cfg.simulation.region_scale * scale,
            n_iterations: cfg.simulation.iterations,
            rng_seed: cfg
                .simulation
                .seed
                .wrapping_add((run_idx as u64).wrapping_mul(SEED_STRIDE)),
            interference_enabled: true,
            mode,
            scheme,
            interferer_model: InterfererModel::Thinned { channel_activity: p_act },
            interior_margin_m: cfg.simulation.margin_scale * scale,
        };
        let report = simulator::run(&params, &sc)?;

        if run_idx == 0 {
            for (name, reference, est, probability) in [
                ("p_act", p_act, report.p_act, false),
                ("p_sel", p_sel, report.p_sel, true),
            ] {
                let z = z_with_floor(reference, est.mean, est.std_error, est.n, probability);
                rows.push(ValidationRow {
                    quantity: name.into(),
                    scheme: "-",
                    mode: "-",
                    analytical: reference,
                    estimate: est.mean,
                    std_error: est.std_error,
                    samples: est.n,
                    z,
                    pass: z <= Z_LIMIT,
                });
            }
        }
        for (k, sf) in Sf::ALL.iter().enumerate() {
            let est = report.pcov[k];
            let z = z_with_floor(perf.pcov[k], est.mean, est.std_error, est.n, true);
            rows.push(ValidationRow {
                quantity: format!("pcov_{sf}"),
                scheme: scheme.label(),
                mode: mode.label(),
                analytical: perf.pcov[k],
                estimate: est.mean,
                std_error: est.std_error,
                samples: est.n,
                z,
                pass: z <= Z_LIMIT,
            });
        }
        let est = report.ase_total;
        let z = z_with_floor(perf.ase_total, est.mean, est.std_error, est.n, false);
        rows.push(ValidationRow {
            quantity: "ase_total".into(),
            scheme: scheme.label(),
            mode: mode.label(),
            analytical: perf.ase_total,
            estimate: est.mean,
            std_error: est.std_error,
            samples: est.n,
            z,
            pass: z <= Z_LIMIT,
        });
    }
    Ok(ValidationReport { rows })
}
