//! Network and radio model parameters.
//!
//! Densities are expressed per square meter. A gateway is *available* when at
//! least one of its duty-cycled channels is free, and an end device is
//! *active* when it awaits a downlink; both thinnings are independent, so the
//! available-gateway and active-device processes stay Poisson.

use crate::error::Error;

/// LoRa spreading factors SF7 through SF12.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sf {
    Sf7,
    Sf8,
    Sf9,
    Sf10,
    Sf11,
    Sf12,
}

impl Sf {
    pub const ALL: [Sf; 6] = [Sf::Sf7, Sf::Sf8, Sf::Sf9, Sf::Sf10, Sf::Sf11, Sf::Sf12];

    /// Zero-based position in SF-indexed arrays.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Sf> {
        Sf::ALL.get(i).copied()
    }

    /// The spreading factor value itself (7 through 12).
    pub fn spreading_factor(self) -> u32 {
        7 + self as u32
    }

    /// Chips per symbol, 2^SF.
    pub fn chips(self) -> f64 {
        f64::from(1u32 << self.spreading_factor())
    }
}

impl std::fmt::Display for Sf {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SF{}", self.spreading_factor())
    }
}

/// How the network assigns spreading factors to downlink transmissions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Probability proportional to k 2^-k: equalizes expected time-on-air
    /// across SFs, favoring the fast short frames.
    FairCollision,
    /// Uniform over the six spreading factors.
    Random,
}

impl Scheme {
    pub const ALL: [Scheme; 2] = [Scheme::FairCollision, Scheme::Random];

    pub fn label(self) -> &'static str {
        match self {
            Scheme::FairCollision => "fair",
            Scheme::Random => "random",
        }
    }
}

/// Per-SF assignment probabilities of an allocation scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SfAllocation {
    pub scheme: Scheme,
    /// Probability that a transmission uses each SF, indexed by `Sf::index`.
    pub p_k: [f64; 6],
}

impl SfAllocation {
    pub fn p(&self, sf: Sf) -> f64 {
        self.p_k[sf.index()]
    }
}

/// Builds the SF assignment distribution for a scheme.
pub fn sf_allocation(scheme: Scheme) -> SfAllocation {
    let p_k = match scheme {
        Scheme::FairCollision => {
            // k 2^(12-k) for k = 7..12, normalized by their sum 498.
            let w = [224.0, 128.0, 72.0, 40.0, 22.0, 12.0];
            w.map(|x| x / 498.0)
        }
        Scheme::Random => [1.0 / 6.0; 6],
    };
    SfAllocation { scheme, p_k }
}

/// Receiver sensitivity thresholds (dB SNR) for SF7 through SF12.
pub const SNR_THRESHOLD_DB: [f64; 6] = [-6.0, -9.0, -12.0, -15.0, -17.5, -20.0];

/// Free-space propagation speed used for the reference path loss.
const PROPAGATION_SPEED: f64 = 3.0e8;

/// Thermal noise power spectral density at 290 K, dBm per Hz.
const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

/// Largest channel count the per-gateway channel bitmask supports.
pub const MAX_CHANNELS: u32 = 64;

/// Primary system parameters. Densities are per square meter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkParams {
    /// Gateway density.
    pub lambda_gw: f64,
    /// End-device density.
    pub lambda_ed: f64,
    /// Per-channel duty cycle rho: the fraction of time regulation lets a
    /// gateway occupy a channel, i.e. the probability a given channel is
    /// usable for a new downlink.
    pub duty_cycle: f64,
    /// Fraction theta of end devices awaiting a downlink at a given time.
    pub active_fraction: f64,
    /// Number of downlink channels per gateway.
    pub n_channels: u32,
    /// Total gateway transmit power budget, dBm, split evenly over channels.
    pub ptot_dbm: f64,
    /// Path-loss exponent beta (> 2).
    pub path_loss_exp: f64,
    /// Receiver noise figure, dB.
    pub noise_figure_db: f64,
    /// Channel bandwidth, Hz.
    pub bandwidth_hz: f64,
    /// Coding rate index CR in 1..=4; the code rate is 4/(4+CR).
    pub coding_rate: u32,
    /// Carrier frequency, Hz.
    pub carrier_hz: f64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        NetworkParams {
            lambda_gw: 2.0e-6,
            lambda_ed: 1.0e-3,
            duty_cycle: 0.01,
            active_fraction: 0.01,
            n_channels: 8,
            ptot_dbm: 25.0,
            path_loss_exp: 2.9,
            noise_figure_db: 6.0,
            bandwidth_hz: 125.0e3,
            coding_rate: 1,
            carrier_hz: 868.0e6,
        }
    }
}

impl NetworkParams {
    /// Checks hard constraints and returns soft warnings.
    ///
    /// Errors make the model meaningless (non-positive densities, beta <= 2
    /// where the interference integrals diverge). Warnings flag regimes the
    /// approximations were not designed for but that still evaluate.
    pub fn validate(&self) -> Result<Vec<String>, Error> {
        fn positive(name: &str, v: f64) -> Result<(), Error> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Validation(format!("{name} must be positive and finite, got {v}")))
            }
        }
        positive("lambda_gw", self.lambda_gw)?;
        positive("lambda_ed", self.lambda_ed)?;
        positive("bandwidth_hz", self.bandwidth_hz)?;
        positive("carrier_hz", self.carrier_hz)?;
        if self.lambda_gw >= self.lambda_ed {
            return Err(Error::Validation(format!(
                "gateway density {} must be strictly below end-device density {}",
                self.lambda_gw, self.lambda_ed
            )));
        }
        if !(self.duty_cycle > 0.0 && self.duty_cycle <= 1.0) {
            return Err(Error::Validation(format!(
                "duty_cycle must lie in (0, 1], got {}",
                self.duty_cycle
            )));
        }
        if !(self.active_fraction > 0.0 && self.active_fraction <= 1.0) {
            return Err(Error::Validation(format!(
                "active_fraction must lie in (0, 1], got {}",
                self.active_fraction
            )));
        }
        if self.n_channels == 0 || self.n_channels > MAX_CHANNELS {
            return Err(Error::Validation(format!(
                "n_channels must lie in 1..={MAX_CHANNELS}, got {}",
                self.n_channels
            )));
        }
        if !self.ptot_dbm.is_finite() {
            return Err(Error::Validation(format!("ptot_dbm must be finite, got {}", self.ptot_dbm)));
        }
        if !self.noise_figure_db.is_finite() || self.noise_figure_db < 0.0 {
            return Err(Error::Validation(format!(
                "noise_figure_db must be nonnegative, got {}",
                self.noise_figure_db
            )));
        }
        if !(self.path_loss_exp > 2.0) || !self.path_loss_exp.is_finite() {
            return Err(Error::Validation(format!(
                "path_loss_exp must exceed 2 (interference power diverges otherwise), got {}",
                self.path_loss_exp
            )));
        }
        if !(1..=4).contains(&self.coding_rate) {
            return Err(Error::Validation(format!(
                "coding_rate must lie in 1..=4, got {}",
                self.coding_rate
            )));
        }
        let mut warnings = Vec::new();
        if self.duty_cycle > 0.1 {
            warnings.push(format!(
                "duty_cycle {} exceeds typical sub-band regulation (<= 0.1)",
                self.duty_cycle
            ));
        }
        if self.lambda_gw / self.lambda_ed > 0.1 {
            warnings.push(format!(
                "gateway density is {:.2}x the end-device density; the sparse-gateway \
                 assumption is strained",
                self.lambda_gw / self.lambda_ed
            ));
        }
        let mu = 1.0 - (1.0 - self.duty_cycle).powi(self.n_channels as i32);
        let a_ratio = self.active_fraction * self.lambda_ed / (mu * self.lambda_gw);
        if a_ratio > 5.0e3 {
            warnings.push(format!(
                "active devices per available gateway = {a_ratio:.1}; cell-load series will be slow"
            ));
        }
        Ok(warnings)
    }

    /// Validates and computes all derived quantities.
    pub fn derive(&self) -> Result<DerivedParams, Error> {
        self.validate()?;
        let mu = 1.0 - (1.0 - self.duty_cycle).powi(self.n_channels as i32);
        let lambda_gw_a = mu * self.lambda_gw;
        let lambda_ed_a = self.active_fraction * self.lambda_ed;
        let delta = 2.0 / self.path_loss_exp;
        let k0 = (4.0 * std::f64::consts::PI * self.carrier_hz / PROPAGATION_SPEED).powi(2);
        let sigma2_dbm =
            THERMAL_NOISE_DBM_HZ + self.noise_figure_db + 10.0 * self.bandwidth_hz.log10();
        let code_rate = 4.0 / (4.0 + f64::from(self.coding_rate));
        let mut rate_bps = [0.0; 6];
        for sf in Sf::ALL {
            let k = f64::from(sf.spreading_factor());
            rate_bps[sf.index()] = k * self.bandwidth_hz / sf.chips() * code_rate;
        }
        Ok(DerivedParams {
            params: *self,
            mu,
            lambda_gw_a,
            lambda_ed_a,
            a_ratio: lambda_ed_a / lambda_gw_a,
            delta,
            k0,
            sigma2_mw: 10f64.powf(sigma2_dbm / 10.0),
            p_tx_ch_mw: 10f64.powf(self.ptot_dbm / 10.0) / f64::from(self.n_channels),
            gamma_d_lin: SNR_THRESHOLD_DB.map(|db| 10f64.powf(db / 10.0)),
            rate_bps,
        })
    }
}

/// `NetworkParams` plus every derived quantity the formulas consume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    pub params: NetworkParams,
    /// Probability mu that a gateway has at least one free channel.
    pub mu: f64,
    /// Available-gateway density, per m^2.
    pub lambda_gw_a: f64,
    /// Active end-device density, per m^2.
    pub lambda_ed_a: f64,
    /// Mean active devices per available gateway.
    pub a_ratio: f64,
    /// 2 / path-loss exponent.
    pub delta: f64,
    /// Reference path loss at 1 m, linear.
    pub k0: f64,
    /// Noise power in the channel bandwidth, mW.
    pub sigma2_mw: f64,
    /// Per-channel transmit power, mW.
    pub p_tx_ch_mw: f64,
    /// Linear SNR thresholds indexed by `Sf::index`.
    pub gamma_d_lin: [f64; 6],
    /// Physical-layer bit rate per SF, bit/s.
    pub rate_bps: [f64; 6],
}

impl DerivedParams {
    /// Path loss at distance `r_m` meters, linear.
    pub fn path_loss(&self, r_m: f64) -> f64 {
        self.k0 * r_m.powf(self.params.path_loss_exp)
    }
}

/// Inter-SF rejection thresholds: entry (k, j) is the SIR (dB) a desired SF-k
/// frame needs against an SF-j interferer on the same channel. The diagonal
/// holds the co-SF capture threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectionMatrix {
    db: [[f64; 6]; 6],
    lin: [[f64; 6]; 6],
}

impl RejectionMatrix {
    pub fn new(db: [[f64; 6]; 6]) -> Self {
        let mut lin = [[0.0; 6]; 6];
        for k in 0..6 {
            for j in 0..6 {
                lin[k][j] = 10f64.powf(db[k][j] / 10.0);
            }
        }
        RejectionMatrix { db, lin }
    }

    pub fn db(&self, desired: Sf, interferer: Sf) -> f64 {
        self.db[desired.index()][interferer.index()]
    }

    /// Linear threshold, 10^(dB/10).
    pub fn linear(&self, desired: Sf, interferer: Sf) -> f64 {
        self.lin[desired.index()][interferer.index()]
    }
}

impl Default for RejectionMatrix {
    fn default() -> Self {
        RejectionMatrix::new([
            [1.0, -8.0, -9.0, -9.0, -9.0, -9.0],
            [-11.0, 1.0, -11.0, -12.0, -13.0, -13.0],
            [-15.0, -13.0, 1.0, -13.0, -14.0, -15.0],
            [-19.0, -18.0, -17.0, 1.0, -17.0, -18.0],
            [-22.0, -22.0, -21.0, -20.0, 1.0, -20.0],
            [-25.0, -25.0, -25.0, -24.0, -23.0, 1.0],
        ])
    }
}

/// The standard LoRa inter-SF rejection matrix.
pub fn rejection_matrix() -> RejectionMatrix {
    RejectionMatrix::default()
}
