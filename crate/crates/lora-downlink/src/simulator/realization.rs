//! Spatial sampling and min-path-loss association for one network snapshot.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Exp1, Poisson};

use super::SimConfig;
use crate::model::DerivedParams;

/// An available gateway: at least one duty-cycle channel is free.
#[derive(Debug, Clone)]
pub struct Gateway {
    pub pos: [f64; 2],
    /// Distance to the typical device at the origin, meters.
    pub dist: f64,
    /// Bitmask of free channels (bit i = channel i).
    pub channels: u64,
    pub n_available: u8,
    /// Unit-mean Rayleigh power fade of the link toward the origin.
    pub fade: f64,
}

/// One sampled network snapshot. Only available gateways are materialized;
/// unavailable ones interact with nothing, so their count suffices.
#[derive(Debug, Clone)]
pub struct Realization {
    pub gateways: Vec<Gateway>,
    /// Total gateways in the region, available or not.
    pub n_total_gw: usize,
    /// Active end devices, excluding the typical one at the origin.
    pub active_eds: Vec<[f64; 2]>,
    /// Index into `gateways` of each active ED's serving gateway.
    pub ed_assoc: Vec<u32>,
    /// Serving gateway of the typical device; `None` marks a degenerate
    /// realization with no available gateway in the region.
    pub serving: Option<u32>,
}

impl Realization {
    /// Path loss from the typical device to its serving gateway.
    pub fn serving_loss(&self, derived: &DerivedParams) -> Option<f64> {
        self.serving.map(|s| derived.path_loss(self.gateways[s as usize].dist))
    }
}

fn sample_disk_point<R: Rng>(rng: &mut R, radius: f64) -> [f64; 2] {
    let r = radius * rng.random::<f64>().sqrt();
    let phi = 2.0 * std::f64::consts::PI * rng.random::<f64>();
    [r * phi.cos(), r * phi.sin()]
}

pub(super) fn poisson_count<R: Rng>(rng: &mut R, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let draw: f64 = Poisson::new(mean).expect("positive finite mean").sample(rng);
    draw as usize
}

/// Free-channel count of an available gateway: binomial conditioned on at
/// least one success, by inverse transform over the 1..=n tail.
fn conditional_channel_count<R: Rng>(rng: &mut R, n: u32, rho: f64, mu: f64) -> u32 {
    let mut pmf = (1.0 - rho).powi(n as i32);
    let mut cdf = 0.0;
    let target = rng.random::<f64>() * mu;
    for i in 1..=n {
        pmf *= (f64::from(n - i + 1) / f64::from(i)) * (rho / (1.0 - rho));
        cdf += pmf;
        if cdf >= target {
            return i;
        }
    }
    n
}

/// Uniform m-subset of {0, .., n-1} as a bitmask (Floyd's algorithm).
fn channel_subset<R: Rng>(rng: &mut R, n: u32, m: u32) -> u64 {
    debug_assert!(m >= 1 && m <= n && n <= 64);
    if m == n {
        return if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    }
    let mut mask = 0u64;
    for j in (n - m)..n {
        let t = rng.random_range(0..=j);
        if mask & (1u64 << t) != 0 {
            mask |= 1u64 << j;
        } else {
            mask |= 1u64 << t;
        }
    }
    mask
}

/// Uniform grid over the sampling square for nearest-gateway queries.
pub(super) struct GwGrid {
    cell: f64,
    dim: usize,
    origin: f64,
    buckets: Vec<Vec<u32>>,
}

impl GwGrid {
    pub(super) fn build(gateways: &[Gateway], region_radius: f64, target_cell: f64) -> GwGrid {
        let dim = ((2.0 * region_radius / target_cell).ceil() as usize).clamp(1, 1024);
        let cell = 2.0 * region_radius / dim as f64;
        let mut buckets = vec![Vec::new(); dim * dim];
        let origin = -region_radius;
        for (i, gw) in gateways.iter().enumerate() {
            let (ix, iy) = Self::cell_of(gw.pos, origin, cell, dim);
            buckets[iy * dim + ix].push(i as u32);
        }
        GwGrid { cell, dim, origin, buckets }
    }

    fn cell_of(p: [f64; 2], origin: f64, cell: f64, dim: usize) -> (usize, usize) {
        let ix = (((p[0] - origin) / cell) as isize).clamp(0, dim as isize - 1) as usize;
        let iy = (((p[1] - origin) / cell) as isize).clamp(0, dim as isize - 1) as usize;
        (ix, iy)
    }

    /// Index and distance of the gateway nearest to `p`, expanding ring by
    /// ring until no farther ring can beat the best candidate.
    pub(super) fn nearest(&self, gateways: &[Gateway], p: [f64; 2]) -> Option<(u32, f64)> {
        if gateways.is_empty() {
            return None;
        }
        let (cx, cy) = Self::cell_of(p, self.origin, self.cell, self.dim);
        let mut best: Option<(u32, f64)> = None;
        for ring in 0..self.dim {
            if let Some((_, d2)) = best {
                // Cells on farther rings are at least (ring-1) cell widths
                // away in every direction.
                let reach = (ring as f64 - 1.0).max(0.0) * self.cell;
                if d2 <= reach * reach {
                    break;
                }
            }
            let lo_x = cx.saturating_sub(ring);
            let hi_x = (cx + ring).min(self.dim - 1);
            let lo_y = cy.saturating_sub(ring);
            let hi_y = (cy + ring).min(self.dim - 1);
            let visit = |ix: usize, iy: usize, best: &mut Option<(u32, f64)>| {
                for &gi in &self.buckets[iy * self.dim + ix] {
                    let g = &gateways[gi as usize];
                    let dx = g.pos[0] - p[0];
                    let dy = g.pos[1] - p[1];
                    let d2 = dx * dx + dy * dy;
                    if best.map_or(true, |(_, b)| d2 < b) {
                        *best = Some((gi, d2));
                    }
                }
            };
            if ring == 0 {
                visit(cx, cy, &mut best);
                continue;
            }
            let on_ring = |ix: usize, iy: usize| {
                cx.abs_diff(ix).max(cy.abs_diff(iy)) == ring
            };
            for iy in lo_y..=hi_y {
                for ix in lo_x..=hi_x {
                    if on_ring(ix, iy) {
                        visit(ix, iy, &mut best);
                    }
                }
            }
        }
        best.map(|(i, d2)| (i, d2.sqrt()))
    }
}

/// Samples gateways, duty-cycle availability, active end devices, fading, and
/// the min-path-loss association. Deterministic given (seed, stream index);
/// the returned generator continues the same stream for the scheduling and
/// evaluation stages.
pub fn sample_realization(
    derived: &DerivedParams,
    cfg: &SimConfig,
    stream_index: u64,
) -> (Realization, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    rng.set_stream(stream_index);
    let p = &derived.params;
    let area = std::f64::consts::PI * cfg.region_radius_m * cfg.region_radius_m;

    let n_total_gw = poisson_count(&mut rng, p.lambda_gw * area);
    let n_available = if n_total_gw == 0 {
        0
    } else {
        Binomial::new(n_total_gw as u64, derived.mu).expect("mu in (0,1)").sample(&mut rng) as usize
    };
    let mut gateways = Vec::with_capacity(n_available);
    for _ in 0..n_available {
        let pos = sample_disk_point(&mut rng, cfg.region_radius_m);
        let count = conditional_channel_count(&mut rng, p.n_channels, p.duty_cycle, derived.mu);
        let channels = channel_subset(&mut rng, p.n_channels, count);
        let fade: f64 = rng.sample(Exp1);
        gateways.push(Gateway {
            pos,
            dist: (pos[0] * pos[0] + pos[1] * pos[1]).sqrt(),
            channels,
            n_available: count as u8,
            fade,
        });
    }

    let n_ed = poisson_count(&mut rng, derived.lambda_ed_a * area);
    let mut active_eds = Vec::with_capacity(n_ed);
    for _ in 0..n_ed {
        active_eds.push(sample_disk_point(&mut rng, cfg.region_radius_m));
    }

    // Equal-exponent path loss makes min path loss the same as min distance.
    let scale = 1.0 / (std::f64::consts::PI * derived.lambda_gw_a).sqrt();
    let grid = GwGrid::build(&gateways, cfg.region_radius_m, scale);
    let serving = grid.nearest(&gateways, [0.0, 0.0]).map(|(i, _)| i);
    let ed_assoc: Vec<u32> = if gateways.is_empty() {
        Vec::new()
    } else {
        active_eds
            .iter()
            .map(|&pos| grid.nearest(&gateways, pos).expect("gateways nonempty").0)
            .collect()
    };

    (Realization { gateways, n_total_gw, active_eds, ed_assoc, serving }, rng)
}
