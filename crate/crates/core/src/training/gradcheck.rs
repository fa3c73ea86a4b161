//! Central finite-difference check of the analytic gradients, in `f64`.
//!
//! The numeric side only runs forward rollouts and the loss; it never touches
//! the backward pass.

use serde::{Deserialize, Serialize};

use crate::dynamics::{rollout, rollout_recorded, UpdateMode};
use crate::error::Result;
use crate::grid::{Boundary, Grid, ALIVE_THRESHOLD, ALPHA, CHANNELS, PERCEPTION};
use crate::network::UpdateNetwork;
use crate::rng::RngStream;

use super::backward::backward;
use super::loss::{mse_loss, LossChannels, TargetImage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradCheckConfig {
    pub height: usize,
    pub width: usize,
    pub steps: usize,
    pub hidden_size: usize,
    pub instances: usize,
    /// Finite-difference step.
    pub h: f64,
    pub tolerance: f64,
    /// Fraction of parameters that must be within tolerance.
    pub required_fraction: f64,
    /// Instances are redrawn until every ReLU input, clamp input and alpha
    /// stays at least this far from its switching point, so that the
    /// finite differences never straddle a kink.
    pub kink_margin: f64,
    pub mode: UpdateMode,
    pub loss_channels: LossChannels,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            height: 8,
            width: 8,
            steps: 4,
            hidden_size: 8,
            instances: 20,
            h: 1e-4,
            tolerance: 1e-3,
            required_fraction: 0.99,
            kink_margin: 1e-3,
            mode: UpdateMode::default(),
            loss_channels: LossChannels::Rgba,
            seed: 0,
        }
    }
}

/// Analytic and numeric gradients agree within `tolerance` relative error.
/// Below `1e-9` in magnitude both are treated as zero.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-9)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceReport {
    pub params: usize,
    pub within: usize,
    pub max_rel_error: f64,
    /// Largest error among the parameters that passed.
    pub max_rel_error_within: f64,
}

impl InstanceReport {
    pub fn fraction_within(&self) -> f64 {
        self.within as f64 / self.params as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub instances: Vec<InstanceReport>,
    pub required_fraction: f64,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.instances
            .iter()
            .all(|i| i.fraction_within() >= self.required_fraction)
    }

    pub fn max_rel_error(&self) -> f64 {
        self.instances.iter().map(|i| i.max_rel_error).fold(0.0, f64::max)
    }

    pub fn worst_fraction(&self) -> f64 {
        self.instances
            .iter()
            .map(InstanceReport::fraction_within)
            .fold(1.0, f64::min)
    }
}

/// A random tiny problem: grid, network and target.
#[derive(Debug, Clone)]
pub struct Instance {
    pub grid: Grid<f64>,
    pub net: UpdateNetwork<f64>,
    pub target: TargetImage,
    pub rng_seed: u64,
}

/// Smallest distance of any piecewise switch in the instance's rollout
/// from its switching point.
pub fn kink_distance(inst: &Instance, config: &GradCheckConfig) -> f64 {
    let mut rng = RngStream::new(inst.rng_seed);
    let traj = rollout_recorded(&inst.grid, &inst.net, config.steps, &config.mode, &mut rng);
    let net = &inst.net;
    let h = net.hidden_size();
    let threshold = ALIVE_THRESHOLD;
    let mut d = f64::INFINITY;
    let mut x = [0.0f64; PERCEPTION];
    for cell in inst.grid.data().chunks_exact(CHANNELS) {
        d = d.min((cell[ALPHA] - threshold).abs());
    }
    for rec in &traj.steps {
        for (k, &c) in rec.cells.iter().enumerate() {
            rec.input.gather_neighborhood(c as usize, &mut x);
            for u in 0..h {
                let z: f64 = net.b1[u] + net.w1[u * PERCEPTION..(u + 1) * PERCEPTION].iter().zip(&x).map(|(w, v)| w * v).sum::<f64>();
                d = d.min(z.abs());
            }
            let summed = &rec.summed[k * CHANNELS..(k + 1) * CHANNELS];
            for &v in summed {
                d = d.min((v.abs() - 1.0).abs());
            }
            d = d.min((summed[ALPHA].clamp(-1.0, 1.0) - threshold).abs());
        }
    }
    d
}

/// A random instance that is smooth within `kink_margin`. Draws are
/// deterministic in `seed`.
pub fn random_instance(config: &GradCheckConfig, seed: u64) -> Result<Instance> {
    for attempt in 0..10_000u64 {
        let inst = draw_instance(config, seed, attempt)?;
        if kink_distance(&inst, config) >= config.kink_margin {
            return Ok(inst);
        }
    }
    Err(crate::error::Error::invalid(format!(
        "no smooth instance found for seed {seed}; lower kink_margin"
    )))
}

fn draw_instance(config: &GradCheckConfig, seed: u64, attempt: u64) -> Result<Instance> {
    let mut rng = RngStream::with_stream(seed, 7 + (attempt << 8));
    let mut grid = Grid::<f64>::new(config.height, config.width, Boundary::Torus)?;
    for r in 0..config.height {
        for c in 0..config.width {
            if rng.uniform() < 0.5 {
                let cell = grid.cell_mut(r, c);
                for v in cell.iter_mut() {
                    *v = rng.uniform_range(-0.9, 0.9);
                }
                cell[ALPHA] = rng.uniform_range(0.3, 0.9);
            }
        }
    }
    let mut net = UpdateNetwork::<f64>::zeros(config.hidden_size)?;
    for v in &mut net.w1 {
        *v = rng.uniform_range(-0.15, 0.15);
    }
    for v in &mut net.b1 {
        *v = rng.uniform_range(-0.1, 0.1);
    }
    for v in &mut net.w2 {
        *v = rng.uniform_range(-0.15, 0.15);
    }
    for v in &mut net.b2 {
        *v = rng.uniform_range(-0.05, 0.05);
    }
    let data = (0..config.height * config.width * 4)
        .map(|_| rng.uniform() as f32)
        .collect();
    let target = TargetImage::from_data(config.height, config.width, data)?;
    Ok(Instance {
        grid,
        net,
        target,
        rng_seed: rng.next_u64(),
    })
}

fn loss_of(inst: &Instance, net: &UpdateNetwork<f64>, config: &GradCheckConfig) -> Result<f64> {
    let mut rng = RngStream::new(inst.rng_seed);
    let out = rollout(&inst.grid, net, config.steps, &config.mode, &mut rng);
    mse_loss(&out, &inst.target, config.loss_channels)
}

pub fn check_instance(inst: &Instance, config: &GradCheckConfig) -> Result<InstanceReport> {
    let mut rng = RngStream::new(inst.rng_seed);
    let traj = rollout_recorded(&inst.grid, &inst.net, config.steps, &config.mode, &mut rng);
    let (_, grads) = backward(&traj, &inst.net, &inst.target, config.loss_channels)?;

    let mut probe = inst.net.clone();
    let n = probe.param_count();
    let mut within = 0;
    let mut max_err = 0.0f64;
    let mut max_within = 0.0f64;
    for i in 0..n {
        let orig = probe.param(i);
        *probe.param_mut(i) = orig + config.h;
        let plus = loss_of(inst, &probe, config)?;
        *probe.param_mut(i) = orig - config.h;
        let minus = loss_of(inst, &probe, config)?;
        *probe.param_mut(i) = orig;
        let numeric = (plus - minus) / (2.0 * config.h);
        let err = relative_error(grads.param(i), numeric);
        max_err = max_err.max(err);
        if err < config.tolerance {
            within += 1;
            max_within = max_within.max(err);
        }
    }
    Ok(InstanceReport {
        params: n,
        within,
        max_rel_error: max_err,
        max_rel_error_within: max_within,
    })
}

pub fn run(config: &GradCheckConfig) -> Result<GradCheckReport> {
    let instances = (0..config.instances)
        .map(|k| random_instance(config, config.seed.wrapping_add(k as u64)).and_then(|i| check_instance(&i, config)))
        .collect::<Result<Vec<_>>>()?;
    Ok(GradCheckReport {
        instances,
        required_fraction: config.required_fraction,
        tolerance: config.tolerance,
    })
}
