use serde::{Deserialize, Serialize};

use crate::dynamics::{rollout_recorded, UpdateMode, DEFAULT_ROLLOUT_STEPS};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::network::{UpdateNetwork, DEFAULT_HIDDEN};
use crate::rng::RngStream;

use super::backward::accumulate_gradients;
use super::batch::{select_target, substitute_batch, substitution_count, TargetSpec};
use super::loss::LossChannels;
use super::optim::{AdamConfig, AdamState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub batch_size: usize,
    pub rollout_steps: usize,
    pub substitution_fraction: f64,
    pub learning_rate: f64,
    pub total_training_steps: usize,
    pub loss_channels: LossChannels,
    pub mode: UpdateMode,
    pub hidden_size: usize,
    pub seed: u64,
    pub adam: AdamConfig,
    /// Multiplicative learning-rate drops, applied from their step onwards.
    pub lr_milestones: Vec<LrMilestone>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrMilestone {
    pub step: usize,
    pub factor: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            batch_size: 8,
            rollout_steps: DEFAULT_ROLLOUT_STEPS,
            substitution_fraction: 0.5,
            learning_rate: 2e-3,
            total_training_steps: 1000,
            loss_channels: LossChannels::Rgba,
            mode: UpdateMode::default(),
            hidden_size: DEFAULT_HIDDEN,
            seed: 0,
            adam: AdamConfig::default(),
            lr_milestones: Vec::new(),
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.substitution_fraction) {
            return Err(Error::invalid("substitution fraction must lie in [0, 1]"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be finite and non-negative"));
        }
        if self.hidden_size == 0 {
            return Err(Error::invalid("hidden size must be at least 1"));
        }
        if self.lr_milestones.iter().any(|m| !(m.factor > 0.0 && m.factor.is_finite())) {
            return Err(Error::invalid("learning-rate milestone factors must be positive and finite"));
        }
        self.mode.validate()
    }

    pub fn learning_rate_at(&self, training_step: usize) -> f64 {
        self.lr_milestones
            .iter()
            .filter(|m| m.step <= training_step)
            .fold(self.learning_rate, |lr, m| lr * m.factor)
    }
}

/// Losses of one training step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub training_step: usize,
    pub target_index: usize,
    pub losses: Vec<f64>,
}

impl LossRecord {
    pub fn mean(&self) -> f64 {
        self.losses.iter().sum::<f64>() / self.losses.len() as f64
    }
}

/// Early-versus-late comparison of a loss series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceReport {
    pub head_mean: f64,
    pub tail_mean: f64,
    /// `tail_mean / head_mean`.
    pub ratio: f64,
}

impl ConvergenceReport {
    /// Mean loss over the first `head` and the last `tail` steps.
    pub fn from_history(history: &[LossRecord], head: usize, tail: usize) -> Option<Self> {
        if history.is_empty() {
            return None;
        }
        let mean = |recs: &[LossRecord]| recs.iter().map(LossRecord::mean).sum::<f64>() / recs.len() as f64;
        let head_mean = mean(&history[..head.clamp(1, history.len())]);
        let tail_mean = mean(&history[history.len() - tail.clamp(1, history.len())..]);
        Some(Self {
            head_mean,
            tail_mean,
            ratio: tail_mean / head_mean,
        })
    }

    pub fn converged(&self, factor: f64) -> bool {
        self.ratio <= factor
    }
}

/// Stateful training loop.
#[derive(Debug)]
pub struct Trainer {
    config: TrainingConfig,
    targets: Vec<TargetSpec>,
    net: UpdateNetwork,
    adam: AdamState,
    step: usize,
    /// Final grids of the most recent step of each phase.
    pools: Vec<Option<Vec<Grid>>>,
    history: Vec<LossRecord>,
}

impl Trainer {
    pub fn new(config: TrainingConfig, targets: Vec<TargetSpec>) -> Result<Self> {
        let mut rng = RngStream::with_stream(config.seed, 0);
        let net = UpdateNetwork::init(config.hidden_size, &mut rng)?;
        Self::with_network(config, targets, net, 0)
    }

    /// Resume from existing parameters. Optimizer moments start fresh.
    pub fn with_network(
        config: TrainingConfig,
        targets: Vec<TargetSpec>,
        net: UpdateNetwork,
        start_step: usize,
    ) -> Result<Self> {
        config.validate()?;
        if targets.is_empty() {
            return Err(Error::invalid("at least one target is required"));
        }
        for t in &targets {
            t.validate()?;
            if let Some(feed) = &t.feed {
                if feed.from >= targets.len() {
                    return Err(Error::invalid(format!(
                        "target '{}' is fed from phase {} but only {} exist",
                        t.label,
                        feed.from,
                        targets.len()
                    )));
                }
            }
        }
        if net.hidden_size() != config.hidden_size {
            return Err(Error::Dimension(format!(
                "network has hidden size {}, config asks for {}",
                net.hidden_size(),
                config.hidden_size
            )));
        }
        let adam = AdamState::new(net.param_count(), config.adam);
        let pools = vec![None; targets.len()];
        Ok(Self {
            config,
            targets,
            net,
            adam,
            step: start_step,
            pools,
            history: Vec::new(),
        })
    }

    pub fn network(&self) -> &UpdateNetwork {
        &self.net
    }

    pub fn into_network(self) -> UpdateNetwork {
        self.net
    }

    pub fn history(&self) -> &[LossRecord] {
        &self.history
    }

    pub fn config(&self) -> &TrainingConfig {
        &self.config
    }

    pub fn targets(&self) -> &[TargetSpec] {
        &self.targets
    }

    pub fn current_step(&self) -> usize {
        self.step
    }

    /// Latest final grids of phase `index`, if that phase has run.
    pub fn pool(&self, index: usize) -> Option<&[Grid]> {
        self.pools.get(index)?.as_deref()
    }

    fn stream(&self, slot: usize, salt: u64) -> RngStream {
        let id = ((self.step as u64) << 16 | slot as u64) + 1;
        RngStream::with_stream(self.config.seed, id ^ salt)
    }

    /// Starting grids for the current step.
    pub fn build_batch(&self, target_index: usize) -> Vec<Grid> {
        let target = &self.targets[target_index];
        let b = self.config.batch_size;
        let Some(feed) = &target.feed else {
            return substitute_batch(&target.initial, None, b, 0.0);
        };
        let fraction = feed.fraction.unwrap_or(self.config.substitution_fraction);
        let Some(outputs) = self.pools[feed.from].as_ref() else {
            return substitute_batch(&target.initial, None, b, fraction);
        };
        let n_sub = substitution_count(b, fraction);
        // Sources are a seeded draw without replacement over all previous
        // outputs, so substituted chains mix with fresh ones.
        let mut order: Vec<usize> = (0..outputs.len()).collect();
        let mut pick = self.stream(0, 1 << 61);
        for i in 0..order.len().min(n_sub) {
            let j = i + pick.below((order.len() - i) as u32) as usize;
            order.swap(i, j);
        }
        let prepared: Vec<Grid> = (0..n_sub)
            .map(|slot| {
                let mut rng = self.stream(slot, 1 << 62);
                order
                    .get(slot)
                    .and_then(|&src| feed.kind.prepare(&outputs[src], &mut rng))
                    .unwrap_or_else(|| target.initial.clone())
            })
            .collect();
        substitute_batch(&target.initial, Some(&prepared), b, fraction)
    }

    /// One optimization step: rollout, loss, backward and update.
    pub fn train_step(&mut self) -> Result<LossRecord> {
        let ti = select_target(self.step, &self.targets)?;
        let batch = self.build_batch(ti);
        let cfg = &self.config;
        let target = &self.targets[ti];
        let mut grads = self.net.zeros_like();
        let mut losses = Vec::with_capacity(batch.len());
        let mut finals = Vec::with_capacity(batch.len());
        let scale = 1.0 / batch.len() as f64;
        for (slot, start) in batch.iter().enumerate() {
            let mut rng = self.stream(slot, 0);
            let traj = rollout_recorded(start, &self.net, cfg.rollout_steps, &cfg.mode, &mut rng);
            let loss = accumulate_gradients(&traj, &self.net, &target.target, cfg.loss_channels, scale, &mut grads)?;
            losses.push(loss);
            finals.push(traj.final_grid);
        }
        if losses.iter().any(|l| !l.is_finite()) {
            return Err(self.diverged("non-finite loss"));
        }
        if self.adam.step(&mut self.net, &grads, cfg.learning_rate_at(self.step)).is_err() {
            return Err(self.diverged("non-finite gradient"));
        }
        if !self.net.is_finite() {
            return Err(self.diverged("non-finite parameters"));
        }
        self.pools[ti] = Some(finals);
        let record = LossRecord {
            training_step: self.step,
            target_index: ti,
            losses,
        };
        self.history.push(record.clone());
        self.step += 1;
        Ok(record)
    }

    fn diverged(&self, reason: &str) -> Error {
        Error::TrainingDiverged {
            step: self.step,
            reason: reason.into(),
            last_good: Box::new(self.net.clone()),
        }
    }

    /// Run until `total_training_steps`, calling `observe` after every step.
    pub fn run(&mut self, mut observe: impl FnMut(&LossRecord, &UpdateNetwork)) -> Result<()> {
        while self.step < self.config.total_training_steps {
            let rec = self.train_step()?;
            observe(&rec, &self.net);
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub network: UpdateNetwork,
    pub history: Vec<LossRecord>,
}

impl TrainOutcome {
    /// Compares the first 10% of steps with the last half; converged when
    /// the late loss is at most a tenth of the early one.
    pub fn convergence(&self) -> Option<ConvergenceReport> {
        let n = self.history.len();
        ConvergenceReport::from_history(&self.history, (n / 10).max(1), (n / 2).max(1))
    }
}

/// Train from scratch. Failing to converge is reported through the loss
/// history, not as an error.
pub fn train(config: TrainingConfig, targets: Vec<TargetSpec>) -> Result<TrainOutcome> {
    let mut trainer = Trainer::new(config, targets)?;
    trainer.run(|_, _| {})?;
    Ok(TrainOutcome {
        history: trainer.history.clone(),
        network: trainer.into_network(),
    })
}
