//! Single steps and multi-step rollouts of the automaton.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, ResetRule, UpdateMask, CHANNELS, PERCEPTION};
use crate::network::UpdateNetwork;
use crate::real::Real;
use crate::rng::{bernoulli_threshold, RngStream};

pub const DEFAULT_ROLLOUT_STEPS: usize = 96;
pub const DEFAULT_ASYNC_RATE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateKind {
    /// Every updatable cell fires each step.
    Synchronous,
    /// A random subset of cells fires each step.
    #[default]
    Asynchronous,
}

/// How the asynchronous subset is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AsyncSampling {
    /// Each cell independently with probability `async_rate`.
    #[default]
    Bernoulli,
    /// Exactly `round(async_rate * cells)` cells, uniformly without replacement.
    ExactFraction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UpdateMode {
    pub kind: UpdateKind,
    pub async_rate: f64,
    pub sampling: AsyncSampling,
    pub reset: ResetRule,
}

impl Default for UpdateMode {
    fn default() -> Self {
        Self::asynchronous(DEFAULT_ASYNC_RATE).expect("default rate is valid")
    }
}

impl UpdateMode {
    pub fn synchronous() -> Self {
        Self {
            kind: UpdateKind::Synchronous,
            async_rate: 1.0,
            sampling: AsyncSampling::Bernoulli,
            reset: ResetRule::Cell,
        }
    }

    pub fn asynchronous(rate: f64) -> Result<Self> {
        let mode = Self {
            kind: UpdateKind::Asynchronous,
            async_rate: rate,
            sampling: AsyncSampling::Bernoulli,
            reset: ResetRule::Cell,
        };
        mode.validate()?;
        Ok(mode)
    }

    pub fn with_sampling(mut self, sampling: AsyncSampling) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn with_reset(mut self, reset: ResetRule) -> Self {
        self.reset = reset;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.async_rate > 0.0 && self.async_rate <= 1.0) {
            return Err(Error::invalid(format!(
                "async rate must lie in (0, 1], got {}",
                self.async_rate
            )));
        }
        Ok(())
    }

    pub fn is_synchronous(&self) -> bool {
        self.kind == UpdateKind::Synchronous
    }
}

/// Everything the backward pass needs to replay one step.
#[derive(Debug, Clone)]
pub struct StepRecord<T> {
    /// Grid before the step.
    pub input: Grid<T>,
    /// Flat indices of the cells that fired, row-major.
    pub cells: Vec<u32>,
    /// Post-relu hidden activations, `cells.len() x hidden`.
    pub hidden: Vec<T>,
    /// `old + delta` before clamping, `cells.len() x 16`.
    pub summed: Vec<T>,
}

/// A recorded rollout.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub steps: Vec<StepRecord<T>>,
    pub final_grid: Grid<T>,
    /// Reset rule the steps were taken under.
    pub reset: ResetRule,
}

impl<T: Real> Trajectory<T> {
    pub fn initial(&self) -> &Grid<T> {
        self.steps
            .first()
            .map(|s| &s.input)
            .unwrap_or(&self.final_grid)
    }

    /// All grids from the initial state to the final one.
    pub fn grids(&self) -> impl Iterator<Item = &Grid<T>> {
        self.steps
            .iter()
            .map(|s| &s.input)
            .chain(std::iter::once(&self.final_grid))
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Reusable buffers for the batched forward pass.
#[derive(Debug, Default)]
pub struct StepScratch<T> {
    inputs: Vec<T>,
    hidden: Vec<T>,
    out: Vec<T>,
    order: Vec<u32>,
}

impl<T: Real> StepScratch<T> {
    pub fn new() -> Self {
        Self {
            inputs: Vec::new(),
            hidden: Vec::new(),
            out: Vec::new(),
            order: Vec::new(),
        }
    }
}

/// Draw the stochastic part of the mask. Consumes a fixed number of words
/// per step regardless of how many cells are alive, in row-major order.
pub fn stochastic_mask(
    cells: usize,
    height: usize,
    width: usize,
    mode: &UpdateMode,
    rng: &mut RngStream,
    order: &mut Vec<u32>,
) -> UpdateMask {
    let mut mask = UpdateMask::empty(height, width);
    let bits = mask.bits_mut();
    match (mode.kind, mode.sampling) {
        (UpdateKind::Synchronous, _) => bits.fill(true),
        (UpdateKind::Asynchronous, AsyncSampling::Bernoulli) => {
            let threshold = bernoulli_threshold(mode.async_rate);
            for b in bits.iter_mut() {
                *b = (rng.next_u32() as u64) < threshold;
            }
        }
        (UpdateKind::Asynchronous, AsyncSampling::ExactFraction) => {
            let k = ((mode.async_rate * cells as f64).round() as usize).min(cells);
            order.clear();
            order.extend(0..cells as u32);
            for i in 0..k {
                let j = i + rng.below((cells - i) as u32) as usize;
                order.swap(i, j);
            }
            for &i in &order[..k] {
                bits[i as usize] = true;
            }
        }
    }
    mask
}

/// Cells that fire this step: aliveness-eligible and selected by the mode.
pub fn firing_cells<T: Real>(
    grid: &Grid<T>,
    mode: &UpdateMode,
    rng: &mut RngStream,
    scratch: &mut StepScratch<T>,
) -> Vec<u32> {
    let shape = grid.shape();
    let eligible = grid.updatable_mask();
    let chosen = stochastic_mask(
        shape.cells(),
        shape.height,
        shape.width,
        mode,
        rng,
        &mut scratch.order,
    );
    eligible
        .bits()
        .iter()
        .zip(chosen.bits())
        .enumerate()
        .filter(|(_, (&e, &c))| e && c)
        .map(|(i, _)| i as u32)
        .collect()
}

fn step_inner<T: Real>(
    grid: &Grid<T>,
    net: &UpdateNetwork<T>,
    mode: &UpdateMode,
    rng: &mut RngStream,
    scratch: &mut StepScratch<T>,
    record: bool,
) -> (Grid<T>, Option<StepRecord<T>>) {
    let cells = firing_cells(grid, mode, rng, scratch);
    let n = cells.len();
    let h = net.hidden_size();

    scratch.inputs.resize(n * PERCEPTION, T::zero());
    scratch.hidden.resize(n * h, T::zero());
    scratch.out.resize(n * CHANNELS, T::zero());
    for (row, &c) in scratch.inputs.chunks_exact_mut(PERCEPTION).zip(&cells) {
        grid.gather_neighborhood(c as usize, row);
    }
    if n > 0 {
        net.forward_batch(&scratch.inputs, n, &mut scratch.hidden, &mut scratch.out);
    }

    let mut next = grid.clone();
    let (lo, hi) = (-T::one(), T::one());
    for (delta, &c) in scratch.out.chunks_exact_mut(CHANNELS).zip(&cells) {
        let cell = next.cell_at_mut(c as usize);
        for (v, d) in cell.iter_mut().zip(delta.iter_mut()) {
            // keep the unclamped sum in `delta` for the record
            *d += *v;
            *v = d.max(lo).min(hi);
        }
    }
    next.reset_after_step(grid, mode.reset);

    let rec = record.then(|| StepRecord {
        input: grid.clone(),
        cells,
        hidden: scratch.hidden[..n * h].to_vec(),
        summed: scratch.out[..n * CHANNELS].to_vec(),
    });
    (next, rec)
}

/// One update of the whole grid.
pub fn step<T: Real>(
    grid: &Grid<T>,
    net: &UpdateNetwork<T>,
    mode: &UpdateMode,
    rng: &mut RngStream,
) -> Grid<T> {
    step_inner(grid, net, mode, rng, &mut StepScratch::new(), false).0
}

/// `n_steps` sequential updates.
pub fn rollout<T: Real>(
    grid: &Grid<T>,
    net: &UpdateNetwork<T>,
    n_steps: usize,
    mode: &UpdateMode,
    rng: &mut RngStream,
) -> Grid<T> {
    let mut scratch = StepScratch::new();
    let mut g = grid.clone();
    for _ in 0..n_steps {
        g = step_inner(&g, net, mode, rng, &mut scratch, false).0;
    }
    g
}

/// Rollout that keeps every intermediate grid; `n_steps + 1` frames.
pub fn rollout_frames<T: Real>(
    grid: &Grid<T>,
    net: &UpdateNetwork<T>,
    n_steps: usize,
    mode: &UpdateMode,
    rng: &mut RngStream,
) -> Vec<Grid<T>> {
    let mut scratch = StepScratch::new();
    let mut frames = Vec::with_capacity(n_steps + 1);
    frames.push(grid.clone());
    for _ in 0..n_steps {
        let next = step_inner(frames.last().unwrap(), net, mode, rng, &mut scratch, false).0;
        frames.push(next);
    }
    frames
}

/// Rollout with everything needed for reverse-mode differentiation.
pub fn rollout_recorded<T: Real>(
    grid: &Grid<T>,
    net: &UpdateNetwork<T>,
    n_steps: usize,
    mode: &UpdateMode,
    rng: &mut RngStream,
) -> Trajectory<T> {
    let mut scratch = StepScratch::new();
    let mut steps = Vec::with_capacity(n_steps);
    let mut g = grid.clone();
    for _ in 0..n_steps {
        let (next, rec) = step_inner(&g, net, mode, rng, &mut scratch, true);
        steps.push(rec.expect("recording requested"));
        g = next;
    }
    Trajectory {
        steps,
        final_grid: g,
        reset: mode.reset,
    }
}
