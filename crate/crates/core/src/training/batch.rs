use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::lineage::{extract_first_egg, isolate_offspring, transplant, EggGeometry};
use crate::rng::RngStream;

use super::loss::TargetImage;

/// One phase of training: start from `initial`, reach `target`.
#[derive(Debug, Clone)]
pub struct TargetSpec {
    pub label: String,
    pub initial: Grid,
    pub target: TargetImage,
    /// Where substituted batch slots come from.
    pub feed: Option<Feed>,
}

impl TargetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.initial.height() != self.target.height() || self.initial.width() != self.target.width() {
            return Err(Error::invalid(format!(
                "target '{}' is {}x{} but its initial grid is {}x{}",
                self.label,
                self.target.height(),
                self.target.width(),
                self.initial.height(),
                self.initial.width()
            )));
        }
        Ok(())
    }
}

/// Substitution source for a phase: the final outputs of phase `from`,
/// prepared by `kind`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Feed {
    pub from: usize,
    pub kind: FeedKind,
    /// Overrides the global substitution fraction for this phase.
    #[serde(default)]
    pub fraction: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FeedKind {
    /// Use the outputs as they are.
    Direct,
    /// Take the first laid egg and transplant it.
    Egg { geometry: EggGeometry },
    /// Isolate one daughter and move it to `center`.
    Offspring { center: (f64, f64) },
}

impl FeedKind {
    /// Turn a previous output into a starting state, if possible.
    pub fn prepare(&self, output: &Grid, rng: &mut RngStream) -> Option<Grid> {
        match self {
            FeedKind::Direct => (!output.is_dead()).then(|| output.clone()),
            FeedKind::Egg { geometry } => {
                let dna = extract_first_egg(output, geometry)?;
                transplant(&dna, output.shape(), geometry).ok()
            }
            FeedKind::Offspring { center } => isolate_offspring(output, *center, rng),
        }
    }
}

/// Number of slots taken from previous outputs.
pub fn substitution_count(batch_size: usize, fraction: f64) -> usize {
    ((fraction.clamp(0.0, 1.0) * batch_size as f64).floor() as usize).min(batch_size)
}

/// Initial states for one training step. The first
/// `floor(fraction * batch_size)` slots come from `previous` (detached
/// copies), the rest are the canonical `seed`. Without previous outputs the
/// whole batch is seeds.
pub fn substitute_batch(seed: &Grid, previous: Option<&[Grid]>, batch_size: usize, fraction: f64) -> Vec<Grid> {
    let n_sub = substitution_count(batch_size, fraction);
    (0..batch_size)
        .map(|slot| match previous {
            Some(prev) if slot < n_sub && slot < prev.len() => prev[slot].clone(),
            _ => seed.clone(),
        })
        .collect()
}

/// Targets cycle with the training step.
pub fn select_target(training_step: usize, targets: &[TargetSpec]) -> Result<usize> {
    if targets.is_empty() {
        return Err(Error::invalid("at least one target is required"));
    }
    Ok(training_step % targets.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Boundary, ALPHA};

    fn seed() -> Grid {
        let mut g = Grid::new(4, 4, Boundary::Torus).unwrap();
        g.cell_mut(1, 1)[ALPHA] = 1.0;
        g
    }

    fn outputs() -> Vec<Grid> {
        (0..8)
            .map(|i| {
                let mut g = Grid::new(4, 4, Boundary::Torus).unwrap();
                g.cell_mut(2, 2)[ALPHA] = 0.2 + i as f32 * 0.1;
                g
            })
            .collect()
    }

    #[test]
    fn half_of_eight_slots_substituted() {
        let prev = outputs();
        let batch = substitute_batch(&seed(), Some(&prev), 8, 0.5);
        assert_eq!(batch.len(), 8);
        for (i, g) in batch.iter().enumerate().take(4) {
            assert_eq!(g, &prev[i]);
        }
        assert!(batch[4..].iter().all(|g| g == &seed()));
    }

    #[test]
    fn zero_fraction_and_first_step_are_all_seeds() {
        let prev = outputs();
        assert!(substitute_batch(&seed(), Some(&prev), 8, 0.0).iter().all(|g| g == &seed()));
        assert!(substitute_batch(&seed(), None, 8, 0.5).iter().all(|g| g == &seed()));
    }

    #[test]
    fn substitution_count_floors() {
        assert_eq!(substitution_count(8, 0.5), 4);
        assert_eq!(substitution_count(7, 0.5), 3);
        assert_eq!(substitution_count(3, 1.0), 3);
        assert_eq!(substitution_count(3, 0.0), 0);
    }

    fn spec(label: &str) -> TargetSpec {
        TargetSpec {
            label: label.into(),
            initial: seed(),
            target: TargetImage::blank(4, 4),
            feed: None,
        }
    }

    #[test]
    fn target_selection_alternates() {
        let one = vec![spec("a")];
        assert!((0..5).all(|s| select_target(s, &one).unwrap() == 0));
        let two = vec![spec("growth"), spec("division")];
        assert_eq!(select_target(0, &two).unwrap(), 0);
        assert_eq!(select_target(1, &two).unwrap(), 1);
        for s in 0..10 {
            assert_eq!(select_target(s, &two).unwrap(), select_target(s + 2, &two).unwrap());
        }
        assert!(select_target(0, &[]).is_err());
    }
}
