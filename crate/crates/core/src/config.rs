//! Run configuration: one TOML file describes the grid, the training
//! phases, the lineage experiment and the analysis settings. Unknown keys
//! are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::StallConfig;
use crate::dynamics::{UpdateKind, DEFAULT_ROLLOUT_STEPS};
use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid, GridShape, DEFAULT_SIZE_MULTIPLIER};
use crate::io::{load_png, place_on_canvas};
use crate::lineage::{DnaVector, EggGeometry, LineageConfig, OffspringRule, DEFAULT_EGG_SIDE};
use crate::sprites::{Builtin, DEFAULT_SPRITE_SIDE};
use crate::training::{Feed, FeedKind, TargetImage, TargetSpec, TrainingConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub height: usize,
    pub width: usize,
    #[serde(default)]
    pub boundary: Boundary,
}

impl Default for GridConfig {
    fn default() -> Self {
        let side = (DEFAULT_SIZE_MULTIPLIER * DEFAULT_SPRITE_SIDE as f64).ceil() as usize;
        Self {
            height: side,
            width: side,
            boundary: Boundary::Torus,
        }
    }
}

/// Egg placement. `canonical` defaults to the grid center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EggConfig {
    #[serde(default = "default_egg_side")]
    pub side: usize,
    #[serde(default)]
    pub canonical: Option<(usize, usize)>,
    pub division: (usize, usize),
}

fn default_egg_side() -> usize {
    DEFAULT_EGG_SIDE
}

/// One image pasted onto a grid-sized canvas. Without an offset the layer is centered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Layer {
    Sprite {
        name: Builtin,
        #[serde(default)]
        side: Option<usize>,
        #[serde(default)]
        offset: Option<(isize, isize)>,
    },
    Image {
        path: PathBuf,
        #[serde(default)]
        offset: Option<(isize, isize)>,
    },
    /// An opaque black egg-sized square, at the division position unless `at` is given.
    Egg {
        #[serde(default)]
        at: Option<(usize, usize)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialState {
    /// The default egg at the canonical position.
    Egg,
    Layers { layers: Vec<Layer> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeedSource {
    Direct,
    Egg,
    Offspring,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedConfig {
    pub from: usize,
    pub kind: FeedSource,
    #[serde(default)]
    pub fraction: Option<f64>,
    /// Where an isolated offspring is re-centered; defaults to the grid center.
    #[serde(default)]
    pub center: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub label: String,
    pub initial: InitialState,
    pub layers: Vec<Layer>,
    #[serde(default)]
    pub feed: Option<FeedConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OffspringKind {
    #[default]
    Egg,
    Organism,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LineageSettings {
    pub offspring: OffspringKind,
    pub growth_steps: usize,
    pub division_steps: usize,
    pub generations: usize,
    /// Defaults to the training seed.
    pub seed: Option<u64>,
    /// Hidden-channel marker written into every founder egg cell.
    pub founder_marker: Option<f32>,
    /// Where a whole-organism offspring is re-centered.
    pub center: Option<(f64, f64)>,
}

impl Default for LineageSettings {
    fn default() -> Self {
        Self {
            offspring: OffspringKind::Egg,
            growth_steps: DEFAULT_ROLLOUT_STEPS,
            division_steps: DEFAULT_ROLLOUT_STEPS,
            generations: 100,
            seed: None,
            founder_marker: None,
            center: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSettings {
    pub stall_window: usize,
    pub stall_threshold: f64,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        let s = StallConfig::default();
        Self {
            stall_window: s.window,
            stall_threshold: s.threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSettings {
    /// Print a progress line every this many training steps.
    pub log_every: usize,
    /// Write an intermediate checkpoint every this many steps (0 disables).
    pub checkpoint_every: usize,
    /// Pixels per cell in rendered PNGs.
    pub upscale: u32,
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self {
            log_every: 10,
            checkpoint_every: 0,
            upscale: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub egg: Option<EggConfig>,
    #[serde(default)]
    pub training: TrainingConfig,
    #[serde(default)]
    pub targets: Vec<TargetConfig>,
    #[serde(default)]
    pub lineage: LineageSettings,
    #[serde(default)]
    pub analysis: AnalysisSettings,
    #[serde(default)]
    pub output: OutputSettings,
}

impl RunConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        cfg.validate().map_err(|e| Error::Config {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path)
    }

    /// Image paths become absolute (relative to `base`), so the resolved
    /// config can be written anywhere and still load.
    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                let joined = base.join(&*p);
                *p = std::path::absolute(&joined).unwrap_or(joined);
            }
        };
        for t in &mut self.targets {
            let initial = match &mut t.initial {
                InitialState::Layers { layers } => Some(layers),
                InitialState::Egg => None,
            };
            for layer in t.layers.iter_mut().chain(initial.into_iter().flatten()) {
                if let Layer::Image { path, .. } = layer {
                    fix(path);
                }
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.shape()?;
        self.training.validate()?;
        if let Some(egg) = &self.egg {
            self.egg_geometry_for(egg).validate(self.shape()?)?;
        }
        for (i, t) in self.targets.iter().enumerate() {
            if let Some(feed) = &t.feed {
                if feed.from >= self.targets.len() {
                    return Err(Error::invalid(format!(
                        "target {i} feeds from target {} but only {} exist",
                        feed.from,
                        self.targets.len()
                    )));
                }
                if feed.fraction.is_some_and(|f| !(0.0..=1.0).contains(&f)) {
                    return Err(Error::invalid(format!("target {i}: feed fraction must lie in [0, 1]")));
                }
            }
        }
        if self.analysis.stall_window == 0 {
            return Err(Error::invalid("stall window must be at least 1"));
        }
        Ok(())
    }

    pub fn shape(&self) -> Result<GridShape> {
        GridShape::new(self.grid.height, self.grid.width, self.grid.boundary)
    }

    fn egg_geometry_for(&self, egg: &EggConfig) -> EggGeometry {
        let shape = GridShape {
            height: self.grid.height,
            width: self.grid.width,
            boundary: self.grid.boundary,
        };
        let mut g = EggGeometry::centered(shape, egg.side, egg.division);
        if let Some(c) = egg.canonical {
            g.canonical = c;
        }
        g
    }

    pub fn egg_geometry(&self) -> Result<EggGeometry> {
        self.egg
            .as_ref()
            .map(|e| self.egg_geometry_for(e))
            .ok_or_else(|| Error::invalid("this run needs an [egg] section"))
    }

    fn grid_center(&self) -> (f64, f64) {
        ((self.grid.height as f64 - 1.0) / 2.0, (self.grid.width as f64 - 1.0) / 2.0)
    }

    /// Apply command-line overrides.
    pub fn override_with(&mut self, seed: Option<u64>, mode: Option<UpdateKind>) -> Result<()> {
        if let Some(s) = seed {
            self.training.seed = s;
            self.lineage.seed = None;
        }
        if let Some(kind) = mode {
            self.training.mode.kind = kind;
            if kind == UpdateKind::Synchronous {
                self.training.mode.async_rate = 1.0;
            }
        }
        self.validate()
    }

    pub fn compose(&self, layers: &[Layer]) -> Result<TargetImage> {
        let (h, w) = (self.grid.height, self.grid.width);
        let mut canvas = TargetImage::blank(h, w);
        for layer in layers {
            match layer {
                Layer::Sprite { name, side, offset } => {
                    let img = name.draw(side.unwrap_or(DEFAULT_SPRITE_SIDE))?;
                    canvas.composite(&place_on_canvas(&img, h, w, *offset)?, 0, 0);
                }
                Layer::Image { path, offset } => {
                    let img = load_png(path)?;
                    let placed = place_on_canvas(&img, h, w, *offset)
                        .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
                    canvas.composite(&placed, 0, 0);
                }
                Layer::Egg { at } => {
                    let geo = self.egg_geometry()?;
                    let side = geo.side;
                    let (r0, c0) = at.unwrap_or(geo.division);
                    let mut egg = TargetImage::blank(side, side);
                    for r in 0..side {
                        for c in 0..side {
                            egg.set_pixel(r, c, [0.0, 0.0, 0.0, 1.0]);
                        }
                    }
                    canvas.composite(&egg, r0 as isize, c0 as isize);
                }
            }
        }
        Ok(canvas)
    }

    fn initial_grid(&self, initial: &InitialState) -> Result<Grid> {
        let shape = self.shape()?;
        match initial {
            InitialState::Egg => crate::lineage::make_egg_seed(shape, &self.egg_geometry()?, None),
            InitialState::Layers { layers } => self.compose(layers)?.to_grid(shape),
        }
    }

    fn feed(&self, f: &FeedConfig) -> Result<Feed> {
        let kind = match f.kind {
            FeedSource::Direct => FeedKind::Direct,
            FeedSource::Egg => FeedKind::Egg {
                geometry: self.egg_geometry()?,
            },
            FeedSource::Offspring => FeedKind::Offspring {
                center: f.center.unwrap_or_else(|| self.grid_center()),
            },
        };
        Ok(Feed {
            from: f.from,
            kind,
            fraction: f.fraction,
        })
    }

    /// Build every training phase, loading image assets.
    pub fn build_targets(&self) -> Result<Vec<TargetSpec>> {
        if self.targets.is_empty() {
            return Err(Error::invalid("the config defines no [[targets]]"));
        }
        self.targets
            .iter()
            .map(|t| {
                Ok(TargetSpec {
                    label: t.label.clone(),
                    initial: self.initial_grid(&t.initial)?,
                    target: self.compose(&t.layers)?,
                    feed: t.feed.as_ref().map(|f| self.feed(f)).transpose()?,
                })
            })
            .collect()
    }

    pub fn lineage_seed(&self) -> u64 {
        self.lineage.seed.unwrap_or(self.training.seed)
    }

    pub fn lineage_config(&self) -> Result<LineageConfig> {
        let offspring = match self.lineage.offspring {
            OffspringKind::Egg => OffspringRule::Egg {
                geometry: self.egg_geometry()?,
            },
            OffspringKind::Organism => OffspringRule::Organism {
                center: self.lineage.center.unwrap_or_else(|| self.grid_center()),
            },
        };
        let cfg = LineageConfig {
            shape: self.shape()?,
            offspring,
            growth_steps: self.lineage.growth_steps,
            division_steps: self.lineage.division_steps,
            n_generations: self.lineage.generations,
            mode: self.training.mode,
            seed: self.lineage_seed(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Founder DNA: an egg for egg-laying runs, the first phase's starting
    /// grid for whole-organism runs.
    pub fn founder_dna(&self) -> Result<DnaVector> {
        match self.lineage.offspring {
            OffspringKind::Egg => {
                let side = self.egg_geometry()?.side;
                Ok(match self.lineage.founder_marker {
                    Some(m) => DnaVector::species_egg(side, m),
                    None => DnaVector::default_egg(side),
                })
            }
            OffspringKind::Organism => {
                let first = self
                    .targets
                    .first()
                    .ok_or_else(|| Error::invalid("whole-organism lineages need a first target"))?;
                Ok(DnaVector(self.initial_grid(&first.initial)?.into_data()))
            }
        }
    }

    pub fn stall_config(&self) -> StallConfig {
        StallConfig {
            window: self.analysis.stall_window,
            threshold: self.analysis.stall_threshold,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FISH: &str = r#"
[grid]
height = 40
width = 40

[egg]
division = [19, 24]

[training]
hidden_size = 16
batch_size = 2

[[targets]]
label = "grow"
initial = { kind = "egg" }
layers = [{ kind = "sprite", name = "fish" }]
feed = { from = 1, kind = "egg" }

[[targets]]
label = "divide"
initial = { kind = "layers", layers = [{ kind = "sprite", name = "fish" }] }
layers = [{ kind = "sprite", name = "fish", offset = [8, 2] }, { kind = "egg" }]
feed = { from = 0, kind = "direct", fraction = 1.0 }
"#;

    #[test]
    fn two_phase_config_builds() {
        let cfg = RunConfig::from_toml(FISH, Path::new("fish.toml")).unwrap();
        let targets = cfg.build_targets().unwrap();
        assert_eq!(targets.len(), 2);
        assert_eq!(targets[0].initial.alive_count(), 9);
        let geo = cfg.egg_geometry().unwrap();
        assert_eq!(geo.canonical, (18, 18));
        assert_eq!(targets[1].target.pixel(20, 25), [0.0, 0.0, 0.0, 1.0]);
        assert_eq!(targets[1].feed.unwrap().fraction, Some(1.0));
        assert!(matches!(targets[0].feed.unwrap().kind, FeedKind::Egg { .. }));
        assert_eq!(cfg.founder_dna().unwrap().len(), 9 * 16);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = FISH.replace("batch_size = 2", "batch_size = 2\nbatchsize = 3");
        let err = RunConfig::from_toml(&bad, Path::new("bad.toml")).unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
        assert!(err.to_string().contains("bad.toml"));
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg = RunConfig::from_toml(FISH, Path::new("fish.toml")).unwrap();
        let again = RunConfig::from_toml(&cfg.to_toml(), Path::new("manifest.toml")).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn missing_asset_names_the_file() {
        let text = FISH.replace(
            r#"layers = [{ kind = "sprite", name = "fish" }]
feed = { from = 1"#,
            r#"layers = [{ kind = "image", path = "missing/fish.png" }]
feed = { from = 1"#,
        );
        let cfg = RunConfig::from_toml(&text, Path::new("cfg/fish.toml")).unwrap();
        let err = cfg.build_targets().unwrap_err();
        assert!(err.to_string().contains("missing/fish.png"), "{err}");
    }

    #[test]
    fn overrides() {
        let mut cfg = RunConfig::from_toml(FISH, Path::new("fish.toml")).unwrap();
        cfg.override_with(Some(9), Some(UpdateKind::Synchronous)).unwrap();
        assert_eq!(cfg.training.seed, 9);
        assert!(cfg.training.mode.is_synchronous());
        assert_eq!(cfg.lineage_config().unwrap().seed, 9);
    }

    #[test]
    fn feed_from_missing_target_rejected() {
        let bad = FISH.replace("from = 1", "from = 5");
        assert!(RunConfig::from_toml(&bad, Path::new("x.toml")).is_err());
    }
}
