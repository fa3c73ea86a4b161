//! Multi-generation runs: seed an egg, grow it, let the adult divide, take the
//! first offspring and start again on a blank grid.
//!
//! Offspring choice never looks at the phenotype; the only inputs are the
//! extraction order and, for whole-organism division, a seeded coin flip.

use serde::{Deserialize, Serialize};

use crate::components::{alive_components, Component};
use crate::dynamics::{rollout, UpdateMode, DEFAULT_ROLLOUT_STEPS};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridShape, ALIVE_THRESHOLD, ALPHA, CHANNELS};
use crate::network::UpdateNetwork;
use crate::rng::RngStream;

pub const DEFAULT_EGG_SIDE: usize = 3;
/// Hidden channel that carries the species marker in multi-species eggs.
pub const SPECIES_CHANNEL: usize = 4;
/// Smallest alive component considered an organism when isolating offspring.
pub const MIN_ORGANISM_CELLS: usize = 4;

/// Where eggs live on the grid. Positions are top-left corners `(row, col)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EggGeometry {
    pub side: usize,
    /// Where a transplanted egg is written.
    pub canonical: (usize, usize),
    /// Where a dividing adult is expected to leave its egg.
    pub division: (usize, usize),
}

impl EggGeometry {
    /// Egg centered on the grid; the laid egg is expected at `division`.
    pub fn centered(shape: GridShape, side: usize, division: (usize, usize)) -> Self {
        Self {
            side,
            canonical: (
                (shape.height - side.min(shape.height)) / 2,
                (shape.width - side.min(shape.width)) / 2,
            ),
            division,
        }
    }

    pub fn validate(&self, shape: GridShape) -> Result<()> {
        if self.side == 0 {
            return Err(Error::invalid("egg side must be at least 1"));
        }
        for (name, (r, c)) in [("canonical", self.canonical), ("division", self.division)] {
            if r + self.side > shape.height || c + self.side > shape.width {
                return Err(Error::invalid(format!(
                    "{name} egg region at ({r}, {c}) with side {} leaves the {}x{} grid",
                    self.side, shape.height, shape.width
                )));
            }
        }
        Ok(())
    }

    pub fn dna_len(&self) -> usize {
        CHANNELS * self.side * self.side
    }
}

/// The full state of every cell of an egg, row-major, 16 values per cell.
/// In whole-organism mode it holds the complete transplanted grid instead.
#[derive(Debug, Clone, PartialEq)]
pub struct DnaVector(pub Vec<f32>);

impl DnaVector {
    /// Black, opaque, hidden channels zero.
    pub fn default_egg(side: usize) -> Self {
        Self::uniform_egg(side, |cell| cell[ALPHA] = 1.0)
    }

    /// Default egg with the species channel set to `marker` (±1 for two species).
    pub fn species_egg(side: usize, marker: f32) -> Self {
        Self::uniform_egg(side, |cell| {
            cell[ALPHA] = 1.0;
            cell[SPECIES_CHANNEL] = marker.clamp(-1.0, 1.0);
        })
    }

    /// Default egg whose hidden channels hold a fixed random payload shared by every cell.
    pub fn random_payload_egg(side: usize, seed: u64) -> Self {
        let mut rng = RngStream::new(seed);
        let payload: Vec<f32> = (ALPHA + 1..CHANNELS)
            .map(|_| rng.uniform_range(-1.0, 1.0) as f32)
            .collect();
        Self::uniform_egg(side, |cell| {
            cell[ALPHA] = 1.0;
            cell[ALPHA + 1..].copy_from_slice(&payload);
        })
    }

    fn uniform_egg(side: usize, fill: impl Fn(&mut [f32])) -> Self {
        let mut v = vec![0.0f32; CHANNELS * side * side];
        for cell in v.chunks_exact_mut(CHANNELS) {
            fill(cell);
        }
        DnaVector(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }
}

/// Blank grid with an egg at the canonical position.
pub fn make_egg_seed(shape: GridShape, geometry: &EggGeometry, dna: Option<&DnaVector>) -> Result<Grid> {
    geometry.validate(shape)?;
    let default;
    let dna = match dna {
        Some(d) => d,
        None => {
            default = DnaVector::default_egg(geometry.side);
            &default
        }
    };
    let mut g = Grid::blank(shape);
    write_egg(&mut g, geometry.canonical, geometry.side, dna)?;
    Ok(g)
}

fn write_egg(grid: &mut Grid, (row, col): (usize, usize), side: usize, dna: &DnaVector) -> Result<()> {
    if dna.len() != CHANNELS * side * side {
        return Err(Error::invalid(format!(
            "DNA has {} values, a {side}x{side} egg needs {}",
            dna.len(),
            CHANNELS * side * side
        )));
    }
    if dna.0.iter().any(|v| !(v.is_finite() && (-1.0..=1.0).contains(v))) {
        return Err(Error::invalid("DNA values must lie in [-1, 1]"));
    }
    for (k, cell) in dna.0.chunks_exact(CHANNELS).enumerate() {
        let (r, c) = (row + k / side, col + k % side);
        grid.cell_mut(r, c).copy_from_slice(cell);
    }
    Ok(())
}

/// Read the `side x side` region at `(row, col)`.
pub fn read_egg(grid: &Grid, (row, col): (usize, usize), side: usize) -> DnaVector {
    let shape = grid.shape();
    let mut v = Vec::with_capacity(CHANNELS * side * side);
    for r in 0..side {
        for c in 0..side {
            let idx = shape
                .resolve((row + r) as isize, (col + c) as isize)
                .expect("egg region inside grid");
            v.extend_from_slice(grid.cell_at(idx));
        }
    }
    DnaVector(v)
}

/// Several identical eggs at the given top-left positions.
pub fn make_seed_cloud(
    shape: GridShape,
    positions: &[(usize, usize)],
    side: usize,
    dna: Option<&DnaVector>,
) -> Result<Grid> {
    if side == 0 {
        return Err(Error::invalid("egg side must be at least 1"));
    }
    for &(r, c) in positions {
        if r + side > shape.height || c + side > shape.width {
            return Err(Error::invalid(format!("seed at ({r}, {c}) leaves the grid")));
        }
    }
    let cyclic = |a: usize, b: usize, n: usize| {
        let d = a.abs_diff(b);
        match shape.boundary {
            crate::grid::Boundary::Torus => d.min(n - d),
            crate::grid::Boundary::ZeroPadded => d,
        }
    };
    for (i, &(r1, c1)) in positions.iter().enumerate() {
        for &(r2, c2) in &positions[i + 1..] {
            if cyclic(r1, r2, shape.height) < side && cyclic(c1, c2, shape.width) < side {
                return Err(Error::invalid(format!(
                    "seeds at ({r1}, {c1}) and ({r2}, {c2}) overlap"
                )));
            }
        }
    }
    let default = DnaVector::default_egg(side);
    let dna = dna.unwrap_or(&default);
    let mut g = Grid::blank(shape);
    for &pos in positions {
        write_egg(&mut g, pos, side, dna)?;
    }
    Ok(g)
}

/// Fresh grid with `dna` written at the canonical egg position.
pub fn transplant(dna: &DnaVector, shape: GridShape, geometry: &EggGeometry) -> Result<Grid> {
    make_egg_seed(shape, geometry, Some(dna))
}

fn region_alpha_mean(grid: &Grid, (row, col): (usize, usize), side: usize) -> f64 {
    let dna = read_egg(grid, (row, col), side);
    let sum: f64 = dna.0.chunks_exact(CHANNELS).map(|c| c[ALPHA] as f64).sum();
    sum / (side * side) as f64
}

fn intersects(comp: &Component, grid: &Grid, (row, col): (usize, usize), side: usize) -> bool {
    comp.cells.iter().any(|&i| {
        let (r, c) = (i / grid.width(), i % grid.width());
        (row..row + side).contains(&r) && (col..col + side).contains(&c)
    })
}

/// DNA of the first egg laid after a division, or `None` (extinction).
///
/// Reads the expected division region first. If that region is not alive on
/// average, falls back to the egg-sized alive component whose bounding box is
/// closest to the egg side, ignoring anything still sitting on the canonical
/// egg region; ties go to the first component in scan order.
pub fn extract_first_egg(grid: &Grid, geometry: &EggGeometry) -> Option<DnaVector> {
    let side = geometry.side;
    if region_alpha_mean(grid, geometry.division, side) > ALIVE_THRESHOLD {
        return Some(read_egg(grid, geometry.division, side));
    }
    let max_extent = 2 * side;
    let best = alive_components(grid)
        .into_iter()
        .filter(|comp| comp.bbox.height <= max_extent && comp.bbox.width <= max_extent)
        .filter(|comp| !intersects(comp, grid, geometry.canonical, side))
        .min_by_key(|comp| comp.bbox.height.abs_diff(side) + comp.bbox.width.abs_diff(side))?;
    // min_by_key keeps the first of equal keys, i.e. scan order.
    let (cr, cc) = best.bbox.center();
    let half = (side as f64 - 1.0) / 2.0;
    let top = (cr - half).round() as isize;
    let left = (cc - half).round() as isize;
    let shape = grid.shape();
    let origin = shape.resolve(top, left)?;
    let (row, col) = (origin / shape.width, origin % shape.width);
    let dna = read_egg_wrapping(grid, (row, col), side)?;
    let alpha: f64 = dna.0.chunks_exact(CHANNELS).map(|c| c[ALPHA] as f64).sum::<f64>()
        / (side * side) as f64;
    (alpha > ALIVE_THRESHOLD).then_some(dna)
}

fn read_egg_wrapping(grid: &Grid, (row, col): (usize, usize), side: usize) -> Option<DnaVector> {
    let shape = grid.shape();
    let mut v = Vec::with_capacity(CHANNELS * side * side);
    for r in 0..side {
        for c in 0..side {
            let idx = shape.resolve((row + r) as isize, (col + c) as isize)?;
            v.extend_from_slice(grid.cell_at(idx));
        }
    }
    Some(DnaVector(v))
}

/// Pick one of the (up to) two largest alive components with a seeded coin
/// flip between top and bottom, and move it onto a blank grid so its bounding
/// box is centered on `center`. The copied window is the bounding box plus a
/// one-cell margin, so low-alpha cells around the organism come along; alive
/// cells of other organisms inside that window do not.
pub fn isolate_offspring(grid: &Grid, center: (f64, f64), rng: &mut RngStream) -> Option<Grid> {
    let mut comps: Vec<Component> = alive_components(grid)
        .into_iter()
        .filter(|c| c.size() >= MIN_ORGANISM_CELLS)
        .collect();
    if comps.is_empty() {
        return None;
    }
    // stable: equal sizes keep scan order
    comps.sort_by_key(|c| std::cmp::Reverse(c.size()));
    comps.truncate(2);
    comps.sort_by(|a, b| a.centroid().0.total_cmp(&b.centroid().0));
    let pick = if comps.len() == 2 { rng.below(2) as usize } else { 0 };
    Some(place_component(grid, &comps[pick], center))
}

fn place_component(grid: &Grid, comp: &Component, center: (f64, f64)) -> Grid {
    let shape = grid.shape();
    let (br, bc) = comp.bbox.center();
    let dr = (center.0 - br).round() as isize;
    let dc = (center.1 - bc).round() as isize;
    let own: std::collections::HashSet<usize> = comp.cells.iter().copied().collect();
    let mut out = Grid::blank(shape);
    // bounding box plus a one-cell margin, leaving out other organisms' alive cells
    let b = comp.bbox;
    for r in b.top - 1..=b.top + b.height as isize {
        for c in b.left - 1..=b.left + b.width as isize {
            let Some(src) = shape.resolve(r, c) else { continue };
            if grid.is_alive_at(src) && !own.contains(&src) {
                continue;
            }
            if let Some(dst) = shape.resolve(r + dr, c + dc) {
                out.cell_at_mut(dst).copy_from_slice(grid.cell_at(src));
            }
        }
    }
    out
}

/// How a generation's offspring is taken from the post-division grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OffspringRule {
    /// Lay-an-egg organisms: the DNA is the first egg.
    Egg { geometry: EggGeometry },
    /// Whole-organism division: one of two daughters, chosen by coin flip,
    /// transplanted so its bounding box is centered at `center`.
    Organism { center: (f64, f64) },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineageConfig {
    pub shape: GridShape,
    pub offspring: OffspringRule,
    pub growth_steps: usize,
    pub division_steps: usize,
    pub n_generations: usize,
    pub mode: UpdateMode,
    pub seed: u64,
}

impl LineageConfig {
    pub fn egg(shape: GridShape, geometry: EggGeometry, mode: UpdateMode, seed: u64) -> Self {
        Self {
            shape,
            offspring: OffspringRule::Egg { geometry },
            growth_steps: DEFAULT_ROLLOUT_STEPS,
            division_steps: DEFAULT_ROLLOUT_STEPS,
            n_generations: 100,
            mode,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.mode.validate()?;
        if let OffspringRule::Egg { geometry } = &self.offspring {
            geometry.validate(self.shape)?;
        }
        Ok(())
    }

    /// The grid a DNA vector starts its life on.
    pub fn seed_grid(&self, dna: &DnaVector) -> Result<Grid> {
        match &self.offspring {
            OffspringRule::Egg { geometry } => transplant(dna, self.shape, geometry),
            OffspringRule::Organism { .. } => Grid::from_data(self.shape, dna.0.clone()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LineageRecord {
    pub generation: usize,
    pub dna: DnaVector,
    /// Adult grid (all channels) after the growth phase.
    pub phenotype: Grid,
    /// False when this generation failed to produce offspring; it is then the last record.
    pub viable: bool,
}

#[derive(Debug, Clone)]
pub struct Generation {
    pub adult: Grid,
    pub divided: Grid,
    /// `None` is extinction.
    pub offspring: Option<DnaVector>,
}

/// Grow `dna` to an adult, let it divide and extract the first offspring.
pub fn run_generation(
    net: &UpdateNetwork,
    dna: &DnaVector,
    config: &LineageConfig,
    rng: &mut RngStream,
) -> Result<Generation> {
    let adult = grow(net, dna, config, rng)?;
    let (divided, offspring) = divide(net, &adult, config, rng);
    Ok(Generation {
        adult,
        divided,
        offspring,
    })
}

fn grow(net: &UpdateNetwork, dna: &DnaVector, config: &LineageConfig, rng: &mut RngStream) -> Result<Grid> {
    let seed = config.seed_grid(dna)?;
    Ok(rollout(&seed, net, config.growth_steps, &config.mode, rng))
}

fn divide(
    net: &UpdateNetwork,
    adult: &Grid,
    config: &LineageConfig,
    rng: &mut RngStream,
) -> (Grid, Option<DnaVector>) {
    let divided = rollout(adult, net, config.division_steps, &config.mode, rng);
    let offspring = match &config.offspring {
        OffspringRule::Egg { geometry } => extract_first_egg(&divided, geometry),
        OffspringRule::Organism { center } => {
            isolate_offspring(&divided, *center, rng).map(|g| DnaVector(g.into_data()))
        }
    };
    (divided, offspring)
}

/// Iterate generations from `dna0`, always continuing from the first offspring.
///
/// Returns at most `n_generations + 1` records (the founder plus one per
/// generation); fewer exactly when a generation went extinct.
pub fn run_lineage(net: &UpdateNetwork, dna0: &DnaVector, config: &LineageConfig) -> Result<Vec<LineageRecord>> {
    config.validate()?;
    let mut rng = RngStream::with_stream(config.seed, 0x4c49_4e45);
    let mut records = Vec::with_capacity(config.n_generations + 1);
    let mut dna = dna0.clone();
    for generation in 0..=config.n_generations {
        let adult = grow(net, &dna, config, &mut rng)?;
        if generation == config.n_generations {
            records.push(LineageRecord {
                generation,
                dna,
                phenotype: adult,
                viable: true,
            });
            break;
        }
        let (_, offspring) = divide(net, &adult, config, &mut rng);
        let viable = offspring.is_some();
        records.push(LineageRecord {
            generation,
            dna,
            phenotype: adult,
            viable,
        });
        match offspring {
            Some(next) => dna = next,
            None => break,
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;

    fn shape() -> GridShape {
        GridShape::new(20, 20, Boundary::Torus).unwrap()
    }

    fn geometry() -> EggGeometry {
        EggGeometry {
            side: 3,
            canonical: (9, 9),
            division: (9, 15),
        }
    }

    #[test]
    fn default_egg_is_black_opaque_clump() {
        let g = make_egg_seed(shape(), &geometry(), None).unwrap();
        assert_eq!(g.alive_count(), 9);
        for r in 9..12 {
            for c in 9..12 {
                let cell = g.cell(r, c);
                assert_eq!(&cell[..3], &[0.0; 3]);
                assert_eq!(cell[ALPHA], 1.0);
                assert!(cell[4..].iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn species_marker_goes_to_one_hidden_channel() {
        let a = make_egg_seed(shape(), &geometry(), Some(&DnaVector::species_egg(3, 1.0))).unwrap();
        let b = make_egg_seed(shape(), &geometry(), Some(&DnaVector::species_egg(3, -1.0))).unwrap();
        assert_eq!(a.cell(10, 10)[SPECIES_CHANNEL], 1.0);
        assert_eq!(b.cell(10, 10)[SPECIES_CHANNEL], -1.0);
        assert_eq!(a.cell(10, 10)[ALPHA], 1.0);
    }

    #[test]
    fn wrong_dna_length_rejected() {
        let bad = DnaVector(vec![0.5; 10]);
        assert!(matches!(
            make_egg_seed(shape(), &geometry(), Some(&bad)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn transplant_round_trip_is_exact() {
        let mut rng = RngStream::new(3);
        let dna = DnaVector((0..geometry().dna_len()).map(|_| rng.uniform_range(-1.0, 1.0) as f32).collect());
        let g = transplant(&dna, shape(), &geometry()).unwrap();
        assert_eq!(read_egg(&g, geometry().canonical, 3), dna);
    }

    #[test]
    fn transplant_of_default_matches_seed() {
        let a = transplant(&DnaVector::default_egg(3), shape(), &geometry()).unwrap();
        let b = make_egg_seed(shape(), &geometry(), None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn seed_cloud_rules() {
        let one = make_seed_cloud(shape(), &[(9, 9)], 3, None).unwrap();
        assert_eq!(one, make_egg_seed(shape(), &geometry(), None).unwrap());
        let two = make_seed_cloud(shape(), &[(2, 2), (12, 12)], 3, None).unwrap();
        assert_eq!(two.alive_count(), 18);
        assert_eq!(two.cell(2, 2), two.cell(12, 12));
        assert!(make_seed_cloud(shape(), &[(4, 4), (4, 4)], 3, None).is_err());
        assert!(make_seed_cloud(shape(), &[(4, 4), (5, 6)], 3, None).is_err());
        // overlap across the torus seam
        assert!(make_seed_cloud(shape(), &[(0, 0), (18, 0)], 3, None).is_err());
    }

    #[test]
    fn extraction_reads_division_region() {
        let geo = geometry();
        let mut g = Grid::blank(shape());
        let dna = DnaVector::species_egg(3, 0.5);
        write_egg(&mut g, geo.division, 3, &dna).unwrap();
        assert_eq!(extract_first_egg(&g, &geo), Some(dna));
    }

    #[test]
    fn extraction_of_dead_grid_is_none() {
        assert_eq!(extract_first_egg(&Grid::blank(shape()), &geometry()), None);
    }

    #[test]
    fn extraction_ignores_adult_sized_blob() {
        let mut g = Grid::blank(shape());
        for r in 2..10 {
            for c in 1..9 {
                g.cell_mut(r, c)[ALPHA] = 1.0;
            }
        }
        assert_eq!(extract_first_egg(&g, &geometry()), None);
    }

    #[test]
    fn extraction_falls_back_to_displaced_egg() {
        let geo = geometry();
        let mut g = Grid::blank(shape());
        let dna = DnaVector::species_egg(3, -0.25);
        write_egg(&mut g, (2, 3), 3, &dna).unwrap();
        assert_eq!(extract_first_egg(&g, &geo), Some(dna));
    }

    #[test]
    fn extraction_ignores_egg_left_on_canonical_spot() {
        let g = make_egg_seed(shape(), &geometry(), None).unwrap();
        assert_eq!(extract_first_egg(&g, &geometry()), None);
    }

    #[test]
    fn isolation_picks_one_of_two_daughters() {
        let mut g = Grid::blank(shape());
        for r in 1..5 {
            for c in 8..12 {
                g.cell_mut(r, c)[ALPHA] = 0.5;
                g.cell_mut(r + 10, c)[ALPHA] = 0.9;
            }
        }
        let mut seen = [false; 2];
        for seed in 0..20 {
            let iso = isolate_offspring(&g, (10.0, 10.0), &mut RngStream::new(seed)).unwrap();
            assert_eq!(iso.alive_count(), 16);
            assert!(iso.cell(10, 10)[ALPHA] > 0.0);
            let a = iso.cell(10, 10)[ALPHA];
            seen[(a > 0.7) as usize] = true;
        }
        assert!(seen[0] && seen[1]);
        assert!(isolate_offspring(&Grid::blank(shape()), (10.0, 10.0), &mut RngStream::new(0)).is_none());
    }

    #[test]
    fn isolation_keeps_the_margin_but_not_the_sibling() {
        let mut g = Grid::blank(shape());
        for c in 4..8 {
            g.cell_mut(5, c)[ALPHA] = 0.9;
            g.cell_mut(7, c)[ALPHA] = 0.8;
        }
        // faint halo cell next to the upper organism, inside both margins
        g.cell_mut(6, 4)[5] = 0.3;
        g.cell_mut(6, 4)[ALPHA] = 0.05;
        for seed in 0..10 {
            let iso = isolate_offspring(&g, (10.0, 10.0), &mut RngStream::new(seed)).unwrap();
            assert_eq!(iso.alive_count(), 4);
            let halo = iso.data().chunks_exact(CHANNELS).filter(|c| c[5] == 0.3).count();
            assert_eq!(halo, 1);
        }
    }

    #[test]
    fn zero_network_goes_extinct() {
        let net = UpdateNetwork::zeros(4).unwrap();
        let cfg = LineageConfig {
            growth_steps: 3,
            division_steps: 3,
            n_generations: 5,
            ..LineageConfig::egg(shape(), geometry(), UpdateMode::default(), 1)
        };
        let gen = run_generation(&net, &DnaVector::default_egg(3), &cfg, &mut RngStream::new(0)).unwrap();
        assert!(gen.offspring.is_none());
        let recs = run_lineage(&net, &DnaVector::default_egg(3), &cfg).unwrap();
        assert_eq!(recs.len(), 1);
        assert!(!recs[0].viable);
    }

    #[test]
    fn zero_generations_is_founder_only() {
        let net = UpdateNetwork::zeros(4).unwrap();
        let cfg = LineageConfig {
            growth_steps: 2,
            n_generations: 0,
            ..LineageConfig::egg(shape(), geometry(), UpdateMode::default(), 1)
        };
        let recs = run_lineage(&net, &DnaVector::default_egg(3), &cfg).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].generation, 0);
        assert!(recs[0].viable);
    }

    #[test]
    fn low_alpha_dna_cell_dies_on_first_step() {
        let mut dna = DnaVector::default_egg(3);
        dna.0[ALPHA] = 0.05;
        dna.0[7] = 0.4;
        let g = transplant(&dna, shape(), &geometry()).unwrap();
        let net = UpdateNetwork::zeros(4).unwrap();
        let next = crate::dynamics::step(&g, &net, &UpdateMode::synchronous(), &mut RngStream::new(0));
        assert!(next.cell(9, 9).iter().all(|&v| v == 0.0));
        assert_eq!(next.alive_count(), 8);
    }
}
