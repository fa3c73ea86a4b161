//! The cellular lattice: 16-channel cell states, aliveness and neighborhoods.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Channels per cell. 0..3 are RGBA, the rest hidden.
pub const CHANNELS: usize = 16;
pub const ALPHA: usize = 3;
/// A cell is alive when its alpha is strictly greater than this.
pub const ALIVE_THRESHOLD: f64 = 0.1;

/// Alive test done in the value's own precision, so an f32 alpha of exactly 0.1 is dead.
#[inline]
pub fn alpha_alive<T: Real>(alpha: T) -> bool {
    alpha > T::from_f64(ALIVE_THRESHOLD)
}
/// Cells in a radius-1 Moore neighborhood.
pub const NEIGHBORHOOD: usize = 9;
/// Values the update rule sees per cell.
pub const PERCEPTION: usize = NEIGHBORHOOD * CHANNELS;
/// Default ratio between grid side and target sprite side.
pub const DEFAULT_SIZE_MULTIPLIER: f64 = 2.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Indices wrap modulo height/width.
    #[default]
    Torus,
    /// Out-of-range neighbors read as dead zero cells.
    ZeroPadded,
}

/// One cell's state vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellState<T = f32>(pub [T; CHANNELS]);

impl<T: Real> CellState<T> {
    pub fn zero() -> Self {
        CellState([T::zero(); CHANNELS])
    }

    pub fn alpha(&self) -> T {
        self.0[ALPHA]
    }

    pub fn is_alive(&self) -> bool {
        alpha_alive(self.alpha())
    }
}

/// Which cells a step zeroes after the update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResetRule {
    /// Every cell at or below the alpha threshold.
    #[default]
    Cell,
    /// Cells with no alive cell in their 3x3 window, before or after the
    /// update. Low-alpha cells bordering an organism keep their state.
    Neighborhood,
}

/// Height, width and boundary of a lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridShape {
    pub height: usize,
    pub width: usize,
    #[serde(default)]
    pub boundary: Boundary,
}

impl GridShape {
    pub fn new(height: usize, width: usize, boundary: Boundary) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid(format!(
                "grid dimensions must be positive, got {height}x{width}"
            )));
        }
        Ok(Self {
            height,
            width,
            boundary,
        })
    }

    /// Square torus sized `ceil(multiplier * target_side)`.
    pub fn for_target(target_side: usize, multiplier: f64) -> Result<Self> {
        if target_side == 0 || !(multiplier > 0.0) {
            return Err(Error::invalid("target side and multiplier must be positive"));
        }
        let side = (multiplier * target_side as f64).ceil() as usize;
        Self::new(side, side, Boundary::Torus)
    }

    pub fn cells(&self) -> usize {
        self.height * self.width
    }

    /// Resolve a possibly out-of-range coordinate. `None` means a padded zero cell.
    #[inline]
    pub fn resolve(&self, row: isize, col: isize) -> Option<usize> {
        let (h, w) = (self.height as isize, self.width as isize);
        match self.boundary {
            Boundary::Torus => {
                let r = row.rem_euclid(h) as usize;
                let c = col.rem_euclid(w) as usize;
                Some(r * self.width + c)
            }
            Boundary::ZeroPadded => {
                if row < 0 || col < 0 || row >= h || col >= w {
                    None
                } else {
                    Some(row as usize * self.width + col as usize)
                }
            }
        }
    }

    /// Flat indices of the 3x3 window around `index`, row-major.
    #[inline]
    pub fn window(&self, index: usize) -> [Option<usize>; NEIGHBORHOOD] {
        let r = (index / self.width) as isize;
        let c = (index % self.width) as isize;
        let mut out = [None; NEIGHBORHOOD];
        let mut k = 0;
        for dr in -1..=1 {
            for dc in -1..=1 {
                out[k] = self.resolve(r + dr, c + dc);
                k += 1;
            }
        }
        out
    }
}

/// The NCA world: `height x width` cells of [`CHANNELS`] values, channel-last.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T = f32> {
    shape: GridShape,
    data: Vec<T>,
}

impl<T: Real> Grid<T> {
    /// All-dead grid.
    pub fn new(height: usize, width: usize, boundary: Boundary) -> Result<Self> {
        Ok(Self::blank(GridShape::new(height, width, boundary)?))
    }

    pub fn blank(shape: GridShape) -> Self {
        Self {
            shape,
            data: vec![T::zero(); shape.cells() * CHANNELS],
        }
    }

    pub fn from_data(shape: GridShape, data: Vec<T>) -> Result<Self> {
        if data.len() != shape.cells() * CHANNELS {
            return Err(Error::Dimension(format!(
                "expected {} values for a {}x{} grid, got {}",
                shape.cells() * CHANNELS,
                shape.height,
                shape.width,
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn height(&self) -> usize {
        self.shape.height
    }

    pub fn width(&self) -> usize {
        self.shape.width
    }

    pub fn boundary(&self) -> Boundary {
        self.shape.boundary
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.shape.width + col
    }

    #[inline]
    pub fn cell(&self, row: usize, col: usize) -> &[T] {
        self.cell_at(self.index(row, col))
    }

    #[inline]
    pub fn cell_mut(&mut self, row: usize, col: usize) -> &mut [T] {
        let i = self.index(row, col);
        self.cell_at_mut(i)
    }

    #[inline]
    pub fn cell_at(&self, index: usize) -> &[T] {
        &self.data[index * CHANNELS..(index + 1) * CHANNELS]
    }

    #[inline]
    pub fn cell_at_mut(&mut self, index: usize) -> &mut [T] {
        &mut self.data[index * CHANNELS..(index + 1) * CHANNELS]
    }

    pub fn cell_state(&self, row: usize, col: usize) -> CellState<T> {
        let mut s = [T::zero(); CHANNELS];
        s.copy_from_slice(self.cell(row, col));
        CellState(s)
    }

    pub fn set_cell(&mut self, row: usize, col: usize, state: &CellState<T>) {
        self.cell_mut(row, col).copy_from_slice(&state.0);
    }

    #[inline]
    pub fn alpha_at(&self, index: usize) -> T {
        self.data[index * CHANNELS + ALPHA]
    }

    #[inline]
    pub fn is_alive_at(&self, index: usize) -> bool {
        alpha_alive(self.alpha_at(index))
    }

    pub fn alive_count(&self) -> usize {
        (0..self.shape.cells()).filter(|&i| self.is_alive_at(i)).count()
    }

    pub fn is_dead(&self) -> bool {
        self.alive_count() == 0
    }

    /// Cells whose 3x3 neighborhood holds at least one alive cell.
    pub fn updatable_mask(&self) -> UpdateMask {
        let n = self.shape.cells();
        let alive: Vec<bool> = (0..n).map(|i| self.is_alive_at(i)).collect();
        let mut bits = vec![false; n];
        // Dilate the alive set by one cell; cheaper than probing every window.
        for (i, _) in alive.iter().enumerate().filter(|(_, &a)| a) {
            for j in self.shape.window(i).into_iter().flatten() {
                bits[j] = true;
            }
        }
        UpdateMask {
            height: self.shape.height,
            width: self.shape.width,
            bits,
        }
    }

    /// Zero every cell whose alpha is at or below the aliveness threshold.
    pub fn reset_dead(&mut self) {
        for cell in self.data.chunks_exact_mut(CHANNELS) {
            if !alpha_alive(cell[ALPHA]) {
                cell.fill(T::zero());
            }
        }
    }

    /// Cells that keep their state after a step from `before` to `self`.
    ///
    /// Zeroing never changes which cells are above the threshold, so this is
    /// the same whether `self` has been reset yet or not.
    pub fn survivors(&self, before: &Grid<T>, rule: ResetRule) -> Vec<bool> {
        match rule {
            ResetRule::Cell => (0..self.shape.cells()).map(|i| self.is_alive_at(i)).collect(),
            ResetRule::Neighborhood => {
                let pre = before.updatable_mask();
                let post = self.updatable_mask();
                pre.bits().iter().zip(post.bits()).map(|(&a, &b)| a && b).collect()
            }
        }
    }

    /// Zero the cells a step from `before` does not keep.
    pub fn reset_after_step(&mut self, before: &Grid<T>, rule: ResetRule) {
        if rule == ResetRule::Cell {
            self.reset_dead();
            return;
        }
        let keep = self.survivors(before, rule);
        for (cell, k) in self.data.chunks_exact_mut(CHANNELS).zip(keep) {
            if !k {
                cell.fill(T::zero());
            }
        }
    }

    pub fn with_dead_reset(mut self) -> Self {
        self.reset_dead();
        self
    }

    /// Row-major 3x3 window around `(row, col)`.
    pub fn neighborhood(&self, row: usize, col: usize) -> Result<[CellState<T>; NEIGHBORHOOD]> {
        if row >= self.height() || col >= self.width() {
            return Err(Error::invalid(format!(
                "cell ({row}, {col}) outside {}x{} grid",
                self.height(),
                self.width()
            )));
        }
        let mut out = [CellState::zero(); NEIGHBORHOOD];
        for (slot, idx) in out.iter_mut().zip(self.shape.window(self.index(row, col))) {
            if let Some(j) = idx {
                slot.0.copy_from_slice(self.cell_at(j));
            }
        }
        Ok(out)
    }

    /// Write the flattened neighborhood of `index` into `out` (length [`PERCEPTION`]).
    #[inline]
    pub fn gather_neighborhood(&self, index: usize, out: &mut [T]) {
        for (k, idx) in self.shape.window(index).into_iter().enumerate() {
            let dst = &mut out[k * CHANNELS..(k + 1) * CHANNELS];
            match idx {
                Some(j) => dst.copy_from_slice(self.cell_at(j)),
                None => dst.fill(T::zero()),
            }
        }
    }

    /// Torus roll: the cell at `(r, c)` moves to `(r + dr, c + dc)`.
    pub fn shifted(&self, dr: isize, dc: isize) -> Self {
        let (h, w) = (self.height() as isize, self.width() as isize);
        let mut out = Self::blank(self.shape);
        for r in 0..h {
            for c in 0..w {
                let nr = (r + dr).rem_euclid(h) as usize;
                let nc = (c + dc).rem_euclid(w) as usize;
                out.cell_mut(nr, nc)
                    .copy_from_slice(self.cell(r as usize, c as usize));
            }
        }
        out
    }

    pub fn cast<U: Real>(&self) -> Grid<U> {
        Grid {
            shape: self.shape,
            data: self.data.iter().map(|&v| U::from_f64(v.to_f64())).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// True when every value lies in `[-1, 1]`.
    pub fn within_bounds(&self) -> bool {
        self.data
            .iter()
            .all(|&v| v >= -T::one() && v <= T::one())
    }

    /// True when every dead cell is exactly zero.
    pub fn dead_cells_zeroed(&self) -> bool {
        self.data
            .chunks_exact(CHANNELS)
            .filter(|c| !alpha_alive(c[ALPHA]))
            .all(|c| c.iter().all(|&v| v == T::zero()))
    }
}

/// Cells eligible for an update this step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpdateMask {
    pub height: usize,
    pub width: usize,
    bits: Vec<bool>,
}

impl UpdateMask {
    pub fn empty(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            bits: vec![false; height * width],
        }
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn get_index(&self, index: usize) -> bool {
        self.bits[index]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub(crate) fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    pub fn set_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
    }
}
