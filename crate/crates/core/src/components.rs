//! Connected-component labeling of alive cells (8-connectivity, wrapping on a torus).

use std::collections::VecDeque;

use crate::grid::Grid;
use crate::real::Real;

/// Axis-aligned box in unwrapped coordinates; `top`/`left` may be negative
/// for components that cross a torus seam.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundingBox {
    pub top: isize,
    pub left: isize,
    pub height: usize,
    pub width: usize,
}

impl BoundingBox {
    pub fn center(&self) -> (f64, f64) {
        (
            self.top as f64 + (self.height as f64 - 1.0) / 2.0,
            self.left as f64 + (self.width as f64 - 1.0) / 2.0,
        )
    }
}

#[derive(Debug, Clone)]
pub struct Component {
    /// Flat indices, in discovery order starting from the first cell in scan order.
    pub cells: Vec<usize>,
    /// Unwrapped `(row, col)` of each entry of `cells`.
    pub coords: Vec<(isize, isize)>,
    pub bbox: BoundingBox,
}

impl Component {
    pub fn size(&self) -> usize {
        self.cells.len()
    }

    pub fn centroid(&self) -> (f64, f64) {
        let n = self.coords.len() as f64;
        let (sr, sc) = self
            .coords
            .iter()
            .fold((0.0, 0.0), |(a, b), &(r, c)| (a + r as f64, b + c as f64));
        (sr / n, sc / n)
    }
}

/// Components of alive cells, ordered by their first cell in row-major scan order.
pub fn alive_components<T: Real>(grid: &Grid<T>) -> Vec<Component> {
    let shape = grid.shape();
    let (h, w) = (shape.height as isize, shape.width as isize);
    let n = shape.cells();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();

    for start in 0..n {
        if seen[start] || !grid.is_alive_at(start) {
            continue;
        }
        seen[start] = true;
        let origin = ((start / shape.width) as isize, (start % shape.width) as isize);
        queue.push_back((start, origin));
        let mut cells = Vec::new();
        let mut coords = Vec::new();
        while let Some((idx, (r, c))) = queue.pop_front() {
            cells.push(idx);
            coords.push((r, c));
            for dr in -1..=1isize {
                for dc in -1..=1isize {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    let (ur, uc) = (r + dr, c + dc);
                    let Some(j) = shape.resolve(ur, uc) else { continue };
                    if seen[j] || !grid.is_alive_at(j) {
                        continue;
                    }
                    seen[j] = true;
                    queue.push_back((j, (ur, uc)));
                }
            }
        }
        let (mut top, mut left, mut bottom, mut right) = (isize::MAX, isize::MAX, isize::MIN, isize::MIN);
        for &(r, c) in &coords {
            top = top.min(r);
            left = left.min(c);
            bottom = bottom.max(r);
            right = right.max(c);
        }
        let bbox = BoundingBox {
            top,
            left,
            height: ((bottom - top + 1) as usize).min(h as usize),
            width: ((right - left + 1) as usize).min(w as usize),
        };
        out.push(Component { cells, coords, bbox });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Boundary, ALPHA};

    fn grid_from(rows: &[&str], boundary: Boundary) -> Grid {
        let mut g = Grid::new(rows.len(), rows[0].len(), boundary).unwrap();
        for (r, line) in rows.iter().enumerate() {
            for (c, ch) in line.chars().enumerate() {
                if ch == '#' {
                    g.cell_mut(r, c)[ALPHA] = 1.0;
                }
            }
        }
        g
    }

    #[test]
    fn separates_disjoint_blobs() {
        let g = grid_from(
            &["##....", "##....", "......", "....#.", ".....#"],
            Boundary::ZeroPadded,
        );
        let comps = alive_components(&g);
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].size(), 4);
        assert_eq!(comps[1].size(), 2, "diagonal neighbors join");
        assert_eq!(
            comps[0].bbox,
            BoundingBox {
                top: 0,
                left: 0,
                height: 2,
                width: 2
            }
        );
    }

    #[test]
    fn wraps_on_torus() {
        let rows = ["#....#", "......", "......", "#....#"];
        assert_eq!(alive_components(&grid_from(&rows, Boundary::Torus)).len(), 1);
        assert_eq!(alive_components(&grid_from(&rows, Boundary::ZeroPadded)).len(), 4);
        let c = &alive_components(&grid_from(&rows, Boundary::Torus))[0];
        assert_eq!((c.bbox.height, c.bbox.width), (2, 2));
    }

    #[test]
    fn dead_grid_has_no_components() {
        let g = Grid::<f32>::new(4, 4, Boundary::Torus).unwrap();
        assert!(alive_components(&g).is_empty());
    }
}
