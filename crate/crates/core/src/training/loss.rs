use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, CHANNELS};
use crate::real::Real;

/// Which color channels enter the loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossChannels {
    Rgb,
    #[default]
    Rgba,
}

impl LossChannels {
    pub fn count(self) -> usize {
        match self {
            LossChannels::Rgb => 3,
            LossChannels::Rgba => 4,
        }
    }
}

/// Grid-sized RGBA target with premultiplied alpha, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetImage {
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl TargetImage {
    pub fn blank(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![0.0; height * width * 4],
        }
    }

    pub fn from_data(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != height * width * 4 {
            return Err(Error::Dimension(format!(
                "target needs {} values, got {}",
                height * width * 4,
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn pixel(&self, row: usize, col: usize) -> [f32; 4] {
        let i = (row * self.width + col) * 4;
        [self.data[i], self.data[i + 1], self.data[i + 2], self.data[i + 3]]
    }

    pub fn set_pixel(&mut self, row: usize, col: usize, rgba: [f32; 4]) {
        let i = (row * self.width + col) * 4;
        self.data[i..i + 4].copy_from_slice(&rgba);
    }

    /// Paint `other` over `self` (premultiplied "over"), with `other`'s origin at `(row, col)`.
    pub fn composite(&mut self, other: &TargetImage, row: isize, col: isize) {
        for r in 0..other.height {
            for c in 0..other.width {
                let (tr, tc) = (row + r as isize, col + c as isize);
                if tr < 0 || tc < 0 || tr >= self.height as isize || tc >= self.width as isize {
                    continue;
                }
                let src = other.pixel(r, c);
                let dst = self.pixel(tr as usize, tc as usize);
                let k = 1.0 - src[3];
                let out = [
                    src[0] + dst[0] * k,
                    src[1] + dst[1] * k,
                    src[2] + dst[2] * k,
                    src[3] + dst[3] * k,
                ];
                self.set_pixel(tr as usize, tc as usize, out);
            }
        }
    }

    /// Cell states whose RGBA equals the image and whose hidden channels are zero.
    pub fn to_grid<T: Real>(&self, shape: crate::grid::GridShape) -> Result<Grid<T>> {
        if shape.height != self.height || shape.width != self.width {
            return Err(Error::Dimension(format!(
                "target is {}x{}, grid is {}x{}",
                self.height, self.width, shape.height, shape.width
            )));
        }
        let mut g = Grid::blank(shape);
        for (cell, px) in g.data_mut().chunks_exact_mut(CHANNELS).zip(self.data.chunks_exact(4)) {
            for ch in 0..4 {
                cell[ch] = T::from_f64(px[ch] as f64);
            }
        }
        Ok(g.with_dead_reset())
    }
}

fn check_dims<T: Real>(grid: &Grid<T>, target: &TargetImage) -> Result<()> {
    if grid.height() != target.height || grid.width() != target.width {
        return Err(Error::invalid(format!(
            "grid is {}x{} but target is {}x{}",
            grid.height(),
            grid.width(),
            target.height,
            target.width
        )));
    }
    Ok(())
}

/// Mean squared error between the grid's color channels and the target.
///
/// Grid color channels are compared directly: a dead cell reads as
/// transparent black, which is the premultiplied zero of the target space.
pub fn mse_loss<T: Real>(grid: &Grid<T>, target: &TargetImage, channels: LossChannels) -> Result<f64> {
    check_dims(grid, target)?;
    let k = channels.count();
    let mut sum = 0.0f64;
    for (cell, px) in grid.data().chunks_exact(CHANNELS).zip(target.data.chunks_exact(4)) {
        for ch in 0..k {
            let d = cell[ch].to_f64() - px[ch] as f64;
            sum += d * d;
        }
    }
    Ok(sum / (grid.shape().cells() * k) as f64)
}

/// Loss and its gradient with respect to every grid value, multiplied by `scale`.
pub fn mse_loss_grad<T: Real>(
    grid: &Grid<T>,
    target: &TargetImage,
    channels: LossChannels,
    scale: f64,
) -> Result<(f64, Vec<T>)> {
    check_dims(grid, target)?;
    let k = channels.count();
    let denom = (grid.shape().cells() * k) as f64;
    let mut grad = vec![T::zero(); grid.data().len()];
    let mut sum = 0.0f64;
    for ((cell, px), g) in grid
        .data()
        .chunks_exact(CHANNELS)
        .zip(target.data.chunks_exact(4))
        .zip(grad.chunks_exact_mut(CHANNELS))
    {
        for ch in 0..k {
            let d = cell[ch].to_f64() - px[ch] as f64;
            sum += d * d;
            g[ch] = T::from_f64(2.0 * d * scale / denom);
        }
    }
    Ok((sum / denom, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Boundary, GridShape};
    use crate::rng::RngStream;

    #[test]
    fn exact_match_has_zero_loss() {
        let shape = GridShape::new(3, 4, Boundary::Torus).unwrap();
        let mut t = TargetImage::blank(3, 4);
        t.set_pixel(1, 1, [0.2, 0.4, 0.1, 0.8]);
        let g: Grid<f32> = t.to_grid(shape).unwrap();
        assert_eq!(mse_loss(&g, &t, LossChannels::Rgba).unwrap(), 0.0);
    }

    #[test]
    fn zero_grid_against_ones_in_rgb() {
        let g = Grid::<f32>::new(2, 2, Boundary::Torus).unwrap();
        let t = TargetImage::from_data(2, 2, vec![1.0; 16]).unwrap();
        assert_eq!(mse_loss(&g, &t, LossChannels::Rgb).unwrap(), 1.0);
    }

    #[test]
    fn matches_elementwise_oracle() {
        let mut rng = RngStream::new(4);
        let (h, w) = (5, 7);
        let mut g = Grid::<f64>::new(h, w, Boundary::Torus).unwrap();
        for v in g.data_mut() {
            *v = rng.uniform_range(-1.0, 1.0);
        }
        let data: Vec<f32> = (0..h * w * 4).map(|_| rng.uniform() as f32).collect();
        let t = TargetImage::from_data(h, w, data).unwrap();
        for channels in [LossChannels::Rgb, LossChannels::Rgba] {
            let k = channels.count();
            let mut acc = 0.0;
            for r in 0..h {
                for c in 0..w {
                    for ch in 0..k {
                        let d = g.cell(r, c)[ch] - t.pixel(r, c)[ch] as f64;
                        acc += d * d;
                    }
                }
            }
            let want = acc / (h * w * k) as f64;
            let got = mse_loss(&g, &t, channels).unwrap();
            assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
            let (l2, _) = mse_loss_grad(&g, &t, channels, 1.0).unwrap();
            assert!((l2 - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let g = Grid::<f32>::new(2, 2, Boundary::Torus).unwrap();
        let t = TargetImage::blank(3, 2);
        assert!(matches!(
            mse_loss(&g, &t, LossChannels::Rgb),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn composite_over() {
        let mut base = TargetImage::blank(2, 2);
        base.set_pixel(0, 0, [0.0, 0.0, 1.0, 1.0]);
        let mut top = TargetImage::blank(1, 1);
        top.set_pixel(0, 0, [0.5, 0.0, 0.0, 0.5]);
        base.composite(&top, 0, 0);
        assert_eq!(base.pixel(0, 0), [0.5, 0.0, 0.5, 1.0]);
        base.composite(&top, 5, 5);
        assert_eq!(base.pixel(1, 1), [0.0; 4]);
    }
}
