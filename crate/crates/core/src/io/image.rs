//! PNG targets in, cell renders and heatmaps out.

use std::path::{Path, PathBuf};

use image::{ImageBuffer, Rgb, RgbImage, Rgba, RgbaImage};

use crate::analysis::DriftMatrix;
use crate::error::{Error, Result};
use crate::grid::{Grid, ALPHA};
use crate::training::TargetImage;

fn image_error(path: &Path, source: image::ImageError) -> Error {
    Error::Image {
        path: path.to_path_buf(),
        source,
    }
}

/// Read a PNG as premultiplied RGBA in [0, 1].
pub fn load_png(path: impl AsRef<Path>) -> Result<TargetImage> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        ));
    }
    let img = image::open(path).map_err(|e| image_error(path, e))?.to_rgba8();
    let (w, h) = img.dimensions();
    let mut data = Vec::with_capacity((w * h * 4) as usize);
    for px in img.pixels() {
        let a = px[3] as f32 / 255.0;
        data.extend([px[0], px[1], px[2]].map(|c| c as f32 / 255.0 * a));
        data.push(a);
    }
    TargetImage::from_data(h as usize, w as usize, data)
}

/// Paste `img` on a transparent `height` x `width` canvas, centered unless
/// `offset` gives the top-left corner.
pub fn place_on_canvas(img: &TargetImage, height: usize, width: usize, offset: Option<(isize, isize)>) -> Result<TargetImage> {
    if img.height() > height || img.width() > width {
        return Err(Error::invalid(format!(
            "image is {}x{} but the grid is only {height}x{width}",
            img.height(),
            img.width()
        )));
    }
    let (top, left) = offset.unwrap_or((
        ((height - img.height()) / 2) as isize,
        ((width - img.width()) / 2) as isize,
    ));
    let mut canvas = TargetImage::blank(height, width);
    canvas.composite(img, top, left);
    Ok(canvas)
}

/// Load a PNG target onto a grid-sized canvas.
pub fn load_target_image(
    path: impl AsRef<Path>,
    height: usize,
    width: usize,
    offset: Option<(isize, isize)>,
) -> Result<TargetImage> {
    let path = path.as_ref();
    let img = load_png(path)?;
    place_on_canvas(&img, height, width, offset)
        .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
}

/// Write a target as a straight-alpha PNG.
pub fn save_target_png(img: &TargetImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = RgbaImage::new(img.width() as u32, img.height() as u32);
    for row in 0..img.height() {
        for col in 0..img.width() {
            let [r, g, b, a] = img.pixel(row, col);
            let straight = |c: f32| if a > 0.0 { (c / a).clamp(0.0, 1.0) } else { 0.0 };
            let q = |v: f32| (v * 255.0).round() as u8;
            out.put_pixel(
                col as u32,
                row as u32,
                Rgba([q(straight(r)), q(straight(g)), q(straight(b)), q(a.clamp(0.0, 1.0))]),
            );
        }
    }
    ensure_parent(path)?;
    out.save(path).map_err(|e| image_error(path, e))
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    Ok(())
}

/// One pixel per cell (times `upscale`), colours composited over white.
/// Dead cells are white.
pub fn render_grid(grid: &Grid, upscale: u32) -> RgbImage {
    let s = upscale.max(1);
    let mut img: RgbImage = ImageBuffer::from_pixel(grid.width() as u32 * s, grid.height() as u32 * s, Rgb([255; 3]));
    for row in 0..grid.height() {
        for col in 0..grid.width() {
            let cell = grid.cell(row, col);
            if !grid.is_alive_at(grid.index(row, col)) {
                continue;
            }
            let a = cell[ALPHA].clamp(0.0, 1.0);
            let px = Rgb([0, 1, 2].map(|c| ((1.0 - a + cell[c].clamp(0.0, 1.0)).clamp(0.0, 1.0) * 255.0).round() as u8));
            for dy in 0..s {
                for dx in 0..s {
                    img.put_pixel(col as u32 * s + dx, row as u32 * s + dy, px);
                }
            }
        }
    }
    img
}

pub fn save_grid_png(grid: &Grid, path: impl AsRef<Path>, upscale: u32) -> Result<()> {
    let path = path.as_ref();
    ensure_parent(path)?;
    render_grid(grid, upscale).save(path).map_err(|e| image_error(path, e))
}

/// Write `<prefix>_00000.png`, `<prefix>_00001.png`, .. into `out_dir`.
pub fn render_frames(grids: &[Grid], out_dir: impl AsRef<Path>, prefix: &str, upscale: u32) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    grids
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let p = dir.join(format!("{prefix}_{i:05}.png"));
            save_grid_png(g, &p, upscale).map(|_| p)
        })
        .collect()
}

/// Five-stop dark-blue to yellow ramp.
fn ramp(t: f64) -> Rgb<u8> {
    const STOPS: [[f64; 3]; 5] = [
        [68.0, 1.0, 84.0],
        [59.0, 82.0, 139.0],
        [33.0, 145.0, 140.0],
        [94.0, 201.0, 98.0],
        [253.0, 231.0, 37.0],
    ];
    let x = t.clamp(0.0, 1.0) * 4.0;
    let i = (x.floor() as usize).min(3);
    let f = x - i as f64;
    Rgb([0, 1, 2].map(|c| (STOPS[i][c] * (1.0 - f) + STOPS[i + 1][c] * f).round() as u8))
}

/// Heatmap of a drift matrix: row = ancestor, column = descendant, so each
/// diagonal is one lag. Colour scale runs from 0 to the largest entry.
pub fn render_heatmap(matrix: &DriftMatrix, path: impl AsRef<Path>, upscale: u32) -> Result<()> {
    let path = path.as_ref();
    let n = matrix.generations() as u32;
    let s = upscale.max(1);
    let max = matrix.max();
    let img = ImageBuffer::from_fn(n * s, n * s, |x, y| {
        let v = matrix.get((y / s) as usize, (x / s) as usize);
        ramp(if max > 0.0 { v / max } else { 0.0 })
    });
    ensure_parent(path)?;
    img.save(path).map_err(|e| image_error(path, e))
}
