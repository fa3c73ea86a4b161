//! Procedurally drawn stand-in sprites: a round bacterium, a striped fish
//! and a lizard. All are square RGBA images with premultiplied alpha.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::training::TargetImage;

pub const DEFAULT_SPRITE_SIDE: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Builtin {
    Bacterium,
    Fish,
    Lizard,
}

impl Builtin {
    pub const ALL: [Builtin; 3] = [Builtin::Bacterium, Builtin::Fish, Builtin::Lizard];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Bacterium => "bacterium",
            Builtin::Fish => "fish",
            Builtin::Lizard => "lizard",
        }
    }

    pub fn draw(self, side: usize) -> Result<TargetImage> {
        if side < 4 {
            return Err(Error::invalid(format!("sprite side {side} is too small")));
        }
        Ok(match self {
            Builtin::Bacterium => bacterium(side),
            Builtin::Fish => fish(side),
            Builtin::Lizard => lizard(side),
        })
    }
}

impl std::str::FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown sprite {s:?}")))
    }
}

const SUBSAMPLES: usize = 4;

/// Rasterize `shade`, which maps a point in [-1, 1]² (x right, y down) to a
/// straight RGB colour or `None` outside the shape.
fn paint(side: usize, shade: impl Fn(f64, f64) -> Option<[f64; 3]>) -> TargetImage {
    let mut img = TargetImage::blank(side, side);
    let n = (SUBSAMPLES * SUBSAMPLES) as f64;
    for row in 0..side {
        for col in 0..side {
            let mut acc = [0.0f64; 4];
            for sy in 0..SUBSAMPLES {
                for sx in 0..SUBSAMPLES {
                    let x = ((col * SUBSAMPLES + sx) as f64 + 0.5) / (side * SUBSAMPLES) as f64 * 2.0 - 1.0;
                    let y = ((row * SUBSAMPLES + sy) as f64 + 0.5) / (side * SUBSAMPLES) as f64 * 2.0 - 1.0;
                    if let Some(rgb) = shade(x, y) {
                        acc[0] += rgb[0];
                        acc[1] += rgb[1];
                        acc[2] += rgb[2];
                        acc[3] += 1.0;
                    }
                }
            }
            img.set_pixel(row, col, acc.map(|v| (v / n) as f32));
        }
    }
    img
}

fn ellipse(x: f64, y: f64, cx: f64, cy: f64, rx: f64, ry: f64) -> f64 {
    ((x - cx) / rx).powi(2) + ((y - cy) / ry).powi(2)
}

fn rgb(hex: u32) -> [f64; 3] {
    [
        ((hex >> 16) & 0xff) as f64 / 255.0,
        ((hex >> 8) & 0xff) as f64 / 255.0,
        (hex & 0xff) as f64 / 255.0,
    ]
}

/// Green rounded cell with a darker rim and two inclusions.
pub fn bacterium(side: usize) -> TargetImage {
    paint(side, |x, y| {
        let d = ellipse(x, y, 0.0, 0.0, 0.92, 0.6);
        if d > 1.0 {
            return None;
        }
        if d > 0.62 {
            return Some(rgb(0x2e7d32));
        }
        if ellipse(x, y, -0.35, -0.1, 0.16, 0.14) < 1.0 || ellipse(x, y, 0.3, 0.12, 0.2, 0.15) < 1.0 {
            return Some(rgb(0x1b5e20));
        }
        Some(rgb(0x8bc34a))
    })
}

/// Orange fish facing right with three black stripes, a tail fin and an eye.
pub fn fish(side: usize) -> TargetImage {
    paint(side, |x, y| {
        let body = ellipse(x, y, 0.12, 0.0, 0.72, 0.5) <= 1.0;
        let tail = x < -0.48 && x > -0.92 && y.abs() < (-0.48 - x) * 1.1;
        if !body && !tail {
            return None;
        }
        if body && ellipse(x, y, 0.55, -0.12, 0.08, 0.08) < 1.0 {
            return Some([0.0, 0.0, 0.0]);
        }
        if body && [-0.3, 0.0, 0.3].iter().any(|&s| (x - s).abs() < 0.09) {
            return Some(rgb(0x111111));
        }
        Some(if tail { rgb(0xe65100) } else { rgb(0xff9800) })
    })
}

/// Green lizard seen from above: body, head, four legs and a curled tail.
pub fn lizard(side: usize) -> TargetImage {
    paint(side, |x, y| {
        let body = ellipse(x, y, 0.0, 0.05, 0.3, 0.48) <= 1.0;
        let head = ellipse(x, y, 0.0, -0.58, 0.22, 0.24) <= 1.0;
        let leg = |lx: f64, ly: f64| {
            let (dx, dy) = (x - lx, y - ly);
            dx.abs() < 0.34 && (dy - dx * 0.6 * lx.signum()).abs() < 0.1
        };
        let legs = leg(0.2, -0.25) || leg(-0.2, -0.25) || leg(0.2, 0.35) || leg(-0.2, 0.35);
        let t = (y - 0.45) / 0.5;
        let tail = (0.0..=1.0).contains(&t) && (x - 0.25 * (t * 3.0).sin()).abs() < 0.14 * (1.0 - t) + 0.05;
        if !(body || head || legs || tail) {
            return None;
        }
        if head && (ellipse(x, y, 0.08, -0.6, 0.04, 0.04) < 1.0 || ellipse(x, y, -0.08, -0.6, 0.04, 0.04) < 1.0) {
            return Some([0.0, 0.0, 0.0]);
        }
        if body && ((y * 10.0).round() as i64) % 3 == 0 && x.abs() < 0.08 {
            return Some(rgb(0x33691e));
        }
        Some(rgb(0x7cb342))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sprites_are_premultiplied_and_bounded() {
        for b in Builtin::ALL {
            let img = b.draw(DEFAULT_SPRITE_SIDE).unwrap();
            assert_eq!((img.height(), img.width()), (24, 24));
            let mut opaque = 0;
            for px in img.data().chunks_exact(4) {
                assert!((0.0..=1.0).contains(&px[3]));
                assert!(px[..3].iter().all(|&c| c >= 0.0 && c <= px[3] + 1e-6), "{b:?}");
                if px[3] > 0.99 {
                    opaque += 1;
                }
            }
            assert!(opaque > 60, "{b:?} has only {opaque} opaque pixels");
            // Corners stay empty so the sprite reads as an isolated shape.
            assert_eq!(img.pixel(0, 0)[3], 0.0);
            assert_eq!(img.pixel(23, 23)[3], 0.0);
        }
    }

    #[test]
    fn fish_has_dark_stripes() {
        let img = fish(24);
        let row = 12;
        let dark = (0..24)
            .filter(|&c| {
                let p = img.pixel(row, c);
                p[3] > 0.9 && p[0] < 0.2
            })
            .count();
        assert!(dark >= 3);
    }

    pub(crate) fn ascii(img: &TargetImage) -> String {
        let mut s = String::new();
        for r in 0..img.height() {
            for c in 0..img.width() {
                let p = img.pixel(r, c);
                s.push(if p[3] < 0.1 { '.' } else if p[0] + p[1] + p[2] < 0.6 * p[3] { '#' } else { 'o' });
            }
            s.push('\n');
        }
        s
    }

    #[test]
    #[ignore]
    fn preview() {
        for b in Builtin::ALL {
            println!("{}", ascii(&b.draw(24).unwrap()));
        }
    }

    #[test]
    fn names_round_trip() {
        for b in Builtin::ALL {
            assert_eq!(b.name().parse::<Builtin>().unwrap(), b);
        }
        assert!("whale".parse::<Builtin>().is_err());
    }
}
