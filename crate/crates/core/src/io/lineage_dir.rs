//! Grid snapshots and on-disk lineages.
//!
//! A snapshot is `NCAS`, version (u32), height, width, channels, boundary
//! (0 torus, 1 zero-padded), all u32 little-endian, then the cells as f32.
//! DNA vectors are stored as a one-row grid.
//!
//! A lineage directory holds `generations.csv` plus one DNA and one
//! phenotype snapshot per generation, and optionally PNG renders.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::binary::{put_f32s, Reader};
use super::image::save_grid_png;
use crate::analysis::mse;
use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid, GridShape, CHANNELS};
use crate::lineage::{DnaVector, LineageRecord};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"NCAS";
pub const SNAPSHOT_VERSION: u32 = 1;

pub fn encode_grid(grid: &Grid) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + grid.data().len() * 4);
    out.extend_from_slice(SNAPSHOT_MAGIC);
    for v in [
        SNAPSHOT_VERSION,
        grid.height() as u32,
        grid.width() as u32,
        CHANNELS as u32,
        match grid.boundary() {
            Boundary::Torus => 0,
            Boundary::ZeroPadded => 1,
        },
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    put_f32s(&mut out, grid.data());
    out
}

pub fn decode_grid(bytes: &[u8], path: &Path) -> Result<Grid> {
    let mut r = Reader::new(bytes, path);
    r.magic(SNAPSHOT_MAGIC)?;
    let version = r.u32()?;
    if version != SNAPSHOT_VERSION {
        return Err(r.fail(format!("unsupported snapshot version {version}")));
    }
    let (h, w, c) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
    if c != CHANNELS {
        return Err(r.fail(format!("snapshot has {c} channels, expected {CHANNELS}")));
    }
    let boundary = match r.u32()? {
        0 => Boundary::Torus,
        1 => Boundary::ZeroPadded,
        b => return Err(r.fail(format!("unknown boundary code {b}"))),
    };
    let shape = GridShape::new(h, w, boundary).map_err(|e| r.fail(e.to_string()))?;
    let data = r.f32s(shape.cells() * CHANNELS)?;
    r.finish()?;
    Grid::from_data(shape, data)
}

pub fn save_grid(grid: &Grid, path: impl AsRef<Path>) -> Result<()> {
    super::write_file(path.as_ref(), &encode_grid(grid))
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<Grid> {
    let path = path.as_ref();
    decode_grid(&super::read_file(path)?, path)
}

fn dna_grid(dna: &DnaVector) -> Result<Grid> {
    if dna.is_empty() || !dna.len().is_multiple_of(CHANNELS) {
        return Err(Error::invalid(format!("DNA length {} is not a whole number of cells", dna.len())));
    }
    Grid::from_data(GridShape::new(1, dna.len() / CHANNELS, Boundary::Torus)?, dna.0.clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GenerationRow {
    generation: usize,
    viable: bool,
    alive_cells: usize,
    /// DNA distance to the previous generation; empty for the founder.
    parent_dna_mse: Option<f64>,
}

fn name(generation: usize) -> String {
    format!("gen_{generation:05}")
}

/// Write `records` under `dir`. Renders are skipped when `upscale` is `None`.
pub fn save_lineage(records: &[LineageRecord], dir: impl AsRef<Path>, upscale: Option<u32>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let table = dir.join("generations.csv");
    let file = std::fs::File::create(&table).map_err(|e| Error::io(&table, e))?;
    let mut w = csv::Writer::from_writer(file);
    for (i, rec) in records.iter().enumerate() {
        let parent_dna_mse = (i > 0).then(|| mse(records[i - 1].dna.values(), rec.dna.values()));
        w.serialize(GenerationRow {
            generation: rec.generation,
            viable: rec.viable,
            alive_cells: rec.phenotype.alive_count(),
            parent_dna_mse,
        })?;
        let n = name(rec.generation);
        save_grid(&dna_grid(&rec.dna)?, dir.join("dna").join(format!("{n}.ncas")))?;
        save_grid(&rec.phenotype, dir.join("phenotype").join(format!("{n}.ncas")))?;
        if let Some(s) = upscale {
            save_grid_png(&rec.phenotype, dir.join("renders").join(format!("{n}.png")), s)?;
        }
    }
    w.flush().map_err(|e| Error::io(&table, e))
}

pub fn load_lineage(dir: impl AsRef<Path>) -> Result<Vec<LineageRecord>> {
    let dir = dir.as_ref();
    let table = dir.join("generations.csv");
    let mut reader = csv::Reader::from_path(&table).map_err(|e| Error::Format {
        path: table.clone(),
        reason: e.to_string(),
    })?;
    let mut records = Vec::new();
    for row in reader.deserialize::<GenerationRow>() {
        let row = row.map_err(|e| Error::Format {
            path: table.clone(),
            reason: e.to_string(),
        })?;
        let n = name(row.generation);
        let dna = load_grid(dir.join("dna").join(format!("{n}.ncas")))?;
        let phenotype = load_grid(dir.join("phenotype").join(format!("{n}.ncas")))?;
        records.push(LineageRecord {
            generation: row.generation,
            dna: DnaVector(dna.into_data()),
            phenotype,
            viable: row.viable,
        });
    }
    if records.is_empty() {
        return Err(Error::Format {
            path: table,
            reason: "no generations".into(),
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn random_grid(seed: u64) -> Grid {
        let mut rng = RngStream::new(seed);
        let shape = GridShape::new(6, 5, Boundary::ZeroPadded).unwrap();
        let data = (0..shape.cells() * CHANNELS).map(|_| rng.uniform_range(-1.0, 1.0) as f32).collect();
        Grid::from_data(shape, data).unwrap()
    }

    #[test]
    fn snapshot_round_trip() {
        let g = random_grid(1);
        let back = decode_grid(&encode_grid(&g), Path::new("g")).unwrap();
        assert_eq!(back.shape(), g.shape());
        assert_eq!(back.data(), g.data());
        let mut bytes = encode_grid(&g);
        bytes.pop();
        assert!(matches!(decode_grid(&bytes, Path::new("g")), Err(Error::Format { .. })));
    }

    #[test]
    fn lineage_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let records: Vec<LineageRecord> = (0..3)
            .map(|i| LineageRecord {
                generation: i,
                dna: DnaVector(vec![i as f32 * 0.1; 9 * CHANNELS]),
                phenotype: random_grid(i as u64),
                viable: i < 2,
            })
            .collect();
        save_lineage(&records, dir.path(), Some(2)).unwrap();
        assert!(dir.path().join("renders/gen_00002.png").exists());
        let back = load_lineage(dir.path()).unwrap();
        assert_eq!(back.len(), 3);
        for (a, b) in records.iter().zip(&back) {
            assert_eq!(a.dna, b.dna);
            assert_eq!(a.phenotype.data(), b.phenotype.data());
            assert_eq!(a.viable, b.viable);
        }
        let table = std::fs::read_to_string(dir.path().join("generations.csv")).unwrap();
        assert!(table.starts_with("generation,viable,alive_cells,parent_dna_mse\n0,true,"));
    }
}
