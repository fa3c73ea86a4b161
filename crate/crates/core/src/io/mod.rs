//! Files in and out: checkpoints, grid snapshots, PNG targets and renders,
//! CSV tables and lineage directories.

mod binary;
pub mod checkpoint;
pub mod image;
pub mod lineage_dir;
pub mod tables;

pub use checkpoint::{load_checkpoint, load_checkpoint_for, save_checkpoint, CheckpointMeta};
pub use image::{
    load_png, load_target_image, place_on_canvas, render_frames, render_grid, render_heatmap, save_grid_png,
    save_target_png,
};
pub use lineage_dir::{load_grid, load_lineage, save_grid, save_lineage};
pub use tables::{
    fit_report, write_correlation_csv, write_drift_curve_csv, write_drift_matrix_csv, write_loss_csv,
};

use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}
