//! CSV tables and the plain-text fit report. Numbers use Rust's own
//! formatting, which always writes a dot as the decimal separator.

use std::fmt::Write as _;
use std::path::Path;

use crate::analysis::{Correlation, DriftCurve, DriftMatrix, FitResult, LineageAnalysis};
use crate::error::{Error, Result};
use crate::training::LossRecord;

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn finish(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// `training_step,target_index,mean_loss,loss_0,..`
pub fn write_loss_csv(history: &[LossRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    let width = history.iter().map(|r| r.losses.len()).max().unwrap_or(0);
    let mut header = vec!["training_step".to_string(), "target_index".into(), "mean_loss".into()];
    header.extend((0..width).map(|i| format!("loss_{i}")));
    w.write_record(&header)?;
    for r in history {
        let mut row = vec![r.training_step.to_string(), r.target_index.to_string(), r.mean().to_string()];
        row.extend(r.losses.iter().map(f64::to_string));
        row.resize(header.len(), String::new());
        w.write_record(&row)?;
    }
    finish(w, path)
}

/// `row,col,mse` for every ancestor/descendant pair.
pub fn write_drift_matrix_csv(matrix: &DriftMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(["row", "col", "mse"])?;
    for (i, j, v) in matrix.iter() {
        w.write_record([i.to_string(), j.to_string(), v.to_string()])?;
    }
    finish(w, path)
}

/// `lag,mean,count`
pub fn write_drift_curve_csv(curve: &DriftCurve, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(["lag", "mean", "count"])?;
    for p in &curve.points {
        w.write_record([p.lag.to_string(), p.mean.to_string(), p.count.to_string()])?;
    }
    finish(w, path)
}

/// `dna_mse,phenotype_mse`
pub fn write_correlation_csv(corr: &Correlation, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(["dna_mse", "phenotype_mse"])?;
    for (d, p) in &corr.pairs {
        w.write_record([d.to_string(), p.to_string()])?;
    }
    finish(w, path)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".into(), |x| x.to_string())
}

fn fit_lines(out: &mut String, name: &str, fit: Option<&FitResult>) {
    match fit {
        Some(f) => {
            let _ = writeln!(out, "{name}.a = {}", f.a);
            let _ = writeln!(out, "{name}.b = {}", f.b);
            let _ = writeln!(out, "{name}.r_squared = {}", f.r_squared);
            let _ = writeln!(out, "{name}.lags = {}..={}", f.first_lag, f.last_lag);
            let excluded: Vec<String> = f.excluded.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "{name}.excluded_lags = [{}]", excluded.join(", "));
        }
        None => {
            let _ = writeln!(out, "{name} = none");
        }
    }
}

/// `key = value` summary of a lineage analysis.
pub fn fit_report(a: &LineageAnalysis) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "generations = {}", a.dna.generations());
    let _ = writeln!(out, "stall_lag = {}", a.stall.map_or_else(|| "none".into(), |k| k.to_string()));
    let _ = writeln!(out, "fit_range = 1..={}", a.fit_range());
    fit_lines(&mut out, "exponential", a.exponential.as_ref());
    fit_lines(&mut out, "linear", a.linear.as_ref());
    let better = match (&a.exponential, &a.linear) {
        (Some(e), Some(l)) if e.r_squared > l.r_squared => "exponential",
        (Some(_), Some(_)) => "linear",
        _ => "none",
    };
    let _ = writeln!(out, "better_fit = {better}");
    let _ = writeln!(out, "lag_spearman = {}", opt(a.monotonicity));
    let _ = writeln!(out, "genotype_phenotype_pearson = {}", opt(a.correlation.r));
    let _ = writeln!(out, "max_dna_mse = {}", a.max_dna_mse);
    let _ = writeln!(out, "max_phenotype_mse = {}", a.max_phenotype_mse);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{analyze_vectors, drift_curve, pairwise_mse, StallConfig};

    #[test]
    fn drift_tables_have_fixed_columns() {
        let dir = tempfile::tempdir().unwrap();
        let v: Vec<Vec<f32>> = (0..4).map(|i| vec![i as f32 * 0.5; 3]).collect();
        let m = pairwise_mse(&v).unwrap();
        write_drift_matrix_csv(&m, dir.path().join("m.csv")).unwrap();
        write_drift_curve_csv(&drift_curve(&m), dir.path().join("c.csv")).unwrap();
        let text = std::fs::read_to_string(dir.path().join("m.csv")).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "row,col,mse");
        assert_eq!(lines[1], "0,1,0.25");
        assert_eq!(lines.len(), 7);
        let text = std::fs::read_to_string(dir.path().join("c.csv")).unwrap();
        assert_eq!(text.lines().nth(3).unwrap(), "3,2.25,1");
    }

    #[test]
    fn loss_csv_rows() {
        let dir = tempfile::tempdir().unwrap();
        let h = vec![
            LossRecord { training_step: 0, target_index: 0, losses: vec![0.5, 1.5] },
            LossRecord { training_step: 1, target_index: 1, losses: vec![0.25, 0.25] },
        ];
        let p = dir.path().join("loss.csv");
        write_loss_csv(&h, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text, "training_step,target_index,mean_loss,loss_0,loss_1\n0,0,1,0.5,1.5\n1,1,0.25,0.25,0.25\n");
    }

    #[test]
    fn report_names_the_better_fit() {
        let dna: Vec<Vec<f32>> = (0..30).map(|i| vec![(0.05 * i as f32).exp(); 4]).collect();
        let pheno: Vec<Vec<f32>> = (0..30).map(|i| vec![i as f32; 2]).collect();
        let a = analyze_vectors(&dna, &pheno, StallConfig::default()).unwrap();
        let report = fit_report(&a);
        assert!(report.contains("generations = 30"));
        assert!(report.contains("better_fit = "));
        assert!(report.contains("genotype_phenotype_pearson = "));
    }
}
