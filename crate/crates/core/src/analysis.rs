//! Drift statistics over a lineage: pairwise MSE between generations,
//! lag-averaged drift curves, exponential and linear fits, plateau detection
//! and genotype/phenotype coupling.
//!
//! All sums run in a fixed order so results do not depend on scheduling.

use crate::error::{Error, Result};
use crate::lineage::LineageRecord;

/// Strict upper triangle of ancestor x descendant MSE values.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftMatrix {
    n: usize,
    /// Row-major: (0,1), (0,2), .., (0,n-1), (1,2), ..
    entries: Vec<f64>,
}

impl DriftMatrix {
    pub fn from_entries(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n < 2 || entries.len() != n * (n - 1) / 2 {
            return Err(Error::invalid(format!(
                "{} entries do not form the upper triangle of a {n}x{n} matrix",
                entries.len()
            )));
        }
        Ok(Self { n, entries })
    }

    pub fn generations(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.n);
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }

    /// Symmetric lookup; the diagonal is zero.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Less => self.entries[self.offset(i, j)],
            std::cmp::Ordering::Greater => self.entries[self.offset(j, i)],
        }
    }

    /// `(i, j, mse)` for every stored pair, row by row.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| (i + 1..self.n).map(move |j| (i, j, self.get(i, j))))
    }

    /// Parent/child distances, `get(g, g + 1)` for each generation.
    pub fn parent_child(&self) -> Vec<f64> {
        (0..self.n - 1).map(|g| self.get(g, g + 1)).collect()
    }

    pub fn max(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }
}

pub fn mse(a: &[f32], b: &[f32]) -> f64 {
    let sum: f64 = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    sum / a.len() as f64
}

/// MSE between every pair of vectors.
pub fn pairwise_mse<V: AsRef<[f32]>>(vectors: &[V]) -> Result<DriftMatrix> {
    if vectors.len() < 2 {
        return Err(Error::invalid("need at least two vectors"));
    }
    let len = vectors[0].as_ref().len();
    if len == 0 {
        return Err(Error::invalid("vectors must not be empty"));
    }
    if let Some(bad) = vectors.iter().position(|v| v.as_ref().len() != len) {
        return Err(Error::invalid(format!(
            "vector {bad} has length {}, expected {len}",
            vectors[bad].as_ref().len()
        )));
    }
    let n = vectors.len();
    let mut entries = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            entries.push(mse(vectors[i].as_ref(), vectors[j].as_ref()));
        }
    }
    DriftMatrix::from_entries(n, entries)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftPoint {
    pub lag: usize,
    pub mean: f64,
    pub count: usize,
}

/// Mean distance between ancestors and their k-th descendants, for k = 1..n-1.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftCurve {
    pub points: Vec<DriftPoint>,
}

impl DriftCurve {
    pub fn lags(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.lag as f64).collect()
    }

    pub fn means(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mean).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points with `lag <= max_lag`.
    pub fn truncated(&self, max_lag: usize) -> DriftCurve {
        DriftCurve {
            points: self.points.iter().copied().filter(|p| p.lag <= max_lag).collect(),
        }
    }
}

/// Average each diagonal of the matrix.
pub fn drift_curve(matrix: &DriftMatrix) -> DriftCurve {
    let n = matrix.generations();
    let points = (1..n)
        .map(|lag| {
            let count = n - lag;
            let sum: f64 = (0..count).map(|i| matrix.get(i, i + lag)).sum();
            DriftPoint {
                lag,
                mean: sum / count as f64,
                count,
            }
        })
        .collect();
    DriftCurve { points }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    /// `a * exp(b * k)`
    Exponential,
    /// `a + b * k`
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: FitModel,
    pub a: f64,
    pub b: f64,
    /// Count-weighted R² in the original (not log) space, so both models compare directly.
    pub r_squared: f64,
    pub first_lag: usize,
    pub last_lag: usize,
    /// Lags left out of the fit (non-positive means for the log fit).
    pub excluded: Vec<usize>,
}

impl FitResult {
    pub fn predict(&self, lag: f64) -> f64 {
        match self.model {
            FitModel::Exponential => self.a * (self.b * lag).exp(),
            FitModel::Linear => self.a + self.b * lag,
        }
    }
}

/// Weighted least squares line through `(x, y)`; returns `(intercept, slope)`.
fn weighted_line(x: &[f64], y: &[f64], w: &[f64]) -> (f64, f64) {
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for i in 0..x.len() {
        sxy += w[i] * (x[i] - mx) * (y[i] - my);
        sxx += w[i] * (x[i] - mx) * (x[i] - mx);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - slope * mx, slope)
}

fn weighted_r_squared(y: &[f64], pred: &[f64], w: &[f64]) -> f64 {
    let sw: f64 = w.iter().sum();
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for i in 0..y.len() {
        ss_res += w[i] * (y[i] - pred[i]).powi(2);
        ss_tot += w[i] * (y[i] - my).powi(2);
    }
    let scale = y.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    if ss_tot > 1e-24 * scale {
        1.0 - ss_res / ss_tot
    } else if ss_res <= 1e-24 * scale {
        1.0
    } else {
        0.0
    }
}

/// Count-weighted exponential (log-linear) and linear fits over lags `1..=max_lag`.
pub fn fit_drift(curve: &DriftCurve, max_lag: Option<usize>) -> Result<(FitResult, FitResult)> {
    let pts: Vec<DriftPoint> = match max_lag {
        Some(m) => curve.truncated(m).points,
        None => curve.points.clone(),
    };
    if pts.len() < 3 {
        return Err(Error::invalid(format!(
            "need at least 3 points to fit, got {}",
            pts.len()
        )));
    }
    let x: Vec<f64> = pts.iter().map(|p| p.lag as f64).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.mean).collect();
    let w: Vec<f64> = pts.iter().map(|p| p.count as f64).collect();
    let (first_lag, last_lag) = (pts[0].lag, pts[pts.len() - 1].lag);

    let (la, lb) = weighted_line(&x, &y, &w);
    let lin_pred: Vec<f64> = x.iter().map(|k| la + lb * k).collect();
    let linear = FitResult {
        model: FitModel::Linear,
        a: la,
        b: lb,
        r_squared: weighted_r_squared(&y, &lin_pred, &w),
        first_lag,
        last_lag,
        excluded: Vec::new(),
    };

    let mut excluded = Vec::new();
    let (mut lx, mut ly, mut lw) = (Vec::new(), Vec::new(), Vec::new());
    for (i, p) in pts.iter().enumerate() {
        if p.mean > 0.0 && p.mean.is_finite() {
            lx.push(x[i]);
            ly.push(p.mean.ln());
            lw.push(w[i]);
        } else {
            excluded.push(p.lag);
        }
    }
    let exponential = if lx.len() >= 2 {
        let (ea, eb) = weighted_line(&lx, &ly, &lw);
        let a = ea.exp();
        let pred: Vec<f64> = x.iter().map(|k| a * (eb * k).exp()).collect();
        FitResult {
            model: FitModel::Exponential,
            a,
            b: eb,
            r_squared: weighted_r_squared(&y, &pred, &w),
            first_lag,
            last_lag,
            excluded,
        }
    } else {
        // Nothing positive to take a log of: a flat zero curve.
        let pred = vec![0.0; y.len()];
        FitResult {
            model: FitModel::Exponential,
            a: 0.0,
            b: 0.0,
            r_squared: weighted_r_squared(&y, &pred, &w),
            first_lag,
            last_lag,
            excluded,
        }
    };
    Ok((exponential, linear))
}

/// Plateau detector settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StallConfig {
    pub window: usize,
    /// Relative increase below which the curve counts as flat.
    pub threshold: f64,
}

impl Default for StallConfig {
    fn default() -> Self {
        Self {
            window: 10,
            threshold: 0.05,
        }
    }
}

/// First lag `k` at which the curve stops growing: the mean over the
/// `window` lags following `k..k+window` is at most `1 + threshold` times
/// the mean over `k..k+window`. `None` if the curve keeps rising.
pub fn detect_stall(curve: &DriftCurve, config: StallConfig) -> Option<usize> {
    let w = config.window.max(1);
    let y = curve.means();
    if y.len() < 2 * w {
        return None;
    }
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    (0..=y.len() - 2 * w)
        .find(|&i| mean(&y[i + w..i + 2 * w]) <= (1.0 + config.threshold) * mean(&y[i..i + w]))
        .map(|i| curve.points[i].lag)
}

pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Ranks starting at 1, ties get their average rank.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&ranks(x), &ranks(y))
}

/// Paired (DNA distance, phenotype distance) samples and their Pearson r.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlation {
    /// `None` when one of the series has zero variance.
    pub r: Option<f64>,
    pub pairs: Vec<(f64, f64)>,
}

/// Correlate DNA and phenotype distances over every ancestor/descendant pair.
pub fn genotype_phenotype_correlation(records: &[LineageRecord]) -> Result<Correlation> {
    if records.len() < 3 {
        return Err(Error::invalid(format!(
            "need at least 3 generations, got {}",
            records.len()
        )));
    }
    let dna: Vec<&[f32]> = records.iter().map(|r| r.dna.values()).collect();
    let pheno: Vec<&[f32]> = records.iter().map(|r| r.phenotype.data()).collect();
    correlate(&pairwise_mse(&dna)?, &pairwise_mse(&pheno)?)
}

pub fn correlate(dna: &DriftMatrix, phenotype: &DriftMatrix) -> Result<Correlation> {
    if dna.generations() != phenotype.generations() {
        return Err(Error::invalid("DNA and phenotype matrices differ in size"));
    }
    let pairs: Vec<(f64, f64)> = dna
        .entries()
        .iter()
        .copied()
        .zip(phenotype.entries().iter().copied())
        .collect();
    let (x, y): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    Ok(Correlation {
        r: pearson(&x, &y),
        pairs,
    })
}

/// Everything computed for one lineage.
#[derive(Debug, Clone)]
pub struct LineageAnalysis {
    pub dna: DriftMatrix,
    pub phenotype: DriftMatrix,
    pub dna_curve: DriftCurve,
    pub phenotype_curve: DriftCurve,
    pub stall: Option<usize>,
    /// Fits of the DNA curve up to the stall (or the full range).
    pub exponential: Option<FitResult>,
    pub linear: Option<FitResult>,
    /// Spearman correlation of lag and mean DNA distance over the fit range.
    pub monotonicity: Option<f64>,
    pub correlation: Correlation,
    pub max_dna_mse: f64,
    pub max_phenotype_mse: f64,
}

impl LineageAnalysis {
    pub fn fit_range(&self) -> usize {
        self.stall.unwrap_or(self.dna_curve.len())
    }
}

pub fn analyze_lineage(records: &[LineageRecord], stall: StallConfig) -> Result<LineageAnalysis> {
    let dna_vecs: Vec<&[f32]> = records.iter().map(|r| r.dna.values()).collect();
    let pheno_vecs: Vec<&[f32]> = records.iter().map(|r| r.phenotype.data()).collect();
    analyze_vectors(&dna_vecs, &pheno_vecs, stall)
}

pub fn analyze_vectors<V: AsRef<[f32]>, P: AsRef<[f32]>>(
    dna: &[V],
    phenotype: &[P],
    stall_config: StallConfig,
) -> Result<LineageAnalysis> {
    if dna.len() < 3 {
        return Err(Error::invalid(format!(
            "need at least 3 generations, got {}",
            dna.len()
        )));
    }
    let dna_m = pairwise_mse(dna)?;
    let pheno_m = pairwise_mse(phenotype)?;
    let dna_curve = drift_curve(&dna_m);
    let phenotype_curve = drift_curve(&pheno_m);
    let stall = detect_stall(&dna_curve, stall_config);
    let range = stall.unwrap_or(dna_curve.len());
    let fits = fit_drift(&dna_curve, Some(range)).ok();
    let fitted = dna_curve.truncated(range);
    let monotonicity = spearman(&fitted.lags(), &fitted.means());
    let correlation = correlate(&dna_m, &pheno_m)?;
    Ok(LineageAnalysis {
        max_dna_mse: dna_m.max(),
        max_phenotype_mse: pheno_m.max(),
        dna: dna_m,
        phenotype: pheno_m,
        dna_curve,
        phenotype_curve,
        stall,
        exponential: fits.as_ref().map(|f| f.0.clone()),
        linear: fits.map(|f| f.1),
        monotonicity,
        correlation,
    })
}
