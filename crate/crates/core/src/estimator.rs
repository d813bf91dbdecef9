//! Entry estimators: the variance-selected k-nearest-neighbor row
//! estimator, the three-point basic estimate, and the Gaussian-kernel
//! user-item weighted estimator.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::obsdata::{DenseMatrix, ObservationMatrix};
use crate::simstats::{anchor_stats, check_window, in_window, PairStats};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    UserUser,
    ItemItem,
    UserItemGaussian,
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "user-user" => Ok(Variant::UserUser),
            "item-item" => Ok(Variant::ItemItem),
            "user-item-gaussian" => Ok(Variant::UserItemGaussian),
            other => Err(Error::InvalidParameter(format!("unknown variant `{other}`"))),
        }
    }
}

/// Value used when no neighbor is available.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fallback {
    Zero,
    GlobalMean,
}

impl FromStr for Fallback {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Fallback::Zero),
            "global-mean" => Ok(Fallback::GlobalMean),
            other => Err(Error::InvalidParameter(format!("unknown fallback `{other}`"))),
        }
    }
}

impl Fallback {
    pub fn value(self, obs: &ObservationMatrix) -> f64 {
        match self {
            Fallback::Zero => 0.0,
            Fallback::GlobalMean => obs.mean().unwrap_or(0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub variant: Variant,
    pub k: usize,
    pub beta_low: usize,
    /// `None` means no upper overlap limit.
    pub beta_high: Option<usize>,
    /// Gaussian kernel bandwidth; only read by the user-item variant.
    pub lambda: f64,
    pub include_self: bool,
    pub fallback: Fallback,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            variant: Variant::UserUser,
            k: 1,
            beta_low: 2,
            beta_high: None,
            lambda: 0.0,
            include_self: false,
            fallback: Fallback::Zero,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        check_window(self.beta_low, self.beta_high)?;
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and non-negative, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Estimated,
    Fallback,
    ObservedPassthrough,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    MissingOnly,
    AllEntries,
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "missing-only" => Ok(Target::MissingOnly),
            "all-entries" => Ok(Target::AllEntries),
            other => Err(Error::InvalidParameter(format!("unknown target `{other}`"))),
        }
    }
}

/// Completed matrix with a provenance tag on every cell.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateMatrix {
    values: DenseMatrix,
    provenance: Vec<Provenance>,
}

impl EstimateMatrix {
    pub fn new(values: DenseMatrix, provenance: Vec<Provenance>) -> Result<Self> {
        if provenance.len() != values.nrows() * values.ncols() {
            return Err(Error::Dimension("provenance does not cover every cell".into()));
        }
        Ok(EstimateMatrix { values, provenance })
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DenseMatrix {
        &self.values
    }

    pub fn get(&self, u: usize, i: usize) -> f64 {
        self.values.get(u, i)
    }

    pub fn provenance(&self, u: usize, i: usize) -> Provenance {
        self.provenance[u * self.ncols() + i]
    }

    pub fn count(&self, which: Provenance) -> usize {
        self.provenance.iter().filter(|&&p| p == which).count()
    }

    pub fn transpose(&self) -> EstimateMatrix {
        let (m, n) = (self.nrows(), self.ncols());
        let provenance = (0..n)
            .flat_map(|i| (0..m).map(move |u| (u, i)))
            .map(|(u, i)| self.provenance(u, i))
            .collect();
        EstimateMatrix {
            values: self.values.transpose(),
            provenance,
        }
    }
}

fn observed(obs: &ObservationMatrix, which: &'static str, row: usize, col: usize) -> Result<f64> {
    obs.check_row(row)?;
    obs.check_col(col)?;
    obs.get(row, col).ok_or(Error::MissingEntry { which, row, col })
}

/// Three-point estimate `Z(u,j) + Z(v,i) - Z(v,j)` of entry `(u, i)`.
pub fn basic_estimate(obs: &ObservationMatrix, v: usize, j: usize, u: usize, i: usize) -> Result<f64> {
    let z_vj = observed(obs, "Z(v,j)", v, j)?;
    let z_uj = observed(obs, "Z(u,j)", u, j)?;
    let z_vi = observed(obs, "Z(v,i)", v, i)?;
    Ok(z_uj + z_vi - z_vj)
}

/// `exp(-lambda * min(row_var, col_var))`.
pub fn gaussian_weight(row_var: f64, col_var: f64, lambda: f64) -> f64 {
    (-lambda * row_var.min(col_var)).exp()
}

#[derive(Clone, Debug, PartialEq)]
pub struct KnnEstimate {
    pub value: f64,
    /// Selected rows in selection order (smallest variance first).
    pub neighbors: Vec<usize>,
    pub provenance: Provenance,
}

/// Core of the k-NN row estimator.
///
/// `stats(v)` yields the statistics of the pair `(u, v)` used both for the
/// overlap window and for the combination; the matrix path passes cached
/// anchor statistics, the tensor path recomputes them per target column.
pub(crate) fn knn_from_stats<S>(
    obs: &ObservationMatrix,
    u: usize,
    i: usize,
    cfg: &EstimatorConfig,
    fallback_value: f64,
    mut stats: S,
) -> KnnEstimate
where
    S: FnMut(usize) -> PairStats,
{
    // (variance, row, Z(v,i) + m_uv)
    let mut candidates: Vec<(f64, usize, f64)> = Vec::new();
    for &(v, z_vi) in obs.col(i) {
        if v == u {
            if cfg.include_self {
                candidates.push((0.0, v, z_vi));
            }
            continue;
        }
        let s = stats(v);
        if !in_window(s.overlap, cfg.beta_low, cfg.beta_high) {
            continue;
        }
        let var = s.sample_var.expect("window lower bound is at least 2");
        candidates.push((var, v, z_vi + s.mean_diff));
    }

    if candidates.is_empty() {
        return KnnEstimate {
            value: fallback_value,
            neighbors: Vec::new(),
            provenance: Provenance::Fallback,
        };
    }

    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    candidates.truncate(cfg.k);
    let sum: f64 = candidates.iter().map(|c| c.2).sum();
    KnnEstimate {
        value: sum / candidates.len() as f64,
        neighbors: candidates.iter().map(|c| c.1).collect(),
        provenance: Provenance::Estimated,
    }
}

/// k-nearest-neighbor estimate of entry `(u, i)`.
///
/// For the item-item variant the user-user rule runs on the transpose and
/// the returned neighbors are columns.
pub fn knn_estimate(obs: &ObservationMatrix, u: usize, i: usize, cfg: &EstimatorConfig) -> Result<KnnEstimate> {
    cfg.validate()?;
    obs.check_row(u)?;
    obs.check_col(i)?;
    match cfg.variant {
        Variant::UserUser => {
            let anchor = anchor_stats(obs, u);
            let fallback = cfg.fallback.value(obs);
            Ok(knn_from_stats(obs, u, i, cfg, fallback, |v| anchor[v]))
        }
        Variant::ItemItem => {
            let tr = obs.transpose();
            let anchor = anchor_stats(&tr, i);
            let fallback = cfg.fallback.value(&tr);
            Ok(knn_from_stats(&tr, i, u, cfg, fallback, |v| anchor[v]))
        }
        Variant::UserItemGaussian => Err(Error::InvalidParameter(
            "knn_estimate needs the user-user or item-item variant".into(),
        )),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedEstimate {
    pub value: f64,
    pub total_weight: f64,
    /// Number of `(v, j)` pairs that contributed.
    pub terms: usize,
    pub provenance: Provenance,
}

/// Eligible column variances of column `i` against every column, `NaN`
/// where the column overlap falls outside the window.
fn column_variances(tr: &ObservationMatrix, i: usize, cfg: &EstimatorConfig) -> Vec<f64> {
    anchor_stats(tr, i)
        .into_iter()
        .map(|s| {
            if in_window(s.overlap, cfg.beta_low, cfg.beta_high) {
                s.sample_var.unwrap_or(f64::NAN)
            } else {
                f64::NAN
            }
        })
        .collect()
}

fn weighted_from_stats(
    obs: &ObservationMatrix,
    u: usize,
    i: usize,
    cfg: &EstimatorConfig,
    fallback_value: f64,
    row_stats: &[PairStats],
    col_vars: &[f64],
) -> WeightedEstimate {
    let row_u = obs.row(u);
    let (mut num, mut den, mut terms) = (0.0, 0.0, 0usize);
    for &(v, z_vi) in obs.col(i) {
        if v == u && !cfg.include_self {
            continue;
        }
        let s = &row_stats[v];
        if !in_window(s.overlap, cfg.beta_low, cfg.beta_high) {
            continue;
        }
        let row_var = s.sample_var.expect("window lower bound is at least 2");
        let row_v = obs.row(v);
        let (mut x, mut y) = (0, 0);
        while x < row_u.len() && y < row_v.len() {
            let (j, z_uj) = row_u[x];
            let (jv, z_vj) = row_v[y];
            if j < jv {
                x += 1;
                continue;
            }
            if jv < j {
                y += 1;
                continue;
            }
            x += 1;
            y += 1;
            if j == i && !cfg.include_self {
                continue;
            }
            let col_var = col_vars[j];
            if col_var.is_nan() {
                continue;
            }
            let w = gaussian_weight(row_var, col_var, cfg.lambda);
            num += w * (z_uj + z_vi - z_vj);
            den += w;
            terms += 1;
        }
    }

    // A total weight that underflows to zero is treated like an empty set.
    if terms == 0 || den == 0.0 {
        return WeightedEstimate {
            value: fallback_value,
            total_weight: den,
            terms,
            provenance: Provenance::Fallback,
        };
    }
    WeightedEstimate {
        value: num / den,
        total_weight: den,
        terms,
        provenance: Provenance::Estimated,
    }
}

/// Gaussian-kernel weighted combination of basic estimates for `(u, i)`.
///
/// Enumerates every `(v, j)` with `(v,j)`, `(u,j)`, `(v,i)` observed and
/// both the row overlap `|O^{uv}|` and the column overlap `|O^{ij}|`
/// inside the beta window. `v = u` and `j = i` are skipped unless
/// `include_self` is set. Cost is O(sum over v observing i of |O^{uv}|).
pub fn weighted_estimate(
    obs: &ObservationMatrix,
    u: usize,
    i: usize,
    cfg: &EstimatorConfig,
) -> Result<WeightedEstimate> {
    cfg.validate()?;
    obs.check_row(u)?;
    obs.check_col(i)?;
    if cfg.variant != Variant::UserItemGaussian {
        return Err(Error::InvalidParameter(
            "weighted_estimate needs the user-item-gaussian variant".into(),
        ));
    }
    let row_stats = anchor_stats(obs, u);
    let col_vars = column_variances(&obs.transpose(), i, cfg);
    let fallback = cfg.fallback.value(obs);
    Ok(weighted_from_stats(obs, u, i, cfg, fallback, &row_stats, &col_vars))
}

fn assemble(m: usize, n: usize, rows: Vec<Vec<(f64, Provenance)>>) -> EstimateMatrix {
    let mut values = DenseMatrix::zeros(m, n);
    let mut provenance = Vec::with_capacity(m * n);
    for (u, row) in rows.into_iter().enumerate() {
        for (i, (value, prov)) in row.into_iter().enumerate() {
            values.set(u, i, value);
            provenance.push(prov);
        }
    }
    EstimateMatrix { values, provenance }
}

/// Estimates every target cell of `obs`.
///
/// Rows are processed in parallel on the current rayon pool; each cell is
/// computed sequentially from immutable inputs, so the output does not
/// depend on the number of workers.
pub fn complete_matrix(obs: &ObservationMatrix, cfg: &EstimatorConfig, target: Target) -> Result<EstimateMatrix> {
    cfg.validate()?;
    match cfg.variant {
        Variant::UserUser => Ok(complete_user_user(obs, cfg, target)),
        Variant::ItemItem => {
            let user_cfg = EstimatorConfig {
                variant: Variant::UserUser,
                ..cfg.clone()
            };
            Ok(complete_user_user(&obs.transpose(), &user_cfg, target).transpose())
        }
        Variant::UserItemGaussian => Ok(complete_gaussian(obs, cfg, target)),
    }
}

fn complete_user_user(obs: &ObservationMatrix, cfg: &EstimatorConfig, target: Target) -> EstimateMatrix {
    let (m, n) = (obs.nrows(), obs.ncols());
    let fallback = cfg.fallback.value(obs);
    let rows = (0..m)
        .into_par_iter()
        .map(|u| {
            let anchor = anchor_stats(obs, u);
            (0..n)
                .map(|i| match (target, obs.get(u, i)) {
                    (Target::MissingOnly, Some(z)) => (z, Provenance::ObservedPassthrough),
                    _ => {
                        let est = knn_from_stats(obs, u, i, cfg, fallback, |v| anchor[v]);
                        (est.value, est.provenance)
                    }
                })
                .collect()
        })
        .collect();
    assemble(m, n, rows)
}

fn complete_gaussian(obs: &ObservationMatrix, cfg: &EstimatorConfig, target: Target) -> EstimateMatrix {
    let (m, n) = (obs.nrows(), obs.ncols());
    let fallback = cfg.fallback.value(obs);
    let tr = obs.transpose();
    // n x n table of eligible column variances.
    let col_vars: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| column_variances(&tr, i, cfg))
        .collect();
    let rows = (0..m)
        .into_par_iter()
        .map(|u| {
            let row_stats = anchor_stats(obs, u);
            (0..n)
                .map(|i| match (target, obs.get(u, i)) {
                    (Target::MissingOnly, Some(z)) => (z, Provenance::ObservedPassthrough),
                    _ => {
                        let est =
                            weighted_from_stats(obs, u, i, cfg, fallback, &row_stats, &col_vars[i]);
                        (est.value, est.provenance)
                    }
                })
                .collect()
        })
        .collect();
    assemble(m, n, rows)
}
