//! Tensor flattening, shared-coordinate exclusion, optimal bipartitions and
//! the tensor-adapted k-NN estimator.
//!
//! A plan lists the tensor modes in the order `pi`; the first `t1` modes
//! index matrix rows and the remaining `t2 = t - t1` modes index columns.
//! Within each side the first listed mode varies slowest:
//!
//! ```text
//! row = sum_{tau < t1} a[pi[tau]] * prod_{s in tau+1..t1} n[pi[s]]
//! col = sum_{tau < t2} a[pi[t1+tau]] * prod_{s in tau+1..t2} n[pi[t1+s]]
//! ```
//!
//! with 0-based coordinates `a`. Files carry the same indices plus one.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{complete_matrix, knn_from_stats, EstimateMatrix, EstimatorConfig, Provenance, Target, Variant};
use crate::obsdata::{DenseMatrix, ObservationMatrix, ObservationTensor};
use crate::simstats::pair_stats;

/// Largest tensor order accepted by [`optimal_partition`].
pub const MAX_PARTITION_ORDER: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlatteningPlan {
    shape: Vec<usize>,
    pi: Vec<usize>,
    t1: usize,
}

impl FlatteningPlan {
    /// `pi` is a 0-based permutation of the modes.
    pub fn new(shape: Vec<usize>, pi: Vec<usize>, t1: usize) -> Result<Self> {
        let t = shape.len();
        if t < 2 {
            return Err(Error::Dimension(format!("tensor order {t} is below 2")));
        }
        if shape.contains(&0) {
            return Err(Error::Dimension("tensor dimensions must be positive".into()));
        }
        if t1 == 0 || t1 >= t {
            return Err(Error::InvalidParameter(format!(
                "split point {t1} must lie in 1..={}",
                t - 1
            )));
        }
        let mut seen = vec![false; t];
        if pi.len() != t || pi.iter().any(|&q| q >= t || std::mem::replace(&mut seen[q], true)) {
            return Err(Error::InvalidParameter(format!(
                "{pi:?} is not a permutation of 0..{t}"
            )));
        }
        Ok(FlatteningPlan { shape, pi, t1 })
    }

    pub fn identity(shape: Vec<usize>, t1: usize) -> Result<Self> {
        let pi = (0..shape.len()).collect();
        FlatteningPlan::new(shape, pi, t1)
    }

    /// Plan whose row modes are `row_modes` (0-based), each side ascending.
    pub fn from_row_modes(shape: Vec<usize>, row_modes: &[usize]) -> Result<Self> {
        let t = shape.len();
        let mut rows: Vec<usize> = row_modes.to_vec();
        rows.sort_unstable();
        rows.dedup();
        if rows.len() != row_modes.len() || rows.iter().any(|&q| q >= t) {
            return Err(Error::InvalidParameter(format!(
                "invalid row modes {row_modes:?} for order {t}"
            )));
        }
        let t1 = rows.len();
        let mut pi = rows.clone();
        pi.extend((0..t).filter(|q| !rows.contains(q)));
        FlatteningPlan::new(shape, pi, t1)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn pi(&self) -> &[usize] {
        &self.pi
    }

    pub fn t1(&self) -> usize {
        self.t1
    }

    pub fn t2(&self) -> usize {
        self.shape.len() - self.t1
    }

    /// Modes indexing rows, in plan order.
    pub fn row_modes(&self) -> &[usize] {
        &self.pi[..self.t1]
    }

    /// Modes indexing columns, in plan order.
    pub fn col_modes(&self) -> &[usize] {
        &self.pi[self.t1..]
    }

    pub fn nrows(&self) -> usize {
        self.row_modes().iter().map(|&q| self.shape[q]).product()
    }

    pub fn ncols(&self) -> usize {
        self.col_modes().iter().map(|&q| self.shape[q]).product()
    }

    /// Number of columns sharing no coordinate with a given column.
    pub fn n_prime(&self) -> usize {
        self.col_modes().iter().map(|&q| self.shape[q] - 1).product()
    }

    /// Item-side view: the same bipartition with rows and columns swapped.
    pub fn swapped(&self) -> FlatteningPlan {
        let mut pi = self.col_modes().to_vec();
        pi.extend_from_slice(self.row_modes());
        FlatteningPlan {
            shape: self.shape.clone(),
            pi,
            t1: self.t2(),
        }
    }
}

fn encode(coords: impl Iterator<Item = (usize, usize)>) -> usize {
    coords.fold(0, |acc, (c, dim)| acc * dim + c)
}

fn decode(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (slot, &dim) in out.iter_mut().zip(dims).rev() {
        *slot = index % dim;
        index /= dim;
    }
    out
}

fn side_dims(plan: &FlatteningPlan, modes: &[usize]) -> Vec<usize> {
    modes.iter().map(|&q| plan.shape[q]).collect()
}

/// Matrix position of a 0-based tensor coordinate.
pub fn flatten_index(coords: &[usize], plan: &FlatteningPlan) -> Result<(usize, usize)> {
    if coords.len() != plan.shape.len() || coords.iter().zip(&plan.shape).any(|(&c, &d)| c >= d) {
        return Err(Error::IndexOutOfRange(format!(
            "coordinate {coords:?} (0-based) outside shape {:?}",
            plan.shape
        )));
    }
    let u = encode(plan.row_modes().iter().map(|&q| (coords[q], plan.shape[q])));
    let i = encode(plan.col_modes().iter().map(|&q| (coords[q], plan.shape[q])));
    Ok((u, i))
}

/// Tensor coordinate of matrix position `(u, i)`.
pub fn unflatten_index(u: usize, i: usize, plan: &FlatteningPlan) -> Result<Vec<usize>> {
    if u >= plan.nrows() || i >= plan.ncols() {
        return Err(Error::IndexOutOfRange(format!(
            "({u}, {i}) outside the {}x{} flattening",
            plan.nrows(),
            plan.ncols()
        )));
    }
    let mut coords = vec![0; plan.shape.len()];
    let rows = decode(u, &side_dims(plan, plan.row_modes()));
    let cols = decode(i, &side_dims(plan, plan.col_modes()));
    for (&q, c) in plan.row_modes().iter().zip(rows) {
        coords[q] = c;
    }
    for (&q, c) in plan.col_modes().iter().zip(cols) {
        coords[q] = c;
    }
    Ok(coords)
}

pub fn flatten_tensor(tobs: &ObservationTensor, plan: &FlatteningPlan) -> Result<ObservationMatrix> {
    if tobs.shape() != plan.shape() {
        return Err(Error::ShapeMismatch(format!(
            "tensor shape {:?} vs plan shape {:?}",
            tobs.shape(),
            plan.shape()
        )));
    }
    let entries = tobs
        .entries()
        .iter()
        .map(|(coords, v)| flatten_index(coords, plan).map(|(u, i)| (u, i, *v)))
        .collect::<Result<Vec<_>>>()?;
    ObservationMatrix::new(plan.nrows(), plan.ncols(), entries)
}

/// Column predicate for the shared-coordinate exclusion of column `i`.
///
/// `excludes(j)` holds iff `j` agrees with `i` on at least one column mode,
/// i.e. `j` lies outside `N_i`.
#[derive(Clone, Debug)]
pub struct SharedCoordinateFilter {
    dims: Vec<usize>,
    target: Vec<usize>,
}

impl SharedCoordinateFilter {
    pub fn excludes(&self, j: usize) -> bool {
        let mut rest = j;
        for (&dim, &t) in self.dims.iter().zip(&self.target).rev() {
            if rest % dim == t {
                return true;
            }
            rest /= dim;
        }
        false
    }
}

pub fn excluded_columns(i: usize, plan: &FlatteningPlan) -> Result<SharedCoordinateFilter> {
    if i >= plan.ncols() {
        return Err(Error::IndexOutOfRange(format!(
            "column {i} outside {} columns",
            plan.ncols()
        )));
    }
    let dims = side_dims(plan, plan.col_modes());
    let target = decode(i, &dims);
    Ok(SharedCoordinateFilter { dims, target })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionMode {
    User,
    Item,
}

/// Bipartition minimizing the sample-complexity threshold
/// `max{ m^-1, n^-1/2 }` (user mode) or `max{ n^-1, m^-1/2 }` (item mode).
///
/// The comparison is done exactly on integers: minimizing
/// `max{1/m, 1/sqrt(n)}` is maximizing `min{m^2, n}`. Ties go first to the
/// larger `max{m^2, n}`, then to the lexicographically smallest row-mode
/// set. Row and column modes are listed in ascending order.
pub fn optimal_partition(shape: &[usize], mode: PartitionMode) -> Result<FlatteningPlan> {
    let t = shape.len();
    if t < 2 {
        return Err(Error::InvalidParameter(format!("tensor order {t} is below 2")));
    }
    if t > MAX_PARTITION_ORDER {
        return Err(Error::InvalidParameter(format!(
            "exhaustive partition search supports order up to {MAX_PARTITION_ORDER}, got {t}"
        )));
    }
    let product = |mask: u32, inside: bool| -> u128 {
        (0..t)
            .filter(|&q| ((mask >> q) & 1 == 1) == inside)
            .fold(1u128, |acc, q| acc.saturating_mul(shape[q] as u128))
    };

    let mut best: Option<((u128, u128), Vec<usize>)> = None;
    for mask in 1u32..((1u32 << t) - 1) {
        let (m, n) = (product(mask, true), product(mask, false));
        let (sq, lin) = match mode {
            PartitionMode::User => (m.saturating_mul(m), n),
            PartitionMode::Item => (n.saturating_mul(n), m),
        };
        let key = (sq.min(lin), sq.max(lin));
        let rows: Vec<usize> = (0..t).filter(|&q| (mask >> q) & 1 == 1).collect();
        let better = match &best {
            None => true,
            Some((best_key, best_rows)) => key > *best_key || (key == *best_key && rows < *best_rows),
        };
        if better {
            best = Some((key, rows));
        }
    }
    let (_, rows) = best.expect("order >= 2 has a proper bipartition");
    FlatteningPlan::from_row_modes(shape.to_vec(), &rows)
}

/// Estimates of a flattened tensor with the plan that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorEstimate {
    pub plan: FlatteningPlan,
    pub matrix: EstimateMatrix,
}

impl TensorEstimate {
    pub fn get(&self, coords: &[usize]) -> Result<(f64, Provenance)> {
        let (u, i) = flatten_index(coords, &self.plan)?;
        Ok((self.matrix.get(u, i), self.matrix.provenance(u, i)))
    }

    /// Every cell as `(coords, value, provenance)` in lexicographic order.
    pub fn cells(&self) -> Vec<(Vec<usize>, f64, Provenance)> {
        let shape = self.plan.shape();
        let total: usize = shape.iter().product();
        (0..total)
            .map(|flat| {
                let coords = decode(flat, shape);
                let (u, i) = flatten_index(&coords, &self.plan).expect("decoded coordinate in range");
                (coords, self.matrix.get(u, i), self.matrix.provenance(u, i))
            })
            .collect()
    }

    pub fn to_tensor(&self) -> ObservationTensor {
        let entries = self.cells().into_iter().map(|(c, v, _)| (c, v)).collect();
        ObservationTensor::new(self.plan.shape().to_vec(), entries).expect("plan shape is valid")
    }
}

/// Runs the user-user k-NN estimator on the flattened tensor.
///
/// With `exact_exclusion` the overlap of every candidate pair is restricted
/// to columns sharing no tensor coordinate with the target column and the
/// pair statistics are recomputed per target column; this path requires the
/// user-user variant and costs O(|candidates| * overlap) per cell. Without
/// it the plain matrix algorithm runs on the flattened matrix.
pub fn tensor_complete(
    tobs: &ObservationTensor,
    plan: &FlatteningPlan,
    cfg: &EstimatorConfig,
    exact_exclusion: bool,
    target: Target,
) -> Result<TensorEstimate> {
    cfg.validate()?;
    let flat = flatten_tensor(tobs, plan)?;
    if !exact_exclusion {
        let matrix = complete_matrix(&flat, cfg, target)?;
        return Ok(TensorEstimate {
            plan: plan.clone(),
            matrix,
        });
    }
    if cfg.variant != Variant::UserUser {
        return Err(Error::InvalidParameter(
            "exact exclusion is defined for the user-user variant only".into(),
        ));
    }

    let (m, n) = (flat.nrows(), flat.ncols());
    let fallback = cfg.fallback.value(&flat);
    let filters: Vec<SharedCoordinateFilter> =
        (0..n).map(|i| excluded_columns(i, plan)).collect::<Result<_>>()?;
    let rows: Vec<Vec<(f64, Provenance)>> = (0..m)
        .into_par_iter()
        .map(|u| {
            (0..n)
                .map(|i| match (target, flat.get(u, i)) {
                    (Target::MissingOnly, Some(z)) => (z, Provenance::ObservedPassthrough),
                    _ => {
                        let filter = &filters[i];
                        let est = knn_from_stats(&flat, u, i, cfg, fallback, |v| {
                            pair_stats(&flat, u, v, |j| filter.excludes(j)).expect("rows in range")
                        });
                        (est.value, est.provenance)
                    }
                })
                .collect()
        })
        .collect();

    let mut values = DenseMatrix::zeros(m, n);
    let mut provenance = Vec::with_capacity(m * n);
    for (u, row) in rows.into_iter().enumerate() {
        for (i, (value, prov)) in row.into_iter().enumerate() {
            values.set(u, i, value);
            provenance.push(prov);
        }
    }
    Ok(TensorEstimate {
        plan: plan.clone(),
        matrix: EstimateMatrix::new(values, provenance)?,
    })
}
