//! Row overlaps, row-difference statistics and candidate neighbor sets.
//!
//! Every statistic is built from the sequence of differences
//! `Z(u,j) - Z(v,j)` taken in ascending column order, so the lazy
//! per-pair path and the cached per-anchor path produce identical bits.
//! Cost is O(overlap) per pair.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::obsdata::ObservationMatrix;

/// Column predicate that excludes nothing.
pub fn no_exclusion(_col: usize) -> bool {
    false
}

/// Overlap size, mean and sample variance of the row difference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairStats {
    pub overlap: usize,
    /// `NaN` when the overlap is empty.
    pub mean_diff: f64,
    /// Defined only for overlaps of at least two columns.
    pub sample_var: Option<f64>,
}

impl PairStats {
    pub const EMPTY: PairStats = PairStats {
        overlap: 0,
        mean_diff: f64::NAN,
        sample_var: None,
    };

    /// Two-pass mean and `(|O| - 1)`-denominator variance.
    pub fn from_differences(diffs: &[f64]) -> PairStats {
        let overlap = diffs.len();
        if overlap == 0 {
            return PairStats::EMPTY;
        }
        let mean = diffs.iter().sum::<f64>() / overlap as f64;
        let sample_var = (overlap >= 2).then(|| {
            let ss: f64 = diffs.iter().map(|d| (d - mean) * (d - mean)).sum();
            ss / (overlap - 1) as f64
        });
        PairStats {
            overlap,
            mean_diff: mean,
            sample_var,
        }
    }

    pub fn variance(&self) -> Result<f64> {
        self.sample_var.ok_or(Error::InsufficientOverlap {
            needed: 2,
            found: self.overlap,
        })
    }
}

/// Appends `Z(u,j) - Z(v,j)` for every shared, non-excluded column `j`.
fn collect_differences<F>(
    obs: &ObservationMatrix,
    u: usize,
    v: usize,
    excluded: F,
    out: &mut Vec<f64>,
    cols: Option<&mut Vec<usize>>,
) where
    F: Fn(usize) -> bool,
{
    let (a, b) = (obs.row(u), obs.row(v));
    let (mut x, mut y) = (0, 0);
    let mut cols = cols;
    while x < a.len() && y < b.len() {
        match a[x].0.cmp(&b[y].0) {
            std::cmp::Ordering::Less => x += 1,
            std::cmp::Ordering::Greater => y += 1,
            std::cmp::Ordering::Equal => {
                let j = a[x].0;
                if !excluded(j) {
                    out.push(a[x].1 - b[y].1);
                    if let Some(c) = cols.as_deref_mut() {
                        c.push(j);
                    }
                }
                x += 1;
                y += 1;
            }
        }
    }
}

/// Columns observed in both rows and not excluded, ascending.
pub fn row_overlap<F>(obs: &ObservationMatrix, u: usize, v: usize, excluded: F) -> Result<Vec<usize>>
where
    F: Fn(usize) -> bool,
{
    obs.check_row(u)?;
    obs.check_row(v)?;
    let mut diffs = Vec::new();
    let mut cols = Vec::new();
    collect_differences(obs, u, v, excluded, &mut diffs, Some(&mut cols));
    Ok(cols)
}

/// Mean and sample variance of `Z(u,.) - Z(v,.)` over the filtered overlap.
pub fn pair_stats<F>(obs: &ObservationMatrix, u: usize, v: usize, excluded: F) -> Result<PairStats>
where
    F: Fn(usize) -> bool,
{
    obs.check_row(u)?;
    obs.check_row(v)?;
    let mut diffs = Vec::new();
    collect_differences(obs, u, v, excluded, &mut diffs, None);
    Ok(PairStats::from_differences(&diffs))
}

/// Statistics of one anchor row against every row of the matrix.
///
/// Row `u` is scattered into a dense buffer once, after which each other
/// row costs O(|row v|).
pub fn anchor_stats(obs: &ObservationMatrix, u: usize) -> Vec<PairStats> {
    let mut dense = vec![f64::NAN; obs.ncols()];
    let mut present = vec![false; obs.ncols()];
    for &(j, z) in obs.row(u) {
        dense[j] = z;
        present[j] = true;
    }
    let mut diffs = Vec::new();
    (0..obs.nrows())
        .map(|v| {
            diffs.clear();
            for &(j, z) in obs.row(v) {
                if present[j] {
                    diffs.push(dense[j] - z);
                }
            }
            PairStats::from_differences(&diffs)
        })
        .collect()
}

/// All `m x m` pair statistics, row-major by anchor.
#[derive(Clone, Debug)]
pub struct PairStatsTable {
    m: usize,
    stats: Vec<PairStats>,
}

impl PairStatsTable {
    pub fn compute(obs: &ObservationMatrix) -> Self {
        let stats = (0..obs.nrows())
            .into_par_iter()
            .flat_map_iter(|u| anchor_stats(obs, u))
            .collect();
        PairStatsTable {
            m: obs.nrows(),
            stats,
        }
    }

    pub fn get(&self, u: usize, v: usize) -> &PairStats {
        &self.stats[u * self.m + v]
    }

    pub fn anchor(&self, u: usize) -> &[PairStats] {
        &self.stats[u * self.m..(u + 1) * self.m]
    }
}

/// Rows eligible to vote for entry `(u, i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateSet {
    pub anchor_row: usize,
    pub target_col: usize,
    pub beta_low: usize,
    pub beta_high: Option<usize>,
    /// Ascending row indices.
    pub rows: Vec<usize>,
}

pub(crate) fn check_window(beta_low: usize, beta_high: Option<usize>) -> Result<()> {
    if beta_low < 2 {
        return Err(Error::InvalidParameter(format!(
            "beta_low must be at least 2, got {beta_low}"
        )));
    }
    if let Some(high) = beta_high {
        if high < beta_low {
            return Err(Error::InvalidParameter(format!(
                "beta_high {high} is below beta_low {beta_low}"
            )));
        }
    }
    Ok(())
}

#[inline]
pub(crate) fn in_window(overlap: usize, beta_low: usize, beta_high: Option<usize>) -> bool {
    overlap >= beta_low && beta_high.is_none_or(|h| overlap <= h)
}

/// `{ v : (v,i) observed, beta_low <= |overlap(u,v)| <= beta_high }`.
///
/// `u` itself is listed only when `include_self` is set and `(u,i)` is
/// observed; the window does not apply to it. `None` for `beta_high`
/// means no upper limit.
pub fn candidate_rows<F>(
    obs: &ObservationMatrix,
    u: usize,
    i: usize,
    beta_low: usize,
    beta_high: Option<usize>,
    excluded: F,
    include_self: bool,
) -> Result<CandidateSet>
where
    F: Fn(usize) -> bool,
{
    obs.check_row(u)?;
    obs.check_col(i)?;
    check_window(beta_low, beta_high)?;
    let mut diffs = Vec::new();
    let mut rows = Vec::new();
    for &(v, _) in obs.col(i) {
        if v == u {
            if include_self {
                rows.push(v);
            }
            continue;
        }
        diffs.clear();
        collect_differences(obs, u, v, &excluded, &mut diffs, None);
        if in_window(diffs.len(), beta_low, beta_high) {
            rows.push(v);
        }
    }
    Ok(CandidateSet {
        anchor_row: u,
        target_col: i,
        beta_low,
        beta_high,
        rows,
    })
}
