//! Error metrics and closed-form upper bounds on the estimator's error.
//!
//! Bounds are diagnostics. Hypotheses of the underlying theorems are checked
//! and reported in `validity`; a violated hypothesis never prevents the
//! numbers from being computed. Only inputs that make the formulas
//! meaningless (non-positive sizes, `theta >= 1`, ...) are errors.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::Provenance;
use crate::obsdata::{DenseMatrix, ObservationMatrix};

/// Cells over which [`mse`] averages.
#[derive(Clone, Copy, Debug)]
pub enum Scope<'a> {
    All,
    /// Cells whose provenance is not an observed passthrough.
    EstimatedOnly(&'a [Provenance]),
    TestSet(&'a [(usize, usize)]),
}

fn check_same_shape(a: &DenseMatrix, b: &DenseMatrix) -> Result<()> {
    if (a.nrows(), a.ncols()) != (b.nrows(), b.ncols()) {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} estimate vs {}x{} truth",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(())
}

fn mean_square(diffs: impl Iterator<Item = f64>) -> Result<f64> {
    let (mut sum, mut count) = (0.0, 0usize);
    for d in diffs {
        sum += d * d;
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptyScope);
    }
    Ok(sum / count as f64)
}

pub fn mse(estimate: &DenseMatrix, truth: &DenseMatrix, scope: Scope<'_>) -> Result<f64> {
    check_same_shape(estimate, truth)?;
    let (m, n) = (truth.nrows(), truth.ncols());
    match scope {
        Scope::All => mean_square(estimate.as_slice().iter().zip(truth.as_slice()).map(|(a, b)| a - b)),
        Scope::EstimatedOnly(prov) => {
            if prov.len() != m * n {
                return Err(Error::ShapeMismatch(format!("{} provenance tags for {m}x{n} cells", prov.len())));
            }
            mean_square(
                estimate
                    .as_slice()
                    .iter()
                    .zip(truth.as_slice())
                    .zip(prov)
                    .filter(|(_, p)| **p != Provenance::ObservedPassthrough)
                    .map(|((a, b), _)| a - b),
            )
        }
        Scope::TestSet(cells) => {
            if let Some(&(u, i)) = cells.iter().find(|&&(u, i)| u >= m || i >= n) {
                return Err(Error::IndexOutOfRange(format!("test cell ({u}, {i}) outside {m}x{n}")));
            }
            mean_square(cells.iter().map(|&(u, i)| estimate.get(u, i) - truth.get(u, i)))
        }
    }
}

fn check_test(estimate: &DenseMatrix, test: &ObservationMatrix) -> Result<()> {
    if (estimate.nrows(), estimate.ncols()) != (test.nrows(), test.ncols()) {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} estimate vs {}x{} test set",
            estimate.nrows(),
            estimate.ncols(),
            test.nrows(),
            test.ncols()
        )));
    }
    Ok(())
}

/// Mean squared error against the values stored in a held-out set.
pub fn mse_test(estimate: &DenseMatrix, test: &ObservationMatrix) -> Result<f64> {
    check_test(estimate, test)?;
    mean_square(test.entries().map(|(u, i, z)| estimate.get(u, i) - z))
}

pub fn rmse(estimate: &DenseMatrix, test: &ObservationMatrix) -> Result<f64> {
    mse_test(estimate, test).map(f64::sqrt)
}

/// Squared error normalized by the spread of the held-out values around
/// their mean.
pub fn rse(estimate: &DenseMatrix, test: &ObservationMatrix) -> Result<f64> {
    check_test(estimate, test)?;
    if test.len() < 2 {
        return Err(Error::UndefinedMetric(format!(
            "relative squared error needs at least 2 test entries, got {}",
            test.len()
        )));
    }
    let mean = test.entries().map(|(_, _, z)| z).sum::<f64>() / test.len() as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for (u, i, z) in test.entries() {
        num += (estimate.get(u, i) - z).powi(2);
        den += (z - mean).powi(2);
    }
    if den == 0.0 {
        return Err(Error::UndefinedMetric("test values are constant".into()));
    }
    Ok(num / den)
}

/// Uniform measure on the unit cube: `(2L)^2 C^(-2/d) (mp)^(-4/(3d))`.
pub fn zeta_uniform_cube(lipschitz: f64, d: usize, m: usize, p: f64, c_norm: f64) -> f64 {
    let d = d as f64;
    (2.0 * lipschitz).powi(2) * c_norm.powf(-2.0 / d) * (m as f64 * p).powf(-4.0 / (3.0 * d))
}

/// Finitely supported latent measure: `beta^(-1/3)`.
pub fn zeta_finite_support(beta: f64) -> f64 {
    beta.powf(-1.0 / 3.0)
}

fn outer_mse(f1: f64, f2: f64, f3: f64, b0: f64) -> f64 {
    2.0 * f1 * (2.0 * b0 / f1).ln() + (f1 + f2).powi(2) + 2.0 * f2 + 4.0 * b0 * b0 * f3
}

fn require(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(what.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub m: usize,
    pub n: usize,
    pub p: f64,
    pub beta: f64,
    pub k: f64,
    pub zeta: f64,
    #[serde(rename = "B0")]
    pub b0: f64,
    pub gamma_sq: f64,
    pub c_phi: f64,
    pub c_k: f64,
    pub c_beta: f64,
    /// Underestimator evaluated at `sqrt(zeta / L^2)`, if known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_at: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_prime: Option<f64>,
}

impl BoundParams {
    /// Uniform latent cube `[0,1]^d`: `beta = np^2/2`, `k = (mp)^(1/3)/8`,
    /// `zeta` from [`zeta_uniform_cube`] with `C = 1`, `c_phi = 1`,
    /// `c_k = 1/2`, `c_beta = 1/2` and uniform noise on `[-b_e, b_e]`.
    pub fn uniform_cube(m: usize, n: usize, p: f64, lipschitz: f64, d: usize, b_e: f64) -> Self {
        let zeta = zeta_uniform_cube(lipschitz, d, m, p, 1.0);
        BoundParams {
            m,
            n,
            p,
            beta: n as f64 * p * p / 2.0,
            k: (m as f64 * p).cbrt() / 8.0,
            zeta,
            b0: lipschitz + 2.0 * b_e,
            gamma_sq: b_e * b_e / 3.0,
            c_phi: 1.0,
            c_k: 0.5,
            c_beta: 0.5,
            phi_at: Some((zeta.sqrt() / lipschitz / 2.0).powi(d as i32).min(1.0)),
            delta_prime: None,
        }
    }

    /// Parameters of the item-item bound: rows and columns swap roles.
    pub fn transposed(&self) -> Self {
        BoundParams {
            m: self.n,
            n: self.m,
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<()> {
        require(self.m >= 1 && self.n >= 1, "m and n must be positive")?;
        require(self.p > 0.0 && self.p <= 1.0, "p must lie in (0, 1]")?;
        require(self.beta > 0.0 && self.beta.is_finite(), "beta must be positive")?;
        require(self.k > 0.0 && self.k.is_finite(), "k must be positive")?;
        require(self.zeta > 0.0 && self.zeta.is_finite(), "zeta must be positive")?;
        require(self.b0 > 0.0 && self.b0.is_finite(), "B0 must be positive")?;
        require(self.gamma_sq >= 0.0 && self.gamma_sq.is_finite(), "gamma_sq must be non-negative")?;
        require(
            [self.c_phi, self.c_k, self.c_beta].iter().all(|c| c.is_finite()),
            "constants must be finite",
        )
    }

    pub fn c1(&self) -> f64 {
        (1.0f64 / 24.0).min(self.c_phi * (1.0 - self.c_k).powi(2) / 8.0)
    }

    pub fn c2(&self) -> f64 {
        let b0 = self.b0;
        (self.c_beta * self.c_beta / 2.0)
            .min(3.0 / (6.0 * b0 * b0 + 4.0 * b0))
            .min(1.0 / (8.0 * b0 * b0 * (2.0 * b0 * b0 + 1.0)))
    }

    fn f1(&self) -> f64 {
        self.zeta + 2.0 * self.beta.powf(-1.0 / 3.0) + self.gamma_sq / self.k
    }

    fn f3(&self) -> f64 {
        let (m, p) = (self.m as f64, self.p);
        3.0 * (-self.c1() * (m * p).cbrt()).exp() + (m + 4.5 * m * p) * (-self.c2() * self.beta.cbrt()).exp()
    }

    fn validity(&self) -> BTreeMap<String, bool> {
        let (m, n, p) = (self.m as f64, self.n as f64, self.p);
        let np2 = n * p * p;
        let mut flags = BTreeMap::new();
        flags.insert("p_above_threshold".into(), p > (1.0 / m).max(n.powf(-0.5)));
        flags.insert("beta_in_range".into(), self.beta >= 2.0 && self.beta < np2);
        flags.insert("c_beta_in_unit_interval".into(), self.c_beta > 0.0 && self.c_beta < 1.0);
        flags.insert("c_k_in_unit_interval".into(), self.c_k >= 0.0 && self.c_k < 1.0);
        flags.insert("c_phi_non_negative".into(), self.c_phi >= 0.0);
        if let Some(phi) = self.phi_at {
            flags.insert("phi_condition".into(), phi >= self.c_phi * (m * p).powf(-2.0 / 3.0));
            flags.insert("k_condition".into(), self.k <= self.c_k / 2.0 * (m - 1.0) * p * phi);
        }
        if let Some(dp) = self.delta_prime {
            flags.insert("log_m_condition".into(), dp > 0.0 && dp < 1.0 && m.ln() < np2.powf(dp / 3.0));
        }
        flags
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    #[serde(rename = "F1")]
    pub f1: f64,
    #[serde(rename = "F2")]
    pub f2: f64,
    #[serde(rename = "F3")]
    pub f3: f64,
    pub c1: f64,
    pub c2: f64,
    #[serde(rename = "B0")]
    pub b0: f64,
    pub mse_bound: f64,
    pub validity: BTreeMap<String, bool>,
}

pub fn matrix_mse_bound(params: &BoundParams) -> Result<BoundReport> {
    params.validate()?;
    let (f1, f2, f3) = (params.f1(), params.beta.powf(-1.0 / 3.0), params.f3());
    if !(f1 > 0.0) {
        return Err(Error::InvalidParameter(format!("F1 = {f1} is not positive")));
    }
    Ok(BoundReport {
        f1,
        f2,
        f3,
        c1: params.c1(),
        c2: params.c2(),
        b0: params.b0,
        mse_bound: outer_mse(f1, f2, f3, params.b0),
        validity: params.validity(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub eps: f64,
    #[serde(rename = "F1")]
    pub f1: f64,
    #[serde(rename = "F2")]
    pub f2: f64,
    pub c1: f64,
    pub c2: f64,
    pub unclamped: f64,
    pub bound: f64,
    pub validity: BTreeMap<String, bool>,
}

/// Bound on `P(|A(u,i) - estimate| > eps)`, clamped to `[0, 1]`.
pub fn matrix_tail_bound(params: &BoundParams, eps: f64) -> Result<TailReport> {
    params.validate()?;
    let f2 = params.beta.powf(-1.0 / 3.0);
    if !(eps > f2) {
        return Err(Error::InvalidParameter(format!(
            "eps = {eps} must exceed beta^(-1/3) = {f2}"
        )));
    }
    let f1 = params.f1();
    let unclamped = f1 / (eps - f2).powi(2) + params.f3();
    Ok(TailReport {
        eps,
        f1,
        f2,
        c1: params.c1(),
        c2: params.c2(),
        unclamped,
        bound: unclamped.clamp(0.0, 1.0),
        validity: params.validity(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorBoundParams {
    pub shape: Vec<usize>,
    /// 0-based modes indexing the rows of the flattening.
    pub row_modes: Vec<usize>,
    pub p: f64,
    pub beta_low: f64,
    pub beta_high: f64,
    pub k: f64,
    pub zeta: f64,
    pub lipschitz: f64,
    /// Diameter of each latent space.
    pub diameter: f64,
    pub b_e: f64,
    pub gamma_sq: f64,
    pub c_l: f64,
    pub c_h: f64,
    /// One constant per row mode, or a single value shared by all of them.
    pub c_q: Vec<f64>,
}

impl TensorBoundParams {
    /// Uniform latent cubes `[0,1]^d` on every mode with `C = 1`, `c_q = 1`:
    /// `beta_low = min{n'p^2, sqrt(n')}/2`, `beta_high = 2 max{n'p^2, sqrt(n')}`,
    /// `k = sqrt(mp)/8`, `zeta = (2L)^2 (mp)^(-1/(d t1))` and uniform noise.
    pub fn uniform_cube(shape: Vec<usize>, row_modes: Vec<usize>, p: f64, lipschitz: f64, d: usize, b_e: f64) -> Self {
        let m: f64 = row_modes.iter().filter_map(|&q| shape.get(q)).map(|&s| s as f64).product();
        let n_prime: f64 = (0..shape.len())
            .filter(|q| !row_modes.contains(q))
            .map(|q| shape[q] as f64 - 1.0)
            .product();
        let (np2, root) = (n_prime * p * p, n_prime.sqrt());
        let t1 = row_modes.len().max(1) as f64;
        TensorBoundParams {
            zeta: (2.0 * lipschitz).powi(2) * (m * p).powf(-1.0 / (d as f64 * t1)),
            k: (m * p).sqrt() / 8.0,
            beta_low: np2.min(root) / 2.0,
            beta_high: 2.0 * np2.max(root),
            shape,
            row_modes,
            p,
            lipschitz,
            diameter: 1.0,
            b_e,
            gamma_sq: b_e * b_e / 3.0,
            c_l: 0.5,
            c_h: 2.0,
            c_q: vec![1.0],
        }
    }

    fn col_modes(&self) -> Vec<usize> {
        (0..self.shape.len()).filter(|q| !self.row_modes.contains(q)).collect()
    }

    fn validate(&self) -> Result<()> {
        let t = self.shape.len();
        require(t >= 2, "tensor order must be at least 2")?;
        require(self.shape.iter().all(|&s| s >= 2), "every tensor dimension must be at least 2")?;
        let mut rows = self.row_modes.clone();
        rows.sort_unstable();
        rows.dedup();
        require(
            rows.len() == self.row_modes.len() && !rows.is_empty() && rows.len() < t && rows.iter().all(|&q| q < t),
            "row modes must be a proper non-empty subset of the modes",
        )?;
        require(self.p > 0.0 && self.p <= 1.0, "p must lie in (0, 1]")?;
        require(self.beta_low > 0.0 && self.beta_high >= self.beta_low, "need 0 < beta_low <= beta_high")?;
        require(self.k > 0.0 && self.zeta > 0.0, "k and zeta must be positive")?;
        require(self.lipschitz > 0.0 && self.diameter > 0.0, "L and D must be positive")?;
        require(self.b_e >= 0.0 && self.gamma_sq >= 0.0, "noise parameters must be non-negative")?;
        require(
            self.c_q.len() == 1 || self.c_q.len() == self.row_modes.len(),
            "c_q needs one value or one per row mode",
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorBoundReport {
    #[serde(rename = "F1")]
    pub f1: f64,
    #[serde(rename = "F2")]
    pub f2: f64,
    #[serde(rename = "F3")]
    pub f3: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    #[serde(rename = "C3")]
    pub c3: f64,
    #[serde(rename = "C4")]
    pub c4: f64,
    pub theta: f64,
    pub n_prime: f64,
    pub m: f64,
    /// 0-based row mode of smallest size.
    pub q_star: usize,
    #[serde(rename = "B0")]
    pub b0: f64,
    pub mse_bound: f64,
    pub validity: BTreeMap<String, bool>,
}

pub fn tensor_mse_bound(params: &TensorBoundParams) -> Result<TensorBoundReport> {
    params.validate()?;
    let shape = &params.shape;
    let cols = params.col_modes();
    let (t1, t2) = (params.row_modes.len() as f64, cols.len() as f64);
    let theta: f64 = cols.iter().map(|&q| 1.0 / (shape[q] as f64 - 1.0)).sum();
    if theta >= 1.0 {
        return Err(Error::InvalidParameter(format!("theta = {theta} must be below 1")));
    }
    let m: f64 = params.row_modes.iter().map(|&q| shape[q] as f64).product();
    let n_prime: f64 = cols.iter().map(|&q| shape[q] as f64 - 1.0).product();
    let q_star = *params
        .row_modes
        .iter()
        .min_by_key(|&&q| (shape[q], q))
        .expect("row modes are non-empty");
    let n_q = shape[q_star] as f64;

    let (p, bl, bh, k) = (params.p, params.beta_low, params.beta_high, params.k);
    let (l, d, be) = (params.lipschitz, params.diameter, params.b_e);
    let ld = l * d;
    let b0 = ld + 2.0 * be;

    let f2 = (n_q - 1.0)
        .powf(-1.0 / 3.0)
        .max(bh / n_prime.powf(2.0 / 3.0))
        .max(bl.powf(-1.0 / 3.0));
    let f1 = ((1.0 + theta) * params.zeta + 2.0 * f2) / (1.0 - theta) + params.gamma_sq / k;

    let c1 = ((1.0 - params.c_l).powi(2) / 2.0).min((params.c_h - 1.0).powi(2) / 3.0);
    let c2 = (1.0 / (8.0 * ld * ld * t2 + 16.0 * be * be)).min(
        1.0 / (32.0 * ld * ld * (3.0 * ld + 4.0 * be).powi(2) * t2 + 64.0 * be * be * (2.0 * ld + 5.0 * be).powi(2)),
    );
    let c3 = (1.0 / (32.0 * (ld + 2.0 * be).powi(2))).min(1.0 / (128.0 * (ld + 2.0 * be).powi(4)));
    let c_min = params.c_q.iter().copied().fold(f64::INFINITY, f64::min);
    let c4 = (1.0 - 2f64.powf(-1.0 / t1)).powi(2) / 2.0 * c_min;

    let f3 = 4.0 * (m - 1.0) * (-c1 * n_prime * p * p).exp()
        + 2.0 * (-m * p / 24.0).exp()
        + 6.0 * (m - 1.0) * p * (-c2 * (n_q - 1.0).cbrt()).exp()
        + 6.0 * (m - 1.0) * p * (-c3 * (n_prime.powf(2.0 / 3.0) / (4.0 * bh)).min(bl.cbrt() / 4.0)).exp()
        + t1 * (-c4 * n_q.sqrt()).exp()
        + (-k / 8.0).exp();

    let np2 = n_prime * p * p;
    let mut validity = BTreeMap::new();
    validity.insert("p_above_threshold".into(), p > (1.0 / m).max(n_prime.powf(-0.5)));
    validity.insert("p_below_ceiling".into(), p < n_prime.powf(-1.0 / 6.0));
    validity.insert("beta_low_in_range".into(), bl >= 2.0 && bl <= params.c_l * np2.min(n_prime.sqrt()));
    validity.insert(
        "beta_high_in_range".into(),
        bh >= params.c_h * np2.max(n_prime.sqrt()) && bh < n_prime.powf(2.0 / 3.0),
    );
    validity.insert("c_l_in_unit_interval".into(), params.c_l > 0.0 && params.c_l < 1.0);
    validity.insert("c_h_above_one".into(), params.c_h > 1.0);
    validity.insert("c_q_positive".into(), params.c_q.iter().all(|&c| c > 0.0));

    Ok(TensorBoundReport {
        f1,
        f2,
        f3,
        c1,
        c2,
        c3,
        c4,
        theta,
        n_prime,
        m,
        q_star,
        b0,
        mse_bound: outer_mse(f1, f2, f3, b0),
        validity,
    })
}
