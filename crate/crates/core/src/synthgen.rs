//! Synthetic instances of the latent variable model.
//!
//! Every index of mode `q` carries a latent vector drawn from a measure on
//! `[0,1]^d`. Mode 0 (matrix rows) uses `latent_measure`; the remaining
//! modes use `col_measure`, which defaults to the same measure. The truth is
//! `A(a_1, .., a_t) = f(x_1(a_1), .., x_t(a_t))` and an entry is observed
//! with probability `p`, in which case it carries independent noise.
//!
//! Random draws happen in a fixed order from one ChaCha8 stream: all latents
//! mode by mode, then for each cell in lexicographic order a mask draw
//! followed, if observed, by a noise draw.

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::obsdata::{DenseMatrix, ObservationMatrix, ObservationTensor};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LatentMeasure {
    /// Uniform on `[0,1]^d` with the sup metric.
    UniformCube { d: usize },
    /// Finitely many atoms in `[0,1]^d`.
    FiniteSupport { atoms: Vec<Vec<f64>>, probs: Vec<f64> },
}

impl LatentMeasure {
    pub fn dim(&self) -> usize {
        match self {
            LatentMeasure::UniformCube { d } => *d,
            LatentMeasure::FiniteSupport { atoms, .. } => atoms.first().map_or(0, Vec::len),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            LatentMeasure::UniformCube { d } => {
                if *d == 0 {
                    return Err(Error::InvalidParameter("latent dimension must be positive".into()));
                }
            }
            LatentMeasure::FiniteSupport { atoms, probs } => {
                check_probabilities(probs)?;
                if atoms.len() != probs.len() {
                    return Err(Error::InvalidParameter(format!(
                        "{} atoms but {} probabilities",
                        atoms.len(),
                        probs.len()
                    )));
                }
                let d = self.dim();
                if d == 0 || atoms.iter().any(|a| a.len() != d) {
                    return Err(Error::InvalidParameter("atoms must share a positive dimension".into()));
                }
                if atoms.iter().flatten().any(|x| !(0.0..=1.0).contains(x)) {
                    return Err(Error::InvalidParameter("atom coordinates must lie in [0, 1]".into()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LatentFn {
    /// `sum_q mean(x_q)^(1 + q mod 2)`; for matrices `mean(x) + mean(y)^2`.
    Additive,
    /// `sum_k prod_q x_q[k] / d`; for matrices `<x, y> / d`.
    Bilinear,
    /// `1 / (1 + exp(-3 sum_q mean(x_q)))`.
    LogisticOfSum,
    /// `1 - max_{q,r} |x_q - x_r|_inf`; for matrices `1 - |x - y|_inf`.
    MaxMinusDistance,
    /// Matrix-only, `d = 1`: bilinear interpolation of `table` on a uniform
    /// grid over `[0,1]^2`, `table[a][b]` sitting at `(a/(R-1), b/(C-1))`.
    CustomTable { table: Vec<Vec<f64>> },
}

impl LatentFn {
    /// Lipschitz constant in each argument under the sup metric on `[0,1]^d`.
    pub fn lipschitz(&self) -> f64 {
        match self {
            LatentFn::Additive => 2.0,
            LatentFn::Bilinear | LatentFn::MaxMinusDistance => 1.0,
            LatentFn::LogisticOfSum => 0.75,
            LatentFn::CustomTable { table } => {
                let (r, c) = (table.len(), table[0].len());
                let mut slope: f64 = 0.0;
                for a in 0..r {
                    for b in 0..c {
                        if a + 1 < r {
                            slope = slope.max((table[a + 1][b] - table[a][b]).abs() * (r - 1) as f64);
                        }
                        if b + 1 < c {
                            slope = slope.max((table[a][b + 1] - table[a][b]).abs() * (c - 1) as f64);
                        }
                    }
                }
                slope
            }
        }
    }

    /// Bound on `|f|` over `[0,1]^d`.
    pub fn value_bound(&self, order: usize) -> f64 {
        match self {
            LatentFn::Additive => order as f64,
            LatentFn::Bilinear | LatentFn::LogisticOfSum | LatentFn::MaxMinusDistance => 1.0,
            LatentFn::CustomTable { table } => table.iter().flatten().fold(0.0, |acc: f64, v| acc.max(v.abs())),
        }
    }

    fn validate(&self, order: usize, d: usize) -> Result<()> {
        if let LatentFn::CustomTable { table } = self {
            if order != 2 || d != 1 {
                return Err(Error::InvalidParameter(
                    "custom-table needs a matrix with one-dimensional latents".into(),
                ));
            }
            let c = table.first().map_or(0, Vec::len);
            if table.len() < 2 || c < 2 || table.iter().any(|r| r.len() != c) {
                return Err(Error::InvalidParameter("custom table must be a rectangular grid of at least 2x2".into()));
            }
            if table.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("custom table values must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn eval(&self, xs: &[&[f64]]) -> f64 {
        let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
        match self {
            LatentFn::Additive => xs
                .iter()
                .enumerate()
                .map(|(q, x)| if q % 2 == 0 { mean(x) } else { mean(x).powi(2) })
                .sum(),
            LatentFn::Bilinear => {
                let d = xs[0].len();
                (0..d).map(|k| xs.iter().map(|x| x[k]).product::<f64>()).sum::<f64>() / d as f64
            }
            LatentFn::LogisticOfSum => {
                let s: f64 = xs.iter().map(|x| mean(x)).sum();
                1.0 / (1.0 + (-3.0 * s).exp())
            }
            LatentFn::MaxMinusDistance => {
                let mut dist: f64 = 0.0;
                for (q, a) in xs.iter().enumerate() {
                    for b in &xs[q + 1..] {
                        for (p, r) in a.iter().zip(b.iter()) {
                            dist = dist.max((p - r).abs());
                        }
                    }
                }
                1.0 - dist
            }
            LatentFn::CustomTable { table } => {
                let grid = |v: f64, len: usize| {
                    let pos = v.clamp(0.0, 1.0) * (len - 1) as f64;
                    let lo = (pos.floor() as usize).min(len - 2);
                    (lo, pos - lo as f64)
                };
                let (a, s) = grid(xs[0][0], table.len());
                let (b, t) = grid(xs[1][0], table[0].len());
                let top = table[a][b] * (1.0 - t) + table[a][b + 1] * t;
                let bottom = table[a + 1][b] * (1.0 - t) + table[a + 1][b + 1] * t;
                top * (1.0 - s) + bottom * s
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseModel {
    None,
    Uniform { b_e: f64 },
    /// Centered normal with standard deviation `sigma`, redrawn until it
    /// falls in `[-b_e, b_e]`.
    TruncatedGaussian { b_e: f64, sigma: f64 },
}

impl NoiseModel {
    pub fn bound(&self) -> f64 {
        match self {
            NoiseModel::None => 0.0,
            NoiseModel::Uniform { b_e } | NoiseModel::TruncatedGaussian { b_e, .. } => *b_e,
        }
    }

    /// Variance known in closed form; `None` for the truncated Gaussian.
    pub fn declared_variance(&self) -> Option<f64> {
        match self {
            NoiseModel::None => Some(0.0),
            NoiseModel::Uniform { b_e } => Some(b_e * b_e / 3.0),
            NoiseModel::TruncatedGaussian { .. } => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            NoiseModel::None => Ok(()),
            NoiseModel::Uniform { b_e } if b_e.is_finite() && *b_e >= 0.0 => Ok(()),
            NoiseModel::TruncatedGaussian { b_e, sigma }
                if b_e.is_finite() && *b_e > 0.0 && sigma.is_finite() && *sigma > 0.0 =>
            {
                Ok(())
            }
            other => Err(Error::InvalidParameter(format!("invalid noise model {other:?}"))),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseModel::None => 0.0,
            NoiseModel::Uniform { b_e } => (2.0 * rng.random::<f64>() - 1.0) * b_e,
            NoiseModel::TruncatedGaussian { b_e, sigma } => {
                let normal = Normal::new(0.0, *sigma).expect("validated sigma");
                loop {
                    let x: f64 = normal.sample(rng);
                    if x.abs() <= *b_e {
                        return x;
                    }
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatentModelSpec {
    /// `[m, n]` for a matrix, `[n_1, .., n_t]` for a tensor.
    pub shape: Vec<usize>,
    pub latent_measure: LatentMeasure,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub col_measure: Option<LatentMeasure>,
    pub latent_fn: LatentFn,
    /// Overrides the built-in Lipschitz constant of `latent_fn`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    pub noise: NoiseModel,
    pub p: f64,
    pub seed: u64,
}

impl LatentModelSpec {
    pub fn matrix(m: usize, n: usize, measure: LatentMeasure, latent_fn: LatentFn, noise: NoiseModel, p: f64, seed: u64) -> Self {
        LatentModelSpec {
            shape: vec![m, n],
            latent_measure: measure,
            col_measure: None,
            latent_fn,
            lipschitz: None,
            noise,
            p,
            seed,
        }
    }

    pub fn col_measure(&self) -> &LatentMeasure {
        self.col_measure.as_ref().unwrap_or(&self.latent_measure)
    }

    pub fn validate(&self) -> Result<()> {
        if self.shape.len() < 2 || self.shape.contains(&0) {
            return Err(Error::InvalidParameter(format!(
                "shape {:?} needs at least two positive dimensions",
                self.shape
            )));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::InvalidParameter(format!("p = {} outside (0, 1]", self.p)));
        }
        self.latent_measure.validate()?;
        self.col_measure().validate()?;
        let d = self.latent_measure.dim();
        if self.col_measure().dim() != d {
            return Err(Error::InvalidParameter("row and column latents differ in dimension".into()));
        }
        self.latent_fn.validate(self.shape.len(), d)?;
        if let Some(l) = self.lipschitz {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidParameter(format!("Lipschitz constant {l} must be positive")));
            }
        }
        self.noise.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeLatents {
    pub features: Vec<Vec<f64>>,
    /// Atom index per entry for finite-support measures.
    pub atoms: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticInstance {
    pub spec: LatentModelSpec,
    /// Truth in lexicographic cell order.
    pub truth: Vec<f64>,
    pub observed: ObservationTensor,
    pub latents: Vec<ModeLatents>,
    pub lipschitz: f64,
    pub value_bound: f64,
    /// `L * D_X + 2 B_e` with `D_X = 1`.
    pub b0: f64,
    pub gamma_sq_declared: Option<f64>,
    /// Mean squared noise over the observed cells (0 if none are observed).
    pub gamma_sq_realized: f64,
}

impl SyntheticInstance {
    pub fn shape(&self) -> &[usize] {
        &self.spec.shape
    }

    fn require_matrix(&self) -> Result<(usize, usize)> {
        match self.shape() {
            [m, n] => Ok((*m, *n)),
            s => Err(Error::ShapeMismatch(format!("instance of shape {s:?} is not a matrix"))),
        }
    }

    pub fn truth_matrix(&self) -> Result<DenseMatrix> {
        let (m, n) = self.require_matrix()?;
        DenseMatrix::from_vec(m, n, self.truth.clone())
    }

    pub fn observed_matrix(&self) -> Result<ObservationMatrix> {
        let (m, n) = self.require_matrix()?;
        ObservationMatrix::new(m, n, self.observed.entries().iter().map(|(c, v)| (c[0], c[1], *v)))
    }

    pub fn truth_at(&self, coords: &[usize]) -> f64 {
        let flat = coords.iter().zip(self.shape()).fold(0, |acc, (&c, &d)| acc * d + c);
        self.truth[flat]
    }
}

fn draw_latents(measure: &LatentMeasure, count: usize, rng: &mut ChaCha8Rng) -> ModeLatents {
    match measure {
        LatentMeasure::UniformCube { d } => ModeLatents {
            features: (0..count).map(|_| (0..*d).map(|_| rng.random::<f64>()).collect()).collect(),
            atoms: None,
        },
        LatentMeasure::FiniteSupport { atoms, probs } => {
            let dist = WeightedIndex::new(probs).expect("validated probabilities");
            let picks: Vec<usize> = (0..count).map(|_| dist.sample(rng)).collect();
            ModeLatents {
                features: picks.iter().map(|&a| atoms[a].clone()).collect(),
                atoms: Some(picks),
            }
        }
    }
}

pub fn sample_instance(spec: &LatentModelSpec) -> Result<SyntheticInstance> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let shape = &spec.shape;
    let latents: Vec<ModeLatents> = shape
        .iter()
        .enumerate()
        .map(|(q, &len)| {
            let measure = if q == 0 { &spec.latent_measure } else { spec.col_measure() };
            draw_latents(measure, len, &mut rng)
        })
        .collect();

    let total: usize = shape.iter().product();
    let mut truth = Vec::with_capacity(total);
    let mut entries = Vec::new();
    let mut noise_sq = 0.0;
    let mut coords = vec![0usize; shape.len()];
    for _ in 0..total {
        let xs: Vec<&[f64]> = coords
            .iter()
            .zip(&latents)
            .map(|(&c, mode)| mode.features[c].as_slice())
            .collect();
        let a = spec.latent_fn.eval(&xs);
        truth.push(a);
        if rng.random::<f64>() < spec.p {
            let eta = spec.noise.sample(&mut rng);
            noise_sq += eta * eta;
            entries.push((coords.clone(), a + eta));
        }
        for (c, &d) in coords.iter_mut().zip(shape).rev() {
            *c += 1;
            if *c < d {
                break;
            }
            *c = 0;
        }
    }

    let gamma_sq_realized = if entries.is_empty() { 0.0 } else { noise_sq / entries.len() as f64 };
    let order = shape.len();
    let lipschitz = spec.lipschitz.unwrap_or_else(|| spec.latent_fn.lipschitz());
    Ok(SyntheticInstance {
        observed: ObservationTensor::new(shape.clone(), entries)?,
        truth,
        latents,
        lipschitz,
        value_bound: spec.latent_fn.value_bound(order),
        b0: lipschitz + 2.0 * spec.noise.bound(),
        gamma_sq_declared: spec.noise.declared_variance(),
        gamma_sq_realized,
        spec: spec.clone(),
    })
}

fn check_probabilities(probs: &[f64]) -> Result<()> {
    if probs.is_empty() || probs.iter().any(|&q| !(q.is_finite() && q > 0.0)) {
        return Err(Error::InvalidParameter("probabilities must be positive".into()));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

/// Ball-mass underestimator for the uniform measure on `[0,1]^d`.
pub fn phi_uniform_cube(r: f64, d: usize) -> Result<f64> {
    if !(r > 0.0) || d == 0 {
        return Err(Error::InvalidParameter(format!("need r > 0 and d >= 1, got r = {r}, d = {d}")));
    }
    Ok((r / 2.0).powi(d as i32).min(1.0))
}

/// Ball-mass underestimator for a finitely supported measure.
pub fn phi_finite_support(probs: &[f64]) -> Result<f64> {
    check_probabilities(probs)?;
    Ok(probs.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Population variance (denominator `n`) of `A(u, j) - A(v, j)` over all columns.
pub fn sigma_sq_oracle(truth: &DenseMatrix, u: usize, v: usize) -> f64 {
    let n = truth.ncols() as f64;
    let diffs: Vec<f64> = truth.row(u).iter().zip(truth.row(v)).map(|(a, b)| a - b).collect();
    let mean = diffs.iter().sum::<f64>() / n;
    diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(d: usize) -> LatentMeasure {
        LatentMeasure::UniformCube { d }
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi_uniform_cube(2.0, 3).unwrap(), 1.0);
        assert_eq!(phi_uniform_cube(5.0, 1).unwrap(), 1.0);
        assert_eq!(phi_uniform_cube(1.0, 1).unwrap(), 0.5);
        assert_eq!(phi_uniform_cube(1.0, 2).unwrap(), 0.25);
        assert!(phi_uniform_cube(0.0, 1).is_err());
        assert_eq!(phi_finite_support(&[0.25; 4]).unwrap(), 0.25);
        assert_eq!(phi_finite_support(&[0.5, 0.3, 0.2]).unwrap(), 0.2);
        assert_eq!(phi_finite_support(&[1.0]).unwrap(), 1.0);
        assert!(phi_finite_support(&[0.5, 0.6]).is_err());
        assert!(phi_finite_support(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn sigma_oracle_by_hand() {
        let truth = DenseMatrix::from_vec(2, 3, vec![2.0, 3.0, 0.0, 1.0, 2.0, 2.0]).unwrap();
        assert!((sigma_sq_oracle(&truth, 0, 1) - 2.0).abs() < 1e-15);
        assert_eq!(sigma_sq_oracle(&truth, 0, 0), 0.0);
    }

    #[test]
    fn noiseless_and_full_observation() {
        let spec = LatentModelSpec::matrix(8, 9, cube(2), LatentFn::Bilinear, NoiseModel::None, 1.0, 3);
        let inst = sample_instance(&spec).unwrap();
        assert_eq!(inst.observed.len(), 72);
        let truth = inst.truth_matrix().unwrap();
        for (c, v) in inst.observed.entries() {
            assert_eq!(truth.get(c[0], c[1]), *v);
        }
        assert_eq!(inst.gamma_sq_realized, 0.0);
    }

    #[test]
    fn additive_minors_vanish() {
        let spec = LatentModelSpec::matrix(10, 10, cube(1), LatentFn::Additive, NoiseModel::None, 0.5, 11);
        let a = sample_instance(&spec).unwrap().truth_matrix().unwrap();
        for u in 0..10 {
            for v in 0..10 {
                for i in 0..10 {
                    for j in 0..10 {
                        let minor = a.get(u, i) - a.get(u, j) - a.get(v, i) + a.get(v, j);
                        assert!(minor.abs() < 1e-12);
                    }
                }
            }
        }
        for u in 0..10 {
            for v in 0..10 {
                assert!(sigma_sq_oracle(&a, u, v) < 1e-24);
            }
        }
    }

    #[test]
    fn noise_stays_within_bound() {
        for noise in [
            NoiseModel::Uniform { b_e: 0.3 },
            NoiseModel::TruncatedGaussian { b_e: 0.2, sigma: 0.5 },
        ] {
            let spec = LatentModelSpec::matrix(20, 20, cube(1), LatentFn::LogisticOfSum, noise, 0.7, 5);
            let inst = sample_instance(&spec).unwrap();
            let b = spec.noise.bound();
            for (c, v) in inst.observed.entries() {
                assert!((v - inst.truth_at(c)).abs() <= b);
            }
            assert!(inst.gamma_sq_realized > 0.0 && inst.gamma_sq_realized <= b * b);
        }
        assert_eq!(NoiseModel::Uniform { b_e: 0.3 }.declared_variance(), Some(0.03));
    }

    #[test]
    fn seed_determinism() {
        let spec = LatentModelSpec::matrix(15, 12, cube(2), LatentFn::MaxMinusDistance, NoiseModel::Uniform { b_e: 0.1 }, 0.4, 9);
        assert_eq!(sample_instance(&spec).unwrap(), sample_instance(&spec).unwrap());
        let other = LatentModelSpec { seed: 10, ..spec.clone() };
        assert_ne!(sample_instance(&spec).unwrap().truth, sample_instance(&other).unwrap().truth);
    }

    #[test]
    fn finite_support_records_atoms() {
        let measure = LatentMeasure::FiniteSupport {
            atoms: vec![vec![0.0], vec![0.5], vec![1.0]],
            probs: vec![0.2, 0.3, 0.5],
        };
        let spec = LatentModelSpec {
            col_measure: Some(cube(1)),
            ..LatentModelSpec::matrix(30, 5, measure, LatentFn::LogisticOfSum, NoiseModel::None, 1.0, 1)
        };
        let inst = sample_instance(&spec).unwrap();
        let atoms = inst.latents[0].atoms.as_ref().unwrap();
        assert_eq!(atoms.len(), 30);
        assert!(inst.latents[1].atoms.is_none());
        let a = inst.truth_matrix().unwrap();
        for u in 0..30 {
            for v in 0..30 {
                if atoms[u] == atoms[v] {
                    assert_eq!(a.row(u), a.row(v));
                }
            }
        }
    }

    #[test]
    fn tensor_instance() {
        let spec = LatentModelSpec {
            shape: vec![3, 4, 5],
            ..LatentModelSpec::matrix(0, 0, cube(1), LatentFn::Additive, NoiseModel::None, 1.0, 2)
        };
        let inst = sample_instance(&spec).unwrap();
        assert_eq!(inst.truth.len(), 60);
        assert_eq!(inst.observed.len(), 60);
        assert!(inst.truth_matrix().is_err());
        let x = |q: usize, a: usize| inst.latents[q].features[a][0];
        let expect = x(0, 2) + x(1, 3).powi(2) + x(2, 4);
        assert!((inst.truth_at(&[2, 3, 4]) - expect).abs() < 1e-15);
    }

    #[test]
    fn custom_table_interpolates() {
        let f = LatentFn::CustomTable {
            table: vec![vec![0.0, 1.0], vec![2.0, 4.0]],
        };
        assert_eq!(f.eval(&[&[0.0], &[0.0]]), 0.0);
        assert_eq!(f.eval(&[&[1.0], &[1.0]]), 4.0);
        assert_eq!(f.eval(&[&[0.5], &[0.5]]), 1.75);
        assert_eq!(f.lipschitz(), 3.0);
        let spec = LatentModelSpec {
            shape: vec![2, 2, 2],
            ..LatentModelSpec::matrix(0, 0, cube(1), f, NoiseModel::None, 1.0, 0)
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn invalid_specs() {
        let base = LatentModelSpec::matrix(4, 4, cube(1), LatentFn::Bilinear, NoiseModel::None, 0.5, 0);
        assert!(LatentModelSpec { p: 0.0, ..base.clone() }.validate().is_err());
        assert!(LatentModelSpec { p: 1.5, ..base.clone() }.validate().is_err());
        assert!(LatentModelSpec { noise: NoiseModel::Uniform { b_e: -1.0 }, ..base.clone() }.validate().is_err());
        assert!(LatentModelSpec { col_measure: Some(cube(2)), ..base.clone() }.validate().is_err());
        assert!(LatentModelSpec { shape: vec![4], ..base.clone() }.validate().is_err());
        assert!(base.validate().is_ok());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = LatentModelSpec::matrix(5, 6, cube(2), LatentFn::LogisticOfSum, NoiseModel::Uniform { b_e: 0.1 }, 0.5, 4);
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<LatentModelSpec>(&text).unwrap(), spec);
    }
}
