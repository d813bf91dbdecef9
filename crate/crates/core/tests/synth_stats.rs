use latentnn::synthgen::{sample_instance, LatentFn, LatentMeasure, LatentModelSpec, NoiseModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn point(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random::<f64>()).collect()
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

#[test]
fn builtin_functions_respect_declared_lipschitz() {
    let table = vec![vec![0.0, 0.5, 0.2], vec![1.0, 0.3, 0.9], vec![0.4, 0.4, 0.0]];
    let fns = [
        (LatentFn::Additive, 3),
        (LatentFn::Bilinear, 3),
        (LatentFn::LogisticOfSum, 3),
        (LatentFn::MaxMinusDistance, 3),
        (LatentFn::CustomTable { table }, 1),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (f, d) in fns {
        let l = f.lipschitz();
        for _ in 0..1000 {
            let (x, x2, y) = (point(&mut rng, d), point(&mut rng, d), point(&mut rng, d));
            let gap = (f.eval(&[&x, &y]) - f.eval(&[&x2, &y])).abs();
            assert!(gap <= l * sup_dist(&x, &x2) * (1.0 + 1e-9) + 1e-15, "{f:?} row argument");
            let gap = (f.eval(&[&y, &x]) - f.eval(&[&y, &x2])).abs();
            assert!(gap <= l * sup_dist(&x, &x2) * (1.0 + 1e-9) + 1e-15, "{f:?} column argument");
            assert!(f.eval(&[&x, &y]).abs() <= f.value_bound(2) + 1e-12);
        }
    }
}

fn big_spec(noise: NoiseModel, p: f64, seed: u64) -> LatentModelSpec {
    LatentModelSpec::matrix(
        400,
        250,
        LatentMeasure::UniformCube { d: 1 },
        LatentFn::Bilinear,
        noise,
        p,
        seed,
    )
}

#[test]
fn uniform_noise_moments() {
    let b_e = 0.5;
    let inst = sample_instance(&big_spec(NoiseModel::Uniform { b_e }, 1.0, 5)).unwrap();
    let truth = inst.truth_matrix().unwrap();
    let noise: Vec<f64> = inst
        .observed_matrix()
        .unwrap()
        .entries()
        .map(|(u, i, z)| z - truth.get(u, i))
        .collect();
    assert_eq!(noise.len(), 100_000);
    let n = noise.len() as f64;
    let mean = noise.iter().sum::<f64>() / n;
    let var = noise.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1.0);
    let gamma_sq = b_e * b_e / 3.0;
    assert_eq!(inst.gamma_sq_declared, Some(gamma_sq));
    assert!(mean.abs() <= 4.0 * gamma_sq.sqrt() / n.sqrt(), "mean {mean}");
    assert!((var / gamma_sq - 1.0).abs() < 0.05, "variance {var}");
    assert!(noise.iter().all(|e| e.abs() <= b_e));
}

#[test]
fn truncated_gaussian_noise_is_bounded() {
    let inst = sample_instance(&big_spec(NoiseModel::TruncatedGaussian { b_e: 0.3, sigma: 0.2 }, 0.5, 6)).unwrap();
    let truth = inst.truth_matrix().unwrap();
    for (u, i, z) in inst.observed_matrix().unwrap().entries() {
        assert!((z - truth.get(u, i)).abs() <= 0.3);
    }
    assert!(inst.gamma_sq_declared.is_none());
    assert!(inst.gamma_sq_realized > 0.0 && inst.gamma_sq_realized < 0.04);
}

#[test]
fn mask_density_matches_p() {
    let p = 0.3;
    let inst = sample_instance(&big_spec(NoiseModel::None, p, 7)).unwrap();
    let n = 100_000.0;
    let density = inst.observed.len() as f64 / n;
    assert!((density - p).abs() <= 4.0 * (p * (1.0 - p) / n).sqrt(), "density {density}");
}

#[test]
fn sampling_is_seed_deterministic() {
    let spec = big_spec(NoiseModel::Uniform { b_e: 0.1 }, 0.2, 42);
    let a = sample_instance(&spec).unwrap();
    let b = sample_instance(&spec).unwrap();
    assert_eq!(a.truth, b.truth);
    assert_eq!(a.observed, b.observed);
    let c = sample_instance(&LatentModelSpec { seed: 43, ..spec }).unwrap();
    assert_ne!(a.observed, c.observed);
}

#[test]
fn finite_support_latents_hit_atoms() {
    let atoms = vec![vec![0.1], vec![0.5], vec![0.9]];
    let spec = LatentModelSpec::matrix(
        300,
        20,
        LatentMeasure::FiniteSupport { atoms: atoms.clone(), probs: vec![0.2, 0.3, 0.5] },
        LatentFn::LogisticOfSum,
        NoiseModel::None,
        0.5,
        9,
    );
    let inst = sample_instance(&spec).unwrap();
    let rows = &inst.latents[0];
    let which = rows.atoms.as_ref().unwrap();
    let mut counts = [0usize; 3];
    for (x, &a) in rows.features.iter().zip(which) {
        assert_eq!(x, &atoms[a]);
        counts[a] += 1;
    }
    assert!(counts[0] > 30 && counts[2] > 110, "{counts:?}");
}
