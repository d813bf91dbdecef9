//! One PASS/FAIL line per acceptance criterion; exits non-zero on any failure.

mod common;

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use common::{dense, random_matrix, u_statistic};
use latentnn::estimator::{complete_matrix, knn_estimate, weighted_estimate, EstimatorConfig, Provenance, Target, Variant};
use latentnn::evalbound::{matrix_mse_bound, matrix_tail_bound, tensor_mse_bound, BoundParams, TensorBoundParams};
use latentnn::obsdata::DenseMatrix;
use latentnn::simstats::{no_exclusion, pair_stats, PairStats};
use latentnn::synthgen::{sample_instance, sigma_sq_oracle, LatentFn, LatentMeasure, LatentModelSpec, NoiseModel};
use latentnn::tensorize::{excluded_columns, flatten_index, optimal_partition, unflatten_index, FlatteningPlan, PartitionMode};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_latentnn"))
}

fn run_cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = bin().current_dir(dir).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr).trim()))
    }
}

fn knn(k: usize, beta: usize) -> EstimatorConfig {
    EstimatorConfig { k, beta_low: beta, ..EstimatorConfig::default() }
}

fn additive_exactness() -> Outcome {
    let spec = LatentModelSpec::matrix(50, 50, LatentMeasure::UniformCube { d: 1 }, LatentFn::Additive, NoiseModel::None, 0.5, 1);
    let start = Instant::now();
    let inst = sample_instance(&spec).map_err(|e| e.to_string())?;
    let obs = inst.observed_matrix().map_err(|e| e.to_string())?;
    let est = complete_matrix(&obs, &knn(5, 2), Target::AllEntries).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let truth = inst.truth_matrix().map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut cells = 0;
    for u in 0..50 {
        for i in 0..50 {
            if est.provenance(u, i) == Provenance::Estimated {
                worst = worst.max((est.get(u, i) - truth.get(u, i)).abs());
                cells += 1;
            }
        }
    }
    check(
        worst <= 1e-10 && secs < 10.0 && cells > 0,
        format!("max error {worst:.2e} over {cells} estimated cells in {secs:.2}s"),
    )
}

fn duplicate_type_exactness() -> Outcome {
    let (mut estimated, mut shared, mut inexact) = (0usize, 0usize, 0usize);
    for seed in 0..10 {
        let spec = LatentModelSpec {
            col_measure: Some(LatentMeasure::UniformCube { d: 1 }),
            ..LatentModelSpec::matrix(
                60,
                60,
                LatentMeasure::FiniteSupport { atoms: vec![vec![0.1], vec![0.5], vec![0.9]], probs: vec![1.0 / 3.0; 3] },
                LatentFn::LogisticOfSum,
                NoiseModel::None,
                0.5,
                seed,
            )
        };
        let inst = sample_instance(&spec).map_err(|e| e.to_string())?;
        let obs = inst.observed_matrix().map_err(|e| e.to_string())?;
        let truth = inst.truth_matrix().map_err(|e| e.to_string())?;
        let atoms = inst.latents[0].atoms.clone().ok_or("row latents carry no atom labels")?;
        for u in 0..60 {
            for i in 0..60 {
                if obs.is_observed(u, i) {
                    continue;
                }
                let e = knn_estimate(&obs, u, i, &knn(1, 2)).map_err(|e| e.to_string())?;
                if e.provenance != Provenance::Estimated {
                    continue;
                }
                estimated += 1;
                if atoms[e.neighbors[0]] == atoms[u] {
                    shared += 1;
                    if (e.value - truth.get(u, i)).abs() > 1e-12 {
                        inexact += 1;
                    }
                }
            }
        }
    }
    let frac = shared as f64 / estimated as f64;
    check(
        inexact == 0 && frac >= 0.95,
        format!("{shared}/{estimated} estimated cells use a same-atom neighbor ({:.2}%), {inexact} of them inexact", 100.0 * frac),
    )
}

fn mse_scaling() -> Outcome {
    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let start = Instant::now();
    run_cli(
        dir.path(),
        &[
            "sweep", "--sizes", "100,200,400", "--seeds", "10", "--latent-fn", "logistic-of-sum", "--d", "1", "--noise",
            "uniform", "--b-e", "0.1", "--p", "0.5", "--k", "auto", "--beta", "auto", "--out", "sweep.csv",
        ],
    )?;
    let secs = start.elapsed().as_secs_f64();
    let text = fs::read_to_string(dir.path().join("sweep.csv")).map_err(|e| e.to_string())?;
    let mut means = Vec::new();
    for size in ["100", "200", "400"] {
        let vals: Vec<f64> = text
            .lines()
            .skip(1)
            .filter(|l| l.split(',').next() == Some(size))
            .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
            .collect();
        if vals.len() != 10 {
            return Err(format!("expected 10 rows for size {size}, found {}", vals.len()));
        }
        means.push(vals.iter().sum::<f64>() / vals.len() as f64);
    }
    check(
        means[0] > means[1] && means[1] > means[2] && secs < 300.0,
        format!("mean MSE {:.3e} > {:.3e} > {:.3e} in {secs:.1}s", means[0], means[1], means[2]),
    )
}

fn variance_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut pairs, mut worst): (usize, f64) = (0, 0.0);
    let mut seed = 0;
    while pairs < 500 {
        let obs = random_matrix(20, 40, rng.random_range(0.2..0.9), seed);
        seed += 1;
        for _ in 0..10 {
            if pairs == 500 {
                break;
            }
            let (u, v) = (rng.random_range(0..20), rng.random_range(0..20));
            let s = pair_stats(&obs, u, v, no_exclusion).map_err(|e| e.to_string())?;
            let Some(var) = s.sample_var else { continue };
            let grid = dense(&obs);
            let diffs: Vec<f64> = (0..40).filter_map(|j| Some(grid[u][j]? - grid[v][j]?)).collect();
            let oracle = u_statistic(&diffs);
            let rel = if oracle == 0.0 { var.abs() } else { ((var - oracle) / oracle).abs() };
            worst = worst.max(rel);
            pairs += 1;
        }
    }
    check(worst <= 1e-10, format!("worst relative gap {worst:.2e} over {pairs} pairs"))
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

fn concentration() -> Outcome {
    let f = LatentFn::LogisticOfSum;
    let noise = NoiseModel::Uniform { b_e: 0.1 };
    let gamma_sq = noise.declared_variance().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pop: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
    let truth = DenseMatrix::from_fn(2, pop.len(), |r, j| f.eval(&[&[[0.2, 0.7][r]], &[pop[j]]]));
    let deltas: Vec<f64> = (0..pop.len()).map(|j| truth.get(0, j) - truth.get(1, j)).collect();
    let mu = deltas.iter().sum::<f64>() / deltas.len() as f64;
    // Both rows carry independent noise, so the difference has variance sigma^2 + 2 gamma^2.
    let target_var = sigma_sq_oracle(&truth, 0, 1) + 2.0 * gamma_sq;

    let mut medians = Vec::new();
    for size in [100usize, 10_000] {
        let (mut mean_err, mut var_err) = (Vec::new(), Vec::new());
        for _ in 0..200 {
            let diffs: Vec<f64> = (0..size)
                .map(|_| deltas[rng.random_range(0..deltas.len())] + noise.sample(&mut rng) - noise.sample(&mut rng))
                .collect();
            let s = PairStats::from_differences(&diffs);
            mean_err.push((s.mean_diff - mu).abs());
            var_err.push((s.sample_var.unwrap() - target_var).abs());
        }
        medians.push((median(mean_err), median(var_err)));
    }
    let (rm, rv) = (medians[0].0 / medians[1].0, medians[0].1 / medians[1].1);
    check(rm >= 3.0 && rv >= 3.0, format!("median error shrinks {rm:.1}x for the mean, {rv:.1}x for the variance"))
}

fn lambda_zero_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let cfg = EstimatorConfig { variant: Variant::UserItemGaussian, lambda: 0.0, beta_low: 2, ..EstimatorConfig::default() };
    let (mut cells, mut worst, mut seed): (usize, f64, u64) = (0, 0.0, 100);
    while cells < 100 {
        let obs = random_matrix(15, 15, 0.6, seed);
        seed += 1;
        let grid = dense(&obs);
        let overlap = |a: &dyn Fn(usize) -> Option<f64>, b: &dyn Fn(usize) -> Option<f64>| {
            (0..15).filter(|&x| a(x).is_some() && b(x).is_some()).count()
        };
        let (u, i) = (rng.random_range(0..15), rng.random_range(0..15));
        let mut terms = Vec::new();
        for v in (0..15).filter(|&v| v != u) {
            if overlap(&|j| grid[u][j], &|j| grid[v][j]) < 2 {
                continue;
            }
            for j in (0..15).filter(|&j| j != i) {
                if overlap(&|r| grid[r][i], &|r| grid[r][j]) < 2 {
                    continue;
                }
                if let (Some(zuj), Some(zvi), Some(zvj)) = (grid[u][j], grid[v][i], grid[v][j]) {
                    terms.push(zuj + zvi - zvj);
                }
            }
        }
        let est = weighted_estimate(&obs, u, i, &cfg).map_err(|e| e.to_string())?;
        if terms.is_empty() {
            if est.provenance != Provenance::Fallback {
                return Err(format!("empty neighborhood at ({u},{i}) was not a fallback"));
            }
            continue;
        }
        let mean = terms.iter().sum::<f64>() / terms.len() as f64;
        if est.terms != terms.len() {
            return Err(format!("term count {} vs oracle {}", est.terms, terms.len()));
        }
        worst = worst.max((est.value - mean).abs() / mean.abs().max(1.0));
        cells += 1;
    }
    check(worst <= 1e-12, format!("worst gap {worst:.2e} over {cells} cells"))
}

fn transpose_duality() -> Outcome {
    let mut compared = 0;
    for seed in 0..20 {
        let obs = random_matrix(25 + seed as usize, 30, 0.4, 1000 + seed);
        for k in [1, 3] {
            let item = complete_matrix(&obs, &EstimatorConfig { variant: Variant::ItemItem, ..knn(k, 2) }, Target::AllEntries)
                .map_err(|e| e.to_string())?;
            let user = complete_matrix(&obs.transpose(), &knn(k, 2), Target::AllEntries).map_err(|e| e.to_string())?.transpose();
            let same = item.values().as_slice().iter().zip(user.values().as_slice()).all(|(a, b)| a.to_bits() == b.to_bits());
            if !same || item != user {
                return Err(format!("mismatch on instance {seed} with k = {k}"));
            }
            compared += item.values().as_slice().len();
        }
    }
    Ok(format!("{compared} cells bit-identical over 40 runs"))
}

fn permutations(t: usize) -> Vec<Vec<usize>> {
    if t == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(t - 1) {
        for pos in 0..t {
            let mut q = p.clone();
            q.insert(pos, t - 1);
            out.push(q);
        }
    }
    out
}

fn flattening_suite() -> Outcome {
    let shape = vec![3, 4, 5];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..3 {
        let mut pi = vec![0, 1, 2];
        pi.shuffle(&mut rng);
        let plan = FlatteningPlan::new(shape.clone(), pi, rng.random_range(1..3)).map_err(|e| e.to_string())?;
        let mut seen = [false; 60];
        for a in 0..3 {
            for b in 0..4 {
                for c in 0..5 {
                    let (u, i) = flatten_index(&[a, b, c], &plan).map_err(|e| e.to_string())?;
                    if unflatten_index(u, i, &plan).map_err(|e| e.to_string())? != [a, b, c] {
                        return Err(format!("round trip failed at ({a},{b},{c})"));
                    }
                    let slot = u * plan.ncols() + i;
                    if seen[slot] {
                        return Err(format!("collision at ({u},{i})"));
                    }
                    seen[slot] = true;
                }
            }
        }
    }

    let mut plans = 0;
    for shape in [vec![3, 3], vec![2, 2, 2], vec![2, 3, 4]] {
        let t = shape.len();
        for pi in permutations(t) {
            for t1 in 1..t {
                let plan = FlatteningPlan::new(shape.clone(), pi.clone(), t1).map_err(|e| e.to_string())?;
                let want: usize = pi[t1..].iter().map(|&q| shape[q] - 1).product();
                for i in 0..plan.ncols() {
                    let filter = excluded_columns(i, &plan).map_err(|e| e.to_string())?;
                    let kept = (0..plan.ncols()).filter(|&j| !filter.excludes(j)).count();
                    if kept != want {
                        return Err(format!("|N_{i}| = {kept}, expected {want} for shape {shape:?} plan {pi:?}/{t1}"));
                    }
                }
                plans += 1;
            }
        }
    }

    for t in 2..=6 {
        let plan = optimal_partition(&vec![10; t], PartitionMode::User).map_err(|e| e.to_string())?;
        if plan.t2() != 2 * t / 3 {
            return Err(format!("order {t}: |I2| = {}, expected {}", plan.t2(), 2 * t / 3));
        }
    }
    Ok(format!("3 round-trip plans, {plans} exclusion plans, partition sizes for t = 2..6"))
}

fn golden(name: &str) -> Result<Value, String> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    serde_json::from_str(&fs::read_to_string(path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())
}

fn compare(report: &Value, expected: &Value, worst: &mut f64) -> Result<(), String> {
    for (key, want) in expected.as_object().ok_or("expected block is not an object")? {
        let want = want.as_f64().ok_or(format!("{key} is not numeric"))?;
        let got = report[key].as_f64().ok_or(format!("report lacks {key}"))?;
        let rel = if want == 0.0 { got.abs() } else { ((got - want) / want).abs() };
        *worst = worst.max(rel);
    }
    Ok(())
}

fn bound_calculators() -> Outcome {
    let base = BoundParams::uniform_cube(1000, 1000, 0.3, 1.0, 1, 0.1);
    for beta in [8.0, 27.0, 50.0, 1000.0, 12345.0] {
        let f2 = matrix_mse_bound(&BoundParams { beta, ..base.clone() }).map_err(|e| e.to_string())?.f2;
        if f2 != beta.powf(-1.0 / 3.0) || (f2 * beta.cbrt() - 1.0).abs() > 4.0 * f64::EPSILON {
            return Err(format!("F2 = {f2} at beta = {beta}"));
        }
    }

    let mut worst: f64 = 0.0;
    let m = golden("matrix_bound.json")?;
    let params: BoundParams = serde_json::from_value(m["params"].clone()).map_err(|e| e.to_string())?;
    let report = serde_json::to_value(matrix_mse_bound(&params).map_err(|e| e.to_string())?).unwrap();
    compare(&report, &m["expected"], &mut worst)?;
    let eps = m["tail"]["eps"].as_f64().unwrap();
    let tail = serde_json::to_value(matrix_tail_bound(&params, eps).map_err(|e| e.to_string())?).unwrap();
    compare(&tail, &serde_json::json!({"unclamped": m["tail"]["unclamped"], "bound": m["tail"]["bound"]}), &mut worst)?;

    let t = golden("tensor_bound.json")?;
    let params: TensorBoundParams = serde_json::from_value(t["params"].clone()).map_err(|e| e.to_string())?;
    let report = serde_json::to_value(tensor_mse_bound(&params).map_err(|e| e.to_string())?).unwrap();
    compare(&report, &t["expected"], &mut worst)?;
    check(worst <= 1e-12, format!("F2 exact; worst golden relative gap {worst:.2e}"))
}

fn determinism() -> Outcome {
    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let d = dir.path();
    let spec = r#"{"shape": [120, 90], "latent_measure": {"kind": "uniform-cube", "d": 2},
        "latent_fn": {"kind": "bilinear"}, "noise": {"kind": "uniform", "b_e": 0.2}, "p": 0.3, "seed": 10}"#;
    fs::write(d.join("spec.json"), spec).map_err(|e| e.to_string())?;
    run_cli(d, &["synth", "--spec", "spec.json", "--out-dir", "s"])?;
    let mut outputs: Vec<Vec<Vec<u8>>> = Vec::new();
    for (run, threads) in ["1", "8", "1", "8"].into_iter().enumerate() {
        let tag = format!("{run}");
        run_cli(
            d,
            &[
                "complete", "--input", "s/observed.csv", "--k", "3", "--beta", "4", "--target", "all-entries",
                "--out", &format!("e{tag}.csv"), "--report", &format!("r{tag}.json"), "--threads", threads,
            ],
        )?;
        run_cli(
            d,
            &["sweep", "--sizes", "40,60", "--seeds", "3", "--out", &format!("w{tag}.csv"), "--threads", threads],
        )?;
        let read = |f: String| fs::read(d.join(f)).map_err(|e| e.to_string());
        outputs.push(vec![read(format!("e{tag}.csv"))?, read(format!("r{tag}.json"))?, read(format!("w{tag}.csv"))?]);
    }
    let same = outputs.iter().all(|o| *o == outputs[0]);
    check(same, "complete estimates, report and sweep CSV identical across 1 and 8 workers and two runs".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("additive exactness", additive_exactness),
        ("duplicate-type exactness", duplicate_type_exactness),
        ("MSE scaling", mse_scaling),
        ("variance formula equivalence", variance_equivalence),
        ("concentration trend", concentration),
        ("gaussian kernel lambda = 0 identity", lambda_zero_identity),
        ("transpose duality", transpose_duality),
        ("flattening suite", flattening_suite),
        ("bound calculators", bound_calculators),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (n, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("acceptance {} PASS: {name}: {detail}", n + 1),
            Err(detail) => {
                failed += 1;
                println!("acceptance {} FAIL: {name}: {detail}", n + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
