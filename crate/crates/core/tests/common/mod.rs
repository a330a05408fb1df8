#![allow(dead_code)]

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sezsim::model::{MatrixSchedule, Parameter, ParameterKind};
use sezsim::{parse_scenario, Enterprise, ParameterMatrix, Scenario, SystemMatrices, Zone};

pub fn fixture_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/reference/scenario.toml")
}

pub fn fixture() -> Scenario {
    parse_scenario(&fixture_path()).expect("reference fixture loads")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, t_max: usize) -> ParameterMatrix {
    let values = DMatrix::from_fn(n, t_max, |_, _| rng.random_range(-50.0..50.0));
    let names = (1..=n).map(|i| format!("p{i}")).collect();
    ParameterMatrix::new("random", names, values).unwrap()
}

/// Pearson correlation of two columns written straight from the definition.
pub fn oracle_r(x: &ParameterMatrix, a: usize, b: usize) -> f64 {
    let v = x.values();
    let n = v.nrows();
    let mut mean_a = 0.0;
    let mut mean_b = 0.0;
    for j in 0..n {
        mean_a += v[(j, a - 1)];
        mean_b += v[(j, b - 1)];
    }
    mean_a /= n as f64;
    mean_b /= n as f64;
    let (mut num, mut da, mut db) = (0.0, 0.0, 0.0);
    for j in 0..n {
        let ea = v[(j, a - 1)] - mean_a;
        let eb = v[(j, b - 1)] - mean_b;
        num += ea * eb;
        da += ea * ea;
        db += eb * eb;
    }
    if da == 0.0 || db == 0.0 {
        return 0.0;
    }
    num / (da.sqrt() * db.sqrt())
}

/// 60 periods over `n` parameters: a shared profile plus small noise
/// through `last_common`, independent noise afterwards.
pub fn common_factor_matrix(seed: u64, n: usize, last_common: usize) -> ParameterMatrix {
    let mut rng = rng(seed);
    let profile: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
    let values = DMatrix::from_fn(n, 60, |j, t| {
        let noise: f64 = rng.random_range(-1.0..1.0);
        if t < last_common {
            profile[j] + 0.5 * noise
        } else {
            5.0 * noise
        }
    });
    ParameterMatrix::new(
        "synthetic",
        (1..=n).map(|i| format!("p{i}")).collect(),
        values,
    )
    .unwrap()
}

/// A zone of `count` enterprises with `n` parameters each and stable random dynamics.
pub fn large_zone(seed: u64, count: usize, n: usize) -> Zone {
    let mut rng = rng(seed);
    let enterprises = (0..count)
        .map(|k| {
            let mut m = SystemMatrices::zeros(n);
            m.a = DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    0.6
                } else {
                    rng.random_range(0.0..0.3 / n as f64)
                }
            });
            m.b = DMatrix::from_fn(n, 9, |_, _| rng.random_range(0.0..100.0));
            m.e = DMatrix::from_fn(n, 10, |_, _| rng.random_range(0.0..1000.0));
            m.h = DMatrix::from_fn(1, n, |_, j| if j % 3 == 2 { -0.2 } else { 1.0 });
            let parameters = (0..n)
                .map(|i| Parameter {
                    name: format!("line{i}"),
                    kind: if i % 3 == 2 {
                        ParameterKind::Cost
                    } else {
                        ParameterKind::Income
                    },
                    export: i == 0,
                    distress_cut: i == 2,
                })
                .collect();
            Enterprise {
                id: format!("resident-{k}"),
                parameters,
                x0: DVector::from_fn(n, |_, _| rng.random_range(1e3..1e5)),
                matrices: MatrixSchedule::constant(m),
                export_share: 0.5,
                cash0: 1e5,
                assets0: 1e6,
                credit_rate: 0.12,
            }
        })
        .collect();
    Zone {
        id: "large".into(),
        enterprises,
        spectral_tolerance: Zone::DEFAULT_SPECTRAL_TOLERANCE,
    }
}

pub fn tree_files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((
                    p.strip_prefix(dir).unwrap().to_path_buf(),
                    std::fs::read(&p).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}
