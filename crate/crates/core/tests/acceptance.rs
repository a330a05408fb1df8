//! Acceptance suite: one PASS/FAIL line per criterion, then a single verdict.

mod common;

use std::io::Write;
use std::process::Command;
use std::time::{Duration, Instant};

use common::*;
use rand::seq::SliceRandom;
use rand::Rng;
use sezsim::dynamics::Epsilon;
use sezsim::pipeline::{run_once, Manifest};
use sezsim::policy::{disturbance_sensitivity, evaluate_measure};
use sezsim::{
    correlation_matrix, detect_structure_change, integral_indicator, run_pipeline, simulate,
    Control, CorrelationMatrix, Disturbance, IndicatorVariant, Mode, ParameterMatrix,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_cases() -> Vec<ParameterMatrix> {
    let mut rng = rng(0xC0_44E1);
    (0..100)
        .map(|_| {
            let n = rng.random_range(2..=10);
            let t = rng.random_range(4..=30);
            random_matrix(&mut rng, n, t)
        })
        .collect()
}

fn max_abs_diff(a: &CorrelationMatrix, b: &CorrelationMatrix) -> f64 {
    a.matrix()
        .iter()
        .zip(b.matrix().iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn correlation_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for x in random_cases() {
        let r = correlation_matrix(&x).unwrap();
        for a in 1..=x.t_max() {
            for b in 1..=x.t_max() {
                worst = worst.max((r.get(a, b) - oracle_r(&x, a, b)).abs());
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-12 && elapsed < Duration::from_secs(5),
        format!("max |R - oracle| = {worst:.2e} over 100 matrices in {elapsed:.2?}"),
    )
}

fn matrix_invariants() -> Outcome {
    let mut worst_sym = 0.0f64;
    let mut bad = Vec::new();
    for (k, x) in random_cases().into_iter().enumerate() {
        let r = correlation_matrix(&x).unwrap();
        let m = r.matrix();
        for t in 0..m.nrows() {
            let column = x.column(t + 1);
            let varies = column.iter().any(|&v| v != column[0]);
            if varies && m[(t, t)] != 1.0 {
                bad.push(format!("case {k}: diagonal {t} = {}", m[(t, t)]));
            }
            for s in 0..m.ncols() {
                worst_sym = worst_sym.max((m[(t, s)] - m[(s, t)]).abs());
                if !(-1.0..=1.0).contains(&m[(t, s)]) {
                    bad.push(format!("case {k}: entry ({t}, {s}) = {}", m[(t, s)]));
                }
            }
        }
    }
    outcome(
        worst_sym <= 1e-12 && bad.is_empty(),
        format!(
            "max asymmetry {worst_sym:.2e}, {} range/diagonal violations {:?}",
            bad.len(),
            bad.first()
        ),
    )
}

fn affine_permutation_invariance() -> Outcome {
    let mut rng = rng(7);
    let mut worst = 0.0f64;
    for x in random_cases() {
        let r = correlation_matrix(&x).unwrap();
        for alpha in [0.5, 2.0, 10.0] {
            for beta in [-3.0, 0.0, 7.0] {
                let values = x.values().map(|v| alpha * v + beta);
                let y = ParameterMatrix::new("affine", x.names().to_vec(), values).unwrap();
                worst = worst.max(max_abs_diff(&r, &correlation_matrix(&y).unwrap()));
            }
        }
        let mut order: Vec<usize> = (0..x.n()).collect();
        order.shuffle(&mut rng);
        let values = x.values().select_rows(order.iter());
        let names = order.iter().map(|&i| x.names()[i].clone()).collect();
        let y = ParameterMatrix::new("permuted", names, values).unwrap();
        worst = worst.max(max_abs_diff(&r, &correlation_matrix(&y).unwrap()));
    }
    outcome(
        worst <= 1e-9,
        format!("max |R - R'| = {worst:.2e} over 9 affine maps and a row permutation"),
    )
}

fn structural_break() -> Outcome {
    let broken = correlation_matrix(&common_factor_matrix(11, 12, 36)).unwrap();
    let intact = correlation_matrix(&common_factor_matrix(11, 12, 60)).unwrap();
    let breaks = detect_structure_change(&broken, 0.3);
    let g_broken = integral_indicator(&broken, IndicatorVariant::TotalAbs).scalar;
    let g_intact = integral_indicator(&intact, IndicatorVariant::TotalAbs).scalar;
    let synthetic_ok = breaks.len() == 1 && breaks[0].abs_diff(37) <= 1 && g_broken < g_intact;

    let s = fixture();
    let results = run_pipeline(&s, Mode::Compare).unwrap();
    let g = &results.damage.as_ref().unwrap().indicators[0];
    let fixture_ok = (25.0..=45.0).contains(&g.drop_pct);
    outcome(
        synthetic_ok && fixture_ok,
        format!(
            "synthetic break at {breaks:?}, G {g_broken:.1} vs {g_intact:.1} without break; \
             fixture G {:.1} -> {:.1} (drop {:.2}%)",
            g.baseline, g.sanctioned, g.drop_pct
        ),
    )
}

fn plan_equals_fact() -> Outcome {
    let mut s = fixture();
    s.planning.epsilon = Epsilon::default();
    let tr = simulate(&s.zone, &s.grid, &s.schedules, &[], &s.planning, s.seed).unwrap();
    let lag = s.planning.lag;
    let mut worst = 0.0f64;
    for e in &tr.enterprises {
        for t in (lag + 1)..=s.grid.t_max() {
            let d = (e.plan.column(t) - e.realized.column(t)).amax();
            worst = worst.max(d);
        }
    }
    outcome(
        worst == 0.0,
        format!("max |x*(t) - x(t)| = {worst:e} for t > {lag}"),
    )
}

fn sanctions_conservation() -> Outcome {
    let s = fixture();
    let base = simulate(&s.zone, &s.grid, &s.schedules, &[], &s.planning, s.seed).unwrap();
    let hit = simulate(
        &s.zone,
        &s.grid,
        &s.schedules,
        &s.regimes,
        &s.planning,
        s.seed,
    )
    .unwrap();
    let onset = s.regimes[0].onset;
    let mut identical = true;
    let mut worst_rel = 0.0f64;
    for (b, h) in base.enterprises.iter().zip(&hit.enterprises) {
        for t in 1..onset {
            let same = |x: &nalgebra::DVector<f64>, y: &nalgebra::DVector<f64>| {
                x.iter()
                    .zip(y.iter())
                    .all(|(p, q)| p.to_bits() == q.to_bits())
            };
            identical &= same(&b.realized.column(t), &h.realized.column(t));
            identical &= same(&b.plan.column(t), &h.plan.column(t));
            identical &= b.observations.column(t - 1) == h.observations.column(t - 1);
            identical &= b.cash[t - 1].to_bits() == h.cash[t - 1].to_bits();
        }
        for t in 1..=s.grid.t_max() {
            let produced: f64 = h.export_production[..t].iter().sum();
            let sold: f64 = h.export_sales[..t].iter().sum();
            let gap = (produced - sold - h.warehouse[t - 1]).abs() / produced.max(1.0);
            worst_rel = worst_rel.max(gap);
        }
    }
    outcome(
        identical && worst_rel <= 1e-9,
        format!("pre-onset bitwise identical: {identical}; max |production - sales - warehouse| / production = {worst_rel:.2e}"),
    )
}

fn default_timing() -> Outcome {
    let s = fixture();
    let premium = s.regimes[0].borrow_premium;
    let tr = simulate(
        &s.zone,
        &s.grid,
        &s.schedules,
        &s.regimes,
        &s.planning,
        s.seed,
    )
    .unwrap();
    let at = tr.enterprises[0].defaulted_at;
    outcome(
        premium == 0.10 && at.is_some_and(|t| t > 37 && t <= 49),
        format!("borrow premium {premium}, defaulted_at = {at:?}"),
    )
}

fn calibrated_anchors() -> Outcome {
    let s = fixture();
    let results = run_pipeline(&s, Mode::Compare).unwrap();
    let loss = results.damage.unwrap().loss_pct;
    let u6 = evaluate_measure(
        &s.zone,
        &s.grid,
        &s.schedules,
        Control::TransportSubsidy,
        0.2,
        &s.planning,
        s.seed,
    )
    .unwrap()
    .annual_grp_pct;
    let v10 = disturbance_sensitivity(
        &s.zone,
        &s.grid,
        &s.schedules,
        Disturbance::DollarRate,
        0.2,
        &s.planning,
        s.seed,
    )
    .unwrap()
    .annual_grp_pct;
    outcome(
        (loss - 17.3).abs() <= 2.0 && (u6 - 0.2).abs() <= 0.05 && (v10 - 2.0).abs() <= 0.5,
        format!("GRP loss {loss:.3}%, u6 +20% -> {u6:.4}%/yr, v10 +20% -> {v10:.4}%/yr"),
    )
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_sezsim");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let status = Command::new(bin)
            .args(["run", "--mode", "compare", "--scenario"])
            .arg(fixture_path())
            .arg("--out")
            .arg(d.path())
            .output()
            .unwrap();
        if !status.status.success() {
            return outcome(
                false,
                format!("run failed: {}", String::from_utf8_lossy(&status.stderr)),
            );
        }
    }
    let manifests = dirs.each_ref().map(|d| Manifest::read(d.path()).unwrap());
    let trees = dirs.each_ref().map(|d| tree_files(d.path()));
    outcome(
        manifests[0] == manifests[1] && trees[0] == trees[1],
        format!(
            "{} manifest entries, {} files compared byte for byte",
            manifests[0].entries.len(),
            trees[0].len()
        ),
    )
}

fn suite_timing(elapsed_so_far: Duration) -> Outcome {
    let s = fixture();
    let zone = large_zone(5, 8, 40);
    let start = Instant::now();
    let mut scenario = s.clone();
    scenario.zone = zone;
    scenario.regimes[0].target = None;
    let base = run_once(&scenario, "baseline", false).unwrap();
    let hit = run_once(&scenario, "sanctions", true).unwrap();
    let large = start.elapsed();
    let total = elapsed_so_far + large;
    outcome(
        base.analyses.len() == 8 && hit.analyses.len() == 8 && total < Duration::from_secs(60),
        format!("8 enterprises x 40 parameters x 60 periods, both runs analysed in {large:.2?}; acceptance total {total:.2?}"),
    )
}

#[test]
fn acceptance_criteria() {
    let start = Instant::now();
    let mut results: Vec<(usize, &str, Outcome)> = vec![
        (1, "correlation oracle equivalence", correlation_oracle()),
        (2, "correlation matrix invariants", matrix_invariants()),
        (
            3,
            "affine and permutation invariance",
            affine_permutation_invariance(),
        ),
        (4, "structural break reproduction", structural_break()),
        (5, "plan equals fact", plan_equals_fact()),
        (
            6,
            "sanctions conservation and identity",
            sanctions_conservation(),
        ),
        (7, "default timing", default_timing()),
        (8, "calibrated anchors", calibrated_anchors()),
        (9, "determinism of compare runs", determinism()),
    ];
    results.push((10, "wall-clock budget", suite_timing(start.elapsed())));

    let mut out = std::io::stdout().lock();
    writeln!(out).unwrap();
    for (k, name, o) in &results {
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        writeln!(out, "{verdict} criterion {k:>2} {name}: {}", o.detail).unwrap();
    }
    drop(out);
    let failed: Vec<usize> = results
        .iter()
        .filter(|(_, _, o)| !o.pass)
        .map(|(k, _, _)| *k)
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
