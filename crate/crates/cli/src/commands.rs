//! The four subcommands. Each one writes its artifacts through `RunWriter`
//! so every run ends with a hash-verified manifest.

use crate::config::{Config, DiagramsConfig};
use crate::manifest::RunWriter;
use anyhow::{bail, Context, Result};
use drcm::diagrams::{
    central_moment_oracle, classify, cumulant_oracle, joint_cumulant, mixed_central_moment,
    mixed_moment, mixed_moment_oracle, FiniteSpaceModel, Kernel, RowStructure,
};
use drcm::dynamics::{sample_trajectory, EventTimeline, Trajectory};
use drcm::rng::{derive_key, stream_rng, tag};
use drcm::stats::{
    calibration_gaussian, mean_with_se, run_replications, sample_covariance, sample_variance,
    ComparisonReport,
};
use drcm::theory::{Engine, IntegralMethod, Regime};
use rand::Rng;
use serde_json::json;
use std::fmt::Write as _;
use std::path::Path;

fn method_name(m: IntegralMethod) -> &'static str {
    match m {
        IntegralMethod::ClosedForm => "closed_form",
        IntegralMethod::Quadrature => "quadrature",
        IntegralMethod::MonteCarlo => "monte_carlo",
    }
}

/// Sample one path of the model, export the count step functions, and when
/// more than one replication is requested, the full sample tensor as well.
pub fn simulate(cfg: &Config, raw: &str, config_path: &Path, seed: u64, out: &Path) -> Result<i32> {
    let motifs = cfg.motif_graphs()?;
    let params = cfg.params()?;
    let spec = cfg.regime_spec(cfg.model.n, &motifs)?;
    let model = cfg.connection_model(&spec)?;
    let horizon = *cfg.grid.last().unwrap();
    let mut writer = RunWriter::new(out, "simulate", seed, config_path, raw)?;

    // The exported path is replication 0 of the batched runs: identical
    // stream derivations keep the two views of the data consistent.
    let mut point_rng = stream_rng(seed, &[tag::REPLICATION, 0, tag::POINTS]);
    let points = model.sample_points(&mut point_rng)?;
    let edge_seed = derive_key(seed, &[tag::REPLICATION, 0, tag::EDGES]);
    let potential = model.sample_potential_edges(&points, edge_seed, 1e-9)?;
    let mut traj_rng = stream_rng(seed, &[tag::REPLICATION, 0, tag::TRAJECTORY]);
    let trajectories: Vec<Trajectory> = (0..points.len())
        .map(|_| sample_trajectory(&params, horizon, &mut traj_rng))
        .collect::<Result<_, _>>()?;

    let timeline = EventTimeline::from_trajectories(&trajectories);
    let mut step_grid = vec![0.0];
    step_grid.extend(timeline.events.iter().map(|e| e.time));
    let process = drcm::counts::run_count_process(&motifs, &potential, &trajectories, &step_grid)?;
    let mut csv = String::from("t,motif,value\n");
    for (j, t) in process.grid.iter().enumerate() {
        for (k, name) in cfg.motifs.iter().enumerate() {
            writeln!(csv, "{t},{name},{}", process.values[k][j]).unwrap();
        }
    }
    writer.write("counts.csv", &csv)?;
    println!(
        "simulate: {} points, {} potential edges, {} events, regime {:?}, nu {}",
        points.len(),
        potential.edge_count(),
        timeline.events.len(),
        spec.regime,
        spec.nu
    );

    if cfg.replications >= 2 {
        let engine = Engine::new(cfg.profile()?, cfg.model.dim)?;
        let samples = run_replications(&cfg.experiment(seed)?)?;
        let centers: Vec<Vec<f64>> = motifs
            .iter()
            .map(|g| {
                let mean = engine.expected_count(spec.n, spec.nu, g, &params)?;
                Ok(vec![mean; cfg.grid.len()])
            })
            .collect::<Result<_>>()?;
        let scales: Vec<f64> = motifs.iter().map(|g| spec.psi(g.q(), &params)).collect();
        let normalized = samples.normalized(&centers, &scales)?;
        let mut csv = String::from("replication,motif,t,raw,normalized\n");
        for rep in 0..samples.n_reps() {
            for (k, name) in cfg.motifs.iter().enumerate() {
                for (j, t) in samples.grid.iter().enumerate() {
                    writeln!(
                        csv,
                        "{rep},{name},{t},{},{}",
                        samples.raw[rep][k][j], normalized.raw[rep][k][j]
                    )
                    .unwrap();
                }
            }
        }
        writer.write("samples.csv", &csv)?;
        println!("simulate: {} replications exported", samples.n_reps());
    }

    let manifest = writer.finish()?;
    println!("manifest: {}", manifest.display());
    Ok(0)
}

/// Evaluate profile integrals, exact count moments, and limit covariances,
/// and write them as a JSON report with per-value provenance.
pub fn theory(cfg: &Config, raw: &str, config_path: &Path, seed: u64, out: &Path) -> Result<i32> {
    let motifs = cfg.motif_graphs()?;
    let params = cfg.params()?;
    let spec = cfg.regime_spec(cfg.model.n, &motifs)?;
    let engine = Engine::new(cfg.profile()?, cfg.model.dim)?;
    let mut writer = RunWriter::new(out, "theory", seed, config_path, raw)?;

    let mut motif_rows = Vec::new();
    println!("{:<10} {:>12} {:<12} {:>10} {:>14}", "motif", "F", "method", "SE", "mean count");
    for (name, g) in cfg.motifs.iter().zip(&motifs) {
        let f = engine.f_of(g)?;
        let f_n = engine.f_n_of(g, spec.nu)?;
        let mean = engine.expected_count(spec.n, spec.nu, g, &params)?;
        println!(
            "{name:<10} {:>12.6} {:<12} {:>10.2e} {:>14.4}",
            f.value,
            method_name(f.method),
            f.std_error,
            mean
        );
        motif_rows.push(json!({
            "name": name,
            "order": g.q(),
            "automorphisms": g.automorphism_count(),
            "f": {"value": f.value, "std_error": f.std_error, "method": method_name(f.method)},
            "f_n": f_n,
            "expected_count": mean,
            "psi": spec.psi(g.q(), &params),
            "zeta": spec.zeta(g.q()),
        }));
    }

    let s0 = cfg.grid[0];
    let mut pair_rows = Vec::new();
    for i in 0..motifs.len() {
        for j in i..motifs.len() {
            let sigma: Vec<_> = cfg
                .grid
                .iter()
                .map(|&t| {
                    let v = engine.limit_sigma(&motifs[i], &motifs[j], s0, t, &params, spec.regime)?;
                    Ok(json!({"s": s0, "t": t, "value": v}))
                })
                .collect::<Result<_>>()?;
            pair_rows.push(json!({
                "i": cfg.motifs[i],
                "j": cfg.motifs[j],
                "f_plus": engine.f_plus(&motifs[i], &motifs[j])?,
                "f_minus": engine.f_minus(&motifs[i], &motifs[j])?,
                "exact_covariance_at_grid0": engine.covariance_counts(
                    spec.n, spec.nu, s0, s0, &motifs[i], &motifs[j], &params)?,
                "sigma_limit": sigma,
            }));
        }
    }

    // Ratio-statistic limits for equal-order pairs where one motif spans
    // the other. Dense values must vanish; sparse values divided by the
    // q-th power of the activity autocovariance must be constant.
    let mut ratio_rows = Vec::new();
    for i in 0..motifs.len() {
        for j in 0..motifs.len() {
            if i == j
                || motifs[i].q() != motifs[j].q()
                || !(motifs[i].contains_spanning(&motifs[j])
                    || motifs[j].contains_spanning(&motifs[i]))
            {
                continue;
            }
            let q = motifs[i].q() as i32;
            let mut rows = Vec::new();
            let mut scaled_values: Vec<f64> = Vec::new();
            let mut max_abs = 0.0f64;
            for &t in &cfg.grid {
                let v = engine.sigma_c(&motifs[i], &motifs[j], s0, t, &params, spec.regime)?;
                let scaled = v / params.z(t - s0).powi(q);
                scaled_values.push(scaled);
                max_abs = max_abs.max(v.abs());
                rows.push(json!({"s": s0, "t": t, "value": v, "scaled": scaled}));
            }
            let c0 = scaled_values[0];
            let spread = scaled_values
                .iter()
                .map(|c| (c - c0).abs())
                .fold(0.0f64, f64::max);
            ratio_rows.push(json!({
                "numerator": cfg.motifs[i],
                "denominator": cfg.motifs[j],
                "rows": rows,
                "scaled_constant": c0,
                "max_scaled_spread": spread,
                "max_abs_value": max_abs,
            }));
            if spec.regime == Regime::Sparse {
                println!(
                    "ratio {}/{}: sigma over Z^{q} constant {c0:.6} (spread {spread:.2e})",
                    cfg.motifs[i], cfg.motifs[j]
                );
            } else {
                println!(
                    "ratio {}/{}: dense limit max |value| {max_abs:.2e}",
                    cfg.motifs[i], cfg.motifs[j]
                );
            }
        }
    }

    let ladder_rows: Vec<_> = cfg
        .ladder
        .iter()
        .map(|&n| {
            let spec_n = cfg.regime_spec(n, &motifs)?;
            let per_motif: Vec<_> = motifs
                .iter()
                .map(|g| {
                    Ok(json!({
                        "order": g.q(),
                        "expected_count": engine.expected_count(spec_n.n, spec_n.nu, g, &params)?,
                        "psi": spec_n.psi(g.q(), &params),
                        "zeta": spec_n.zeta(g.q()),
                    }))
                })
                .collect::<Result<_>>()?;
            Ok(json!({"n": spec_n.n, "nu": spec_n.nu, "motifs": per_motif}))
        })
        .collect::<Result<_>>()?;

    let report = json!({
        "dim": cfg.model.dim,
        "profile": cfg.profile,
        "n": spec.n,
        "nu": spec.nu,
        "regime": format!("{:?}", spec.regime).to_lowercase(),
        "rates": {
            "mu": params.mu(),
            "lambda": params.lambda(),
            "stationary_probability": params.rho(),
            "z0": params.z(0.0),
        },
        "motifs": motif_rows,
        "pairs": pair_rows,
        "ratio": ratio_rows,
        "ladder": ladder_rows,
    });
    writer.write("theory.json", &serde_json::to_string_pretty(&report)?)?;
    let manifest = writer.finish()?;
    println!("manifest: {}", manifest.display());
    Ok(0)
}

fn oracle_sweep(seed: u64, models: usize, rel_tol: f64) -> Result<ComparisonReport> {
    let mut rng = stream_rng(seed, &[tag::CHECK, 2]);
    let mut worst = [0.0f64; 3];
    for _ in 0..models {
        let k = rng.gen_range(1..=3usize);
        let m = rng.gen_range(1..=3usize);
        let mut rows: Vec<usize>;
        loop {
            rows = (0..m).map(|_| rng.gen_range(1..=3usize)).collect();
            if rows.iter().sum::<usize>() <= 8 {
                break;
            }
        }
        let intensities: Vec<f64> = (0..k).map(|_| rng.gen_range(0.2..2.0)).collect();
        let model = FiniteSpaceModel::new(intensities)?;
        let kernels: Vec<Kernel> = rows
            .iter()
            .map(|&q| {
                let values = (0..k.pow(q as u32)).map(|_| rng.gen_range(-1.0..1.0)).collect();
                Ok(Kernel::new(q, k, values)?)
            })
            .collect::<Result<_>>()?;
        let pairs = [
            (mixed_moment(&model, &kernels)?, mixed_moment_oracle(&model, &kernels)?),
            (
                mixed_central_moment(&model, &kernels)?,
                central_moment_oracle(&model, &kernels)?,
            ),
            (joint_cumulant(&model, &kernels)?, cumulant_oracle(&model, &kernels)?),
        ];
        for (slot, (got, want)) in worst.iter_mut().zip(pairs) {
            let rel = (got - want).abs() / got.abs().max(want.abs()).max(1e-12);
            *slot = slot.max(rel);
        }
    }
    let mut rep = ComparisonReport::new(&format!(
        "moment formulas vs brute-force oracles ({models} random models)"
    ));
    rep.push_at_most("worst relative gap, mixed moments", worst[0], rel_tol);
    rep.push_at_most("worst relative gap, central moments", worst[1], rel_tol);
    rep.push_at_most("worst relative gap, joint cumulants", worst[2], rel_tol);
    Ok(rep)
}

/// Run the configured battery of checks; exit 0 only if every row passes.
pub fn verify(cfg: &Config, raw: &str, config_path: &Path, seed: u64, out: &Path) -> Result<i32> {
    let tol = &cfg.tolerances;
    let mut writer = RunWriter::new(out, "verify", seed, config_path, raw)?;
    let mut sections = vec![
        calibration_gaussian(derive_key(seed, &[tag::CHECK, 1]), 2000)?,
        oracle_sweep(seed, tol.oracle_models, tol.oracle_rel)?,
    ];

    if !tol.diagrams_only {
        let motifs = cfg.motif_graphs()?;
        let params = cfg.params()?;
        let spec = cfg.regime_spec(cfg.model.n, &motifs)?;
        let engine = Engine::new(cfg.profile()?, cfg.model.dim)?;
        let samples = run_replications(&cfg.experiment(seed)?)?;
        let mut sim = ComparisonReport::new(&format!(
            "simulation vs exact moments ({} replications)",
            cfg.replications
        ));
        for (k, name) in cfg.motifs.iter().enumerate() {
            let want = engine.expected_count(spec.n, spec.nu, &motifs[k], &params)?;
            for (j, &t) in cfg.grid.iter().enumerate() {
                let (m, se) = mean_with_se(&samples.column(k, j)?)?;
                sim.push_at_most(
                    &format!("|z| of mean [{name} @ t={t}]"),
                    ((m - want) / se).abs(),
                    tol.mean_z,
                );
            }
            let var = sample_variance(&samples.column(k, 0)?)?;
            let want_var = engine.covariance_counts(
                spec.n, spec.nu, s0(cfg), s0(cfg), &motifs[k], &motifs[k], &params,
            )?;
            sim.push_rel(&format!("variance [{name}]"), var, want_var, tol.cov_rel);
        }
        if motifs.len() >= 2 {
            let a = samples.column(0, 0)?;
            let b = samples.column(1, 0)?;
            let want = engine.covariance_counts(
                spec.n, spec.nu, s0(cfg), s0(cfg), &motifs[0], &motifs[1], &params,
            )?;
            sim.push_rel(
                &format!("covariance [{} vs {}]", cfg.motifs[0], cfg.motifs[1]),
                sample_covariance(&a, &b)?,
                want,
                tol.cov_rel,
            );
        }
        sections.push(sim);
    }

    for section in &sections {
        print!("{}", section.render());
    }
    writer.write("verify_report.json", &serde_json::to_string_pretty(&sections)?)?;
    let manifest = writer.finish()?;
    println!("manifest: {}", manifest.display());
    Ok(if sections.iter().all(|s| s.all_pass()) { 0 } else { 1 })
}

fn s0(cfg: &Config) -> f64 {
    cfg.grid[0]
}

/// Evaluate the finite-space moment formulas for one row structure against
/// the brute-force oracles; exit 0 only if all three deltas are tiny.
pub fn diagrams(
    rows: &[usize],
    cfg: &DiagramsConfig,
    raw: &str,
    config_path: &Path,
    seed: u64,
    out: &Path,
) -> Result<i32> {
    if rows.is_empty() {
        bail!("--rows needs at least one row size, e.g. --rows 2,2");
    }
    let rs = RowStructure::new(rows.to_vec()).context("invalid row structure")?;
    let model = FiniteSpaceModel::new(cfg.intensities.clone())?;
    let k = model.k();
    let kernels: Vec<Kernel> = match &cfg.kernels {
        Some(sections) => {
            if sections.len() != rows.len() {
                bail!("need one kernel per row: {} rows, {} kernels", rows.len(), sections.len());
            }
            rows.iter()
                .zip(sections)
                .map(|(&q, s)| Ok(Kernel::new(q, k, s.values.clone())?))
                .collect::<Result<_>>()?
        }
        None => {
            let mut rng = stream_rng(seed, &[tag::CHECK, 3]);
            rows.iter()
                .map(|&q| {
                    let values = (0..k.pow(q as u32)).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    Ok(Kernel::new(q, k, values)?)
                })
                .collect::<Result<_>>()?
        }
    };

    let census = classify(&rs);
    let mut writer = RunWriter::new(out, "diagrams", seed, config_path, raw)?;
    let results = [
        ("mixed_moment", mixed_moment(&model, &kernels)?, mixed_moment_oracle(&model, &kernels)?),
        (
            "central_moment",
            mixed_central_moment(&model, &kernels)?,
            central_moment_oracle(&model, &kernels)?,
        ),
        ("joint_cumulant", joint_cumulant(&model, &kernels)?, cumulant_oracle(&model, &kernels)?),
    ];
    let mut worst = 0.0f64;
    let mut result_rows = Vec::new();
    println!(
        "rows {rows:?}: {} admissible, {} linked, {} covering, {} linked without singletons",
        census.admissible, census.linked, census.covering, census.linked_no_singletons
    );
    for (name, value, oracle) in results {
        let rel = (value - oracle).abs() / value.abs().max(oracle.abs()).max(1e-12);
        worst = worst.max(rel);
        println!("{name:<16} {value:>18.12} oracle {oracle:>18.12} delta {rel:.2e}");
        result_rows.push(json!({
            "statistic": name, "value": value, "oracle": oracle, "relative_delta": rel,
        }));
    }
    let report = json!({
        "rows": rows,
        "census": {
            "admissible": census.admissible,
            "linked": census.linked,
            "covering": census.covering,
            "linked_no_singletons": census.linked_no_singletons,
        },
        "results": result_rows,
    });
    writer.write("diagrams.json", &serde_json::to_string_pretty(&report)?)?;
    let manifest = writer.finish()?;
    println!("manifest: {}", manifest.display());
    Ok(if worst <= 1e-9 { 0 } else { 1 })
}
