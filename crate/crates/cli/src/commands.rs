use std::path::{Path, PathBuf};

use fnnsom::harness::{persist_results, persist_traces, read_results, read_traces, ResultRow};
use fnnsom::scaling::ScalingBench;
use fnnsom::summary::summarize;
use fnnsom::{
    run_sweep, run_trial, ClassicalSchedule, Dataset, DatasetKind, InitMode, LatticeGraph, RatePolicy, TrialConfig,
};

use crate::config::SweepConfig;
use crate::error::CliError;
use crate::svg;
use crate::{BenchArgs, Common, DataArgs, PlotArgs, SweepArgs, TrainArgs, Variant};

fn out_dir(common: &Common) -> Result<PathBuf, CliError> {
    let dir = common.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    Ok(dir)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn jobs(common: &Common) -> usize {
    match common.jobs {
        Some(j) => j as usize,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    }
}

fn dataset(data: &DataArgs) -> Result<Dataset, CliError> {
    if let Some(points) = &data.points {
        return Ok(Dataset::from_file(points)?);
    }
    let kind: DatasetKind = data
        .dataset
        .parse()
        .map_err(|_| CliError::Usage(format!("unknown dataset '{}'", data.dataset)))?;
    Dataset::synthetic(kind).map_err(|_| CliError::Usage("--dataset point_cloud needs --points FILE".into()))
}

fn mesh_svg(title: &str, side: usize, weights: &[f64]) -> Result<String, CliError> {
    let graph = LatticeGraph::square(side)?;
    let points: Vec<(f64, f64)> = weights.chunks_exact(2).map(|p| (p[0], p[1])).collect();
    if points.len() != graph.unit_count() {
        return Err(CliError::Config(format!(
            "{} weight vectors do not fit a {side}x{side} lattice",
            points.len()
        )));
    }
    Ok(svg::mesh(title, &points, &graph.edges()))
}

fn policy(args: &TrainArgs, graph: &LatticeGraph) -> Result<RatePolicy, CliError> {
    let usage = |m: &str| CliError::Usage(m.into());
    let policy = match args.variant {
        Variant::Fnnsom => {
            if args.lzeta.is_some() {
                return Err(usage("--lzeta applies to --variant nnsom"));
            }
            RatePolicy::fnnsom(args.cq.unwrap_or(0.15))
        }
        Variant::Nnsom => {
            if args.cq.is_some() {
                return Err(usage("--cq applies to --variant fnnsom"));
            }
            RatePolicy::nnsom(args.lzeta.unwrap_or(0.1))
        }
        Variant::Classical => {
            if args.cq.is_some() || args.lzeta.is_some() {
                return Err(usage("--variant classical takes neither --cq nor --lzeta"));
            }
            Ok(RatePolicy::Classical(ClassicalSchedule::for_lattice(graph, args.iters)))
        }
    };
    policy.map_err(|e| CliError::Usage(e.to_string()))
}

pub fn train(args: TrainArgs) -> Result<(), CliError> {
    let graph = LatticeGraph::square_with_units(args.size)
        .ok()
        .filter(|g| g.rows() >= 2)
        .ok_or_else(|| {
            CliError::Usage(format!(
                "--size must be a perfect square of at least 4, got {}",
                args.size
            ))
        })?;
    let init: InitMode = args
        .init
        .parse()
        .map_err(|_| CliError::Usage(format!("--init must be ric or sic, got '{}'", args.init)))?;
    let policy = policy(&args, &graph)?;
    let data = dataset(&args.data)?;
    let mut config = TrialConfig::new(data, graph.rows(), policy, init)
        .with_iterations(args.iters)
        .with_seed(args.common.seed.unwrap_or(0));
    config.samples_per_iteration_factor = args.factor;
    config.record_every = args.record_every;
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let dir = out_dir(&args.common)?;
    let result = run_trial(&config)?;
    let csv = dir.join("train.csv");
    let trace = dir.join("train_trace.json");
    persist_results(std::slice::from_ref(&result), &csv)?;
    persist_traces(std::slice::from_ref(&result), &trace)?;
    println!(
        "{} {} n={} {}={}: final A {:.4}, quantization {:.4}, {} samples in {:.2}s",
        config.dataset,
        config.policy.variant_name(),
        config.unit_count(),
        config.policy.param().0,
        config.policy.param().1,
        result.final_alfa,
        result.final_quantization,
        result.samples_processed,
        result.wall_time_seconds
    );
    match result.edge_crossings {
        Some(c) => println!("lattice edge crossings: {c}"),
        None => println!("lattice edge crossings: not defined in {} dimensions", result.dim),
    }
    println!("wrote {}", csv.display());
    println!("wrote {}", trace.display());
    if result.dim == 2 {
        let path = dir.join("train_mesh.svg");
        let title = format!(
            "{} {} n={}",
            config.dataset,
            config.policy.variant_name(),
            config.unit_count()
        );
        write_file(&path, &mesh_svg(&title, config.map_side, &result.final_weights)?)?;
        println!("wrote {}", path.display());
    } else {
        eprintln!("note: mesh drawing skipped for {}-dimensional data", result.dim);
    }
    Ok(())
}

pub fn sweep(args: SweepArgs) -> Result<(), CliError> {
    let config = SweepConfig::load(&args.config)?;
    let base_dir = args.config.parent().unwrap_or(Path::new("."));
    let mut grid = config.grid(base_dir)?;
    if let Some(seed) = args.common.seed {
        grid.base_seed = seed;
    }
    let plan = grid.plan();
    for t in plan.cells.iter() {
        t.validate()?;
    }
    let dir = out_dir(&args.common)?;
    let results_path = dir.join(config.output.results.clone().unwrap_or_else(|| "results.csv".into()));

    eprintln!(
        "running {} trials on {} worker(s)",
        plan.trial_count(),
        jobs(&args.common)
    );
    let report = run_sweep(&plan, jobs(&args.common))?;
    persist_results(&report.results, &results_path)?;
    println!("wrote {}", results_path.display());
    if let Some(traces) = &config.output.traces {
        let path = dir.join(traces);
        persist_traces(&report.results, &path)?;
        println!("wrote {}", path.display());
    }

    let rows: Vec<ResultRow> = report.results.iter().map(ResultRow::from).collect();
    println!(
        "{:<16} {:>5} {:<8} {:<4} {:>10} {:>9} {:>8} {:>8} {:>8}",
        "dataset", "units", "variant", "init", "param", "median_A", "iqr_A", "tangled", "crossed"
    );
    for s in summarize(&rows, config.tangle_factor) {
        println!(
            "{:<16} {:>5} {:<8} {:<4} {:>10.4} {:>9.4} {:>8.4} {:>8.2} {:>8}",
            s.dataset,
            s.map_side * s.map_side,
            s.variant,
            s.init_mode,
            s.param_value,
            s.median_final_alfa,
            s.iqr_final_alfa,
            s.tangled_fraction,
            s.crossing_fraction.map_or("-".to_string(), |c| format!("{c:.2}"))
        );
    }
    if !report.failures.is_empty() {
        for f in &report.failures {
            eprintln!("trial {} failed: {}", f.index, f.error);
        }
        return Err(CliError::Runtime(format!(
            "{} of {} trials failed",
            report.failures.len(),
            plan.trial_count()
        )));
    }
    Ok(())
}

pub fn bench(args: BenchArgs) -> Result<(), CliError> {
    if args.sizes.len() < 3 {
        return Err(CliError::Usage(format!(
            "--sizes needs at least 3 map sizes, got {}",
            args.sizes.len()
        )));
    }
    if let Some(bad) = args
        .sizes
        .iter()
        .find(|&&n| LatticeGraph::square_with_units(n).is_err() || n < 4)
    {
        return Err(CliError::Usage(format!(
            "map size {bad} is not a perfect square of at least 4"
        )));
    }
    let mut bench = ScalingBench::new(args.sizes.clone(), args.samples);
    bench.dataset = dataset(&args.data)?;
    bench.policy = RatePolicy::fnnsom(args.cq).map_err(|e| CliError::Usage(e.to_string()))?;
    bench.seed = args.common.seed.unwrap_or(0);
    bench.runs = args.runs;
    let report = bench.run()?;

    let dir = out_dir(&args.common)?;
    let csv = dir.join("bench.csv");
    let mut text = String::from("units,samples,wall_time_seconds,nanos_per_sample\n");
    for p in &report.points {
        text.push_str(&format!(
            "{},{},{},{}\n",
            p.units, p.samples, p.wall_time_seconds, p.nanos_per_sample
        ));
    }
    write_file(&csv, &text)?;
    let json = dir.join("bench_fit.json");
    let body = serde_json::json!({
        "note": "every size is trained on the same fixed number of samples, so time measures per-sample cost",
        "dataset": bench.dataset.to_string(),
        "points": report.points,
        "fit": report.fit,
    });
    write_file(&json, &serde_json::to_string_pretty(&body).expect("serializable"))?;

    println!(
        "fixed budget of {} samples per size ({} run(s), fastest kept)",
        args.samples, args.runs
    );
    for p in &report.points {
        println!(
            "n={:>6}  {:>9.4}s  {:>8.1} ns/sample",
            p.units, p.wall_time_seconds, p.nanos_per_sample
        );
    }
    println!(
        "time = {:.4e} * n + {:.4e}   R^2 = {:.4}",
        report.fit.slope, report.fit.intercept, report.fit.r_squared
    );
    println!("wrote {}", csv.display());
    println!("wrote {}", json.display());
    Ok(())
}

pub fn plot(args: PlotArgs) -> Result<(), CliError> {
    let rows = read_results(&args.results)?;
    if rows.is_empty() {
        return Err(CliError::Config(format!(
            "{}: no result rows to plot",
            args.results.display()
        )));
    }
    let traces = match &args.traces {
        Some(path) => Some(read_traces(path)?),
        None => None,
    };
    let dir = out_dir(&args.common)?;

    let mut series: Vec<svg::Series> = Vec::new();
    for r in &rows {
        if !(r.param_value > 0.0) {
            return Err(CliError::Config(format!(
                "parameter value {} cannot go on a log axis",
                r.param_value
            )));
        }
        let label = format!(
            "{} n={} {} {}",
            r.dataset,
            r.map_side * r.map_side,
            r.variant,
            r.init_mode
        );
        match series.iter_mut().find(|s| s.label == label) {
            Some(s) => s.points.push((r.param_value, r.final_alfa)),
            None => series.push(svg::Series {
                label,
                points: vec![(r.param_value, r.final_alfa)],
            }),
        }
    }
    let x_label = if rows.iter().all(|r| r.param_name == rows[0].param_name) {
        rows[0].param_name.clone()
    } else {
        "parameter".to_string()
    };
    let scatter = dir.join("scatter.svg");
    write_file(
        &scatter,
        &svg::scatter("final A_t per trial", &x_label, "final A_t", &series),
    )?;
    println!("wrote {} ({} points)", scatter.display(), rows.len());

    if let Some(records) = traces {
        let rec = records.get(args.trial).ok_or_else(|| {
            CliError::Usage(format!(
                "--trial {} out of range ({} records)",
                args.trial,
                records.len()
            ))
        })?;
        if rec.dim == 2 {
            let path = dir.join("mesh.svg");
            let c = &rec.config;
            let title = format!(
                "{} {} {}={} repeat {}",
                c.dataset, c.variant, c.param_name, c.param_value, c.repeat
            );
            write_file(&path, &mesh_svg(&title, c.map_side, &rec.final_weights)?)?;
            println!("wrote {}", path.display());
        } else {
            eprintln!("note: mesh drawing skipped for {}-dimensional data", rec.dim);
        }
    }
    Ok(())
}
