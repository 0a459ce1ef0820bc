//! Batch driver: Monte Carlo gap sampling, kernel limit tables, near-diagonal
//! density scans and exhaustive lemma certificates.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use gapforge::correlations::{fit_small_gap_coefficient, gap_density_scan, small_gap_coefficient, GapDensityPoint};
use gapforge::ensembles::EnsembleParams;
use gapforge::gapstats::{run_gap_experiment, GapExperiment, GapLawSpec};
use gapforge::kernels::{kernel_limit_row, KernelLimitRow};
use gapforge::matchings::{
    kappa, kappa_oracle, verify_identities, verify_ord1, verify_ord2, verify_ord3, verify_ord4, verify_z_lemma,
    KAPPA_CELLS, KAPPA_GRID,
};
use gapforge::output::format_float;
use gapforge::{Beta, Error};

const SCHEMA_VERSION: u32 = 1;

/// Offsets `u` at or below this value enter the small-gap fit.
const FIT_U_MAX: f64 = 0.05;

/// Allowed distance between a fitted κ exponent and the table value.
const KAPPA_TOL: f64 = 0.05;

/// Bulk locations of the kernel limit table.
const KERNEL_X0: [f64; 3] = [-1.0, 0.0, 1.0];

#[derive(Parser, Debug)]
#[command(name = "gapforge", version, about = "Smallest gaps of Gaussian beta-ensembles")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "GAPFORGE_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample spectra and test the smallest-gap law and the gap counts.
    SampleGaps(SampleArgs),
    /// Exhaustively check a combinatorial lemma.
    LemmaVerify(LemmaArgs),
    /// Deviation of the rescaled matrix kernel from its sine-kernel limit.
    KernelLimit(KernelArgs),
    /// Scaled near-diagonal two-point density against its limit.
    CorrelationScan(ScanArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Which {
    Identities,
    Ord1,
    Ord2,
    Ord3,
    Ord4,
    Zmatrix,
    Kappa,
    All,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long, default_value_t = 2)]
    beta: u32,
    #[arg(long, default_value_t = 1024)]
    n: usize,
    #[arg(long, default_value_t = 2000, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Location interval is (−2+ε, 2−ε).
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Rank of the gap whose law is tested.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Gap window A as `a:b`, meaning (a, b].
    #[arg(long, default_value = "0:1")]
    grid: String,
    /// Output directory; without it the summary goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct LemmaArgs {
    #[arg(long, value_enum)]
    which: Which,
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Comma-separated n values for the κ oracle.
    #[arg(long)]
    grid: Option<String>,
    /// Output directory for one JSON certificate per lemma.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct KernelArgs {
    #[arg(long, default_value_t = 4)]
    beta: u32,
    /// Comma-separated sizes.
    #[arg(long, default_value = "50,100,200,400")]
    n: String,
    /// Offsets u, v as `lo:hi:count`.
    #[arg(long, default_value = "-1:1:9", allow_hyphen_values = true)]
    grid: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[arg(long, default_value_t = 4)]
    beta: u32,
    #[arg(long, default_value = "200")]
    n: String,
    /// Offsets u as `lo:hi:count`.
    #[arg(long, default_value = "0.01:0.3:30")]
    grid: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

enum Failure {
    Usage(String),
    Verification(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::OutsideBulk(_) | Error::UnreachableKappa(..) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: GAPFORGE_THREADS must be >= 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let outcome = match &cli.command {
        Command::SampleGaps(a) => sample_gaps(a),
        Command::LemmaVerify(a) => lemma_verify(a),
        Command::KernelLimit(a) => kernel_limit(a),
        Command::CorrelationScan(a) => correlation_scan(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("usage error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Verification(m)) => {
            eprintln!("verification failed: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn parse_beta(b: u32) -> std::result::Result<Beta, Failure> {
    Beta::try_from(b).map_err(Failure::from)
}

fn parse_n_list(s: &str) -> std::result::Result<Vec<usize>, Failure> {
    let ns: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| usage(format!("bad size '{t}' in --n"))))
        .collect::<std::result::Result<_, _>>()?;
    if ns.is_empty() || ns.contains(&0) {
        return Err(usage("--n needs at least one positive size"));
    }
    Ok(ns)
}

fn parse_f64(t: &str) -> std::result::Result<f64, Failure> {
    t.trim().parse::<f64>().map_err(|_| usage(format!("bad number '{t}' in --grid")))
}

/// `lo:hi:count` as `count` evenly spaced values.
fn parse_linspace(s: &str) -> std::result::Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(usage(format!("--grid '{s}' must be lo:hi:count")));
    }
    let (lo, hi) = (parse_f64(parts[0])?, parse_f64(parts[1])?);
    let count: usize = parts[2].trim().parse().map_err(|_| usage(format!("bad count in --grid '{s}'")))?;
    if count == 0 || hi.is_nan() || lo.is_nan() || hi < lo || (count == 1 && hi != lo) {
        return Err(usage(format!("--grid '{s}' is empty or reversed")));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect())
}

fn write_text(out: Option<&Path>, name: &str, text: &str) -> io::Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(name), text)
        }
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn document(command: &str, config: Value, result: Value) -> Value {
    json!({ "schema_version": SCHEMA_VERSION, "command": command, "config": config, "result": result })
}

fn sample_gaps(a: &SampleArgs) -> CmdResult {
    let beta = parse_beta(a.beta)?;
    let (lo, hi) = a.grid.split_once(':').ok_or_else(|| usage(format!("--grid '{}' must be a:b", a.grid)))?;
    let window = vec![(parse_f64(lo)?, parse_f64(hi)?)];
    if !(a.epsilon > 0.0 && a.epsilon < 2.0) {
        return Err(usage("--epsilon must lie in (0, 2)"));
    }
    let spec = GapLawSpec::new(beta, a.k, (-2.0 + a.epsilon, 2.0 - a.epsilon), window)?;
    let params = EnsembleParams::new(beta, a.n, a.seed)?;
    let exp = run_gap_experiment(&params, a.trials, &spec)?;
    let config = json!({
        "beta": beta, "n": a.n, "trials": a.trials, "seed": a.seed, "epsilon": a.epsilon,
        "k": a.k, "window": spec.window, "interval": spec.interval, "format": a.format,
    });
    let mut summary = document("sample-gaps", config, summary_json(&exp));
    let out = a.out.as_deref();
    match a.format {
        Format::Csv if out.is_some() => {
            write_text(out, "gaps.csv", &gaps_csv(&exp))?;
            write_text(out, "counts.csv", &counts_csv(&exp))?;
        }
        Format::Json => {
            summary["result"]["draws"] = serde_json::to_value(&exp.draws).expect("draws serialize");
        }
        Format::Csv => {}
    }
    write_text(out, "summary.json", &json_text(&summary))?;
    Ok(())
}

fn summary_json(e: &GapExperiment) -> Value {
    json!({
        "beta": e.beta, "n": e.n, "trials": e.trials, "ks": e.ks, "p_poisson": e.p_poisson,
        "mu_theory": e.mu_theory, "mu_empirical": e.mu_empirical, "skipped_draws": e.skipped_draws,
        "poisson": e.poisson,
    })
}

fn gaps_csv(e: &GapExperiment) -> String {
    let mut s = String::from("draw,k,tau_k\n");
    for d in &e.draws {
        if let Some(t) = d.tau_k {
            s.push_str(&format!("{},{},{}\n", d.draw, e.spec.k, format_float(t)));
        }
    }
    s
}

fn counts_csv(e: &GapExperiment) -> String {
    let mut s = String::from("draw,count_in_AxI\n");
    for d in &e.draws {
        s.push_str(&format!("{},{}\n", d.draw, d.count));
    }
    s
}

fn lemma_verify(a: &LemmaArgs) -> CmdResult {
    if a.format != Format::Json {
        return Err(usage("lemma certificates are JSON only"));
    }
    let which: Vec<Which> = match a.which {
        Which::All => {
            vec![Which::Identities, Which::Ord1, Which::Ord2, Which::Ord3, Which::Ord4, Which::Zmatrix, Which::Kappa]
        }
        w => vec![w],
    };
    let grid: Vec<f64> = match &a.grid {
        Some(g) => g.split(',').map(parse_f64).collect::<std::result::Result<_, _>>()?,
        None => KAPPA_GRID.to_vec(),
    };
    let mut docs = Vec::new();
    let mut failed = Vec::new();
    for w in which {
        let (name, passed, result) = run_lemma(w, a.k, &grid)?;
        let config = json!({ "which": w, "k": a.k, "grid": grid });
        let doc = document("lemma-verify", config, result);
        write_file_or_collect(a.out.as_deref(), &format!("{name}.json"), &doc, &mut docs)?;
        if !passed {
            failed.push(name);
        }
    }
    if a.out.is_none() {
        let v = if docs.len() == 1 { docs.pop().unwrap() } else { Value::Array(docs) };
        write_text(None, "", &json_text(&v))?;
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(format!("counterexamples in {}", failed.join(", "))))
    }
}

fn write_file_or_collect(out: Option<&Path>, name: &str, doc: &Value, docs: &mut Vec<Value>) -> io::Result<()> {
    match out {
        Some(_) => write_text(out, name, &json_text(doc)),
        None => {
            docs.push(doc.clone());
            Ok(())
        }
    }
}

fn run_lemma(w: Which, k: usize, grid: &[f64]) -> std::result::Result<(String, bool, Value), Failure> {
    let cert = match w {
        Which::Identities => verify_identities(k)?,
        Which::Ord1 => verify_ord1(k)?,
        Which::Ord2 => verify_ord2(k)?,
        Which::Ord3 => verify_ord3(k)?,
        Which::Ord4 => verify_ord4(k)?,
        Which::Zmatrix => {
            let r = verify_z_lemma();
            let v = serde_json::to_value(&r).expect("report serializes");
            return Ok(("zmatrix".into(), r.passed(), v));
        }
        Which::Kappa => {
            let mut rows = Vec::new();
            let mut ok = true;
            for (x, y) in KAPPA_CELLS {
                let table = kappa(x, y)?.to_f64();
                let estimate = kappa_oracle(x, y, grid)?;
                let within = (estimate - table).abs() <= KAPPA_TOL;
                ok &= within;
                rows.push(json!({ "a": x, "b": y, "table": table, "estimate": estimate, "within_tolerance": within }));
            }
            return Ok(("kappa".into(), ok, json!({ "lemma": "kappa", "tolerance": KAPPA_TOL, "cells": rows })));
        }
        Which::All => unreachable!("expanded by the caller"),
    };
    let name = format!("{}_k{}", cert.lemma, k);
    let v = serde_json::to_value(&cert).expect("certificate serializes");
    Ok((name, cert.passed(), v))
}

fn kernel_limit(a: &KernelArgs) -> CmdResult {
    let beta = parse_beta(a.beta)?;
    if beta == Beta::Two {
        return Err(usage("kernel-limit needs beta 1 or 4"));
    }
    let ns = parse_n_list(&a.n)?;
    let offsets = parse_linspace(&a.grid)?;
    let rows: Vec<KernelLimitRow> =
        ns.iter().map(|&n| kernel_limit_row(n, beta, &KERNEL_X0, &offsets)).collect::<gapforge::Result<_>>()?;
    match a.format {
        Format::Csv => {
            let mut s = String::from(
                "n,points,s_dev,v_dev,j_dev,s_yx_dev,s_dev_sqrt_n,v_dev_n,j_dev_sqrt_n,s_yx_dev_sqrt_n,j_dev_over_gap_sqrt_n\n",
            );
            for r in &rows {
                let vals = [
                    r.s_dev,
                    r.v_dev,
                    r.j_dev,
                    r.s_yx_dev,
                    r.s_scaled,
                    r.v_scaled,
                    r.j_scaled,
                    r.s_yx_scaled,
                    r.j_gap_scaled,
                ];
                let cols: Vec<String> = vals.iter().map(|&v| format_float(v)).collect();
                s.push_str(&format!("{},{},{}\n", r.n, r.points, cols.join(",")));
            }
            write_text(a.out.as_deref(), "kernel_limit.csv", &s)?;
        }
        Format::Json => {
            let config = json!({ "beta": beta, "n": ns, "grid": offsets, "x0": KERNEL_X0 });
            let doc = document("kernel-limit", config, json!({ "rows": rows }));
            write_text(a.out.as_deref(), "kernel_limit.json", &json_text(&doc))?;
        }
    }
    Ok(())
}

fn correlation_scan(a: &ScanArgs) -> CmdResult {
    let beta = parse_beta(a.beta)?;
    let ns = parse_n_list(&a.n)?;
    let us = parse_linspace(&a.grid)?;
    let mut scans: Vec<(usize, Vec<GapDensityPoint>)> = Vec::new();
    for &n in &ns {
        scans.push((n, gap_density_scan(n, beta, 0.0, &us)?));
    }
    match a.format {
        Format::Csv => {
            let mut s = String::from("n,u,scaled_density,limit,ratio,coefficient\n");
            for (n, pts) in &scans {
                for p in pts {
                    let cols: Vec<String> =
                        [p.u, p.scaled, p.limit, p.ratio, p.coefficient].iter().map(|&v| format_float(v)).collect();
                    s.push_str(&format!("{n},{}\n", cols.join(",")));
                }
            }
            write_text(a.out.as_deref(), "correlation_scan.csv", &s)?;
        }
        Format::Json => {
            let target = small_gap_coefficient(beta);
            let results: Vec<Value> = scans
                .iter()
                .map(|(n, pts)| {
                    let fit = fit_small_gap_coefficient(beta, pts, FIT_U_MAX);
                    json!({
                        "n": n, "points": pts, "fit_u_max": FIT_U_MAX, "fitted_coefficient": fit,
                        "limit_coefficient": target,
                        "relative_error": fit.map(|c| (c - target).abs() / target),
                    })
                })
                .collect();
            let config = json!({ "beta": beta, "n": ns, "grid": us, "lambda": 0.0 });
            let doc = document("correlation-scan", config, json!({ "scans": results }));
            write_text(a.out.as_deref(), "correlation_scan.json", &json_text(&doc))?;
        }
    }
    Ok(())
}
