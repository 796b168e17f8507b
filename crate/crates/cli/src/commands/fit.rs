use std::time::Instant;

use serde::Serialize;
use shum::hum::ehum_bruteforce;
use shum::methods::{bootstrap_se_anchored, report_scores, LAMBDA_RULE_TARGET};
use shum::smooth::default_lambda;
use shum::{fit, FitOptions, FitReport, Method};

use super::{load_dataset, unique_methods};
use crate::args::FitArgs;
use crate::manifest::{config_without, file_sha256, run_hash, unix_now, RunManifest, Timing, VERSION};
use crate::output::{ensure_dir, num, opt_num, table, with_se, write_csv, write_json};
use crate::{input_err, CliResult, Failure};

#[derive(Serialize)]
struct DatasetInfo<'a> {
    outcome: &'a str,
    markers: &'a [String],
    category_labels: &'a [i64],
    sizes: &'a [usize],
    total_rows: usize,
    dropped_rows: usize,
    log_transform: bool,
}

#[derive(Serialize)]
struct FitOutput<'a> {
    manifest_hash: &'a str,
    version: &'a str,
    dataset: DatasetInfo<'a>,
    reports: &'a [FitReport],
}

fn fit_failure(m: Method, e: impl std::fmt::Display) -> Failure {
    Failure::Fit(format!("method {m} failed: {e}"))
}

pub fn run(a: FitArgs, argv: &[String], workers: usize) -> CliResult<()> {
    let clock = Instant::now();
    let started = unix_now();
    let methods = unique_methods(&a.methods)?;
    if a.bootstrap == 1 {
        return Err(Failure::Input("--bootstrap needs at least 2 replicates".into()));
    }
    let load = load_dataset(&a.data, &a.outcome, &a.markers, a.log_transform)?;
    let data = &load.dataset;
    let opts = FitOptions {
        lambda: a.lambda.value(),
        parametric_mode: a.parametric_mode.into(),
        ..FitOptions::default()
    };

    let mut reports = Vec::with_capacity(methods.len());
    let mut timings = Vec::with_capacity(methods.len());
    for &m in &methods {
        let t = Instant::now();
        let mut rep = fit(data, m, &opts).map_err(|e| fit_failure(m, e))?;
        if a.bootstrap > 0 {
            let b = bootstrap_se_anchored(data, &rep, a.bootstrap, a.seed, &opts).map_err(|e| fit_failure(m, e))?;
            rep.bootstrap = Some(b);
        }
        if a.verify_bruteforce {
            let scores = report_scores(data, &rep).map_err(|e| fit_failure(m, e))?;
            let brute = ehum_bruteforce(&scores).map_err(input_err)?;
            if brute.value != rep.ehum_at_solution {
                return Err(fit_failure(
                    m,
                    format!("brute-force EHUM {} differs from {}", brute.value, rep.ehum_at_solution),
                ));
            }
        }
        timings.push(Timing {
            method: m.to_string(),
            seconds: t.elapsed().as_secs_f64(),
        });
        reports.push(rep);
    }

    let input_sha = file_sha256(&a.data).map_err(input_err)?;
    let config = config_without(&a, &["data"]);
    let hash = run_hash("fit", &config, a.seed, Some(&input_sha));

    let out = &a.output.out;
    ensure_dir(out)?;
    if a.output.format.json() {
        let doc = FitOutput {
            manifest_hash: &hash,
            version: VERSION,
            dataset: DatasetInfo {
                outcome: &a.outcome,
                markers: data.marker_names(),
                category_labels: data.category_labels(),
                sizes: data.sizes(),
                total_rows: load.total_rows,
                dropped_rows: load.dropped_rows,
                log_transform: a.log_transform,
            },
            reports: &reports,
        };
        write_json(&out.join("fit.json"), &doc)?;
    }
    if a.output.format.csv() {
        write_csv(
            &out.join("fit.csv"),
            &["manifest_hash", "method", "term", "estimate", "std_error"],
            &fit_rows(&hash, &reports),
        )?;
    }
    write_csv(
        &out.join("scores.csv"),
        &["manifest_hash", "method", "category", "subject", "score"],
        &score_rows(&hash, data, &reports)?,
    )?;

    print_summary(&a, &load, &reports);

    let manifest = RunManifest {
        manifest_hash: hash,
        version: VERSION,
        subcommand: "fit",
        argv: argv.to_vec(),
        config: config_without(&a, &[]),
        seed: a.seed,
        input_sha256: Some(input_sha),
        workers,
        started_unix_seconds: started,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
        timings,
    };
    write_json(&out.join("manifest.json"), &manifest)
}

fn coefficient_se(rep: &FitReport, k: usize) -> Option<f64> {
    if rep.coefficients.anchor() == Some(k) {
        return None;
    }
    rep.bootstrap.as_ref().map(|b| b.coefficient_se[k])
}

fn fit_rows(hash: &str, reports: &[FitReport]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for rep in reports {
        let m = rep.method.to_string();
        for (k, name) in rep.coefficient_names.iter().enumerate() {
            rows.push(vec![
                hash.to_string(),
                m.clone(),
                name.clone(),
                num(rep.coefficients.beta()[k]),
                opt_num(coefficient_se(rep, k)),
            ]);
        }
        rows.push(vec![
            hash.to_string(),
            m.clone(),
            "ehum".into(),
            num(rep.ehum_at_solution),
            opt_num(rep.bootstrap.as_ref().map(|b| b.ehum_se)),
        ]);
        rows.push(vec![
            hash.to_string(),
            m,
            "objective".into(),
            num(rep.objective_at_solution),
            String::new(),
        ]);
    }
    rows
}

fn score_rows(hash: &str, data: &shum::MarkerDataset, reports: &[FitReport]) -> CliResult<Vec<Vec<String>>> {
    let mut rows = Vec::new();
    for rep in reports {
        let scores = report_scores(data, rep).map_err(input_err)?;
        for (j, cat) in scores.iter().enumerate() {
            let label = data.category_labels()[j].to_string();
            for (i, s) in cat.iter().enumerate() {
                rows.push(vec![
                    hash.to_string(),
                    rep.method.to_string(),
                    label.clone(),
                    i.to_string(),
                    num(*s),
                ]);
            }
        }
    }
    Ok(rows)
}

fn print_summary(a: &FitArgs, load: &shum::CsvLoad, reports: &[FitReport]) {
    let data = &load.dataset;
    let sizes: Vec<String> = data
        .category_labels()
        .iter()
        .zip(data.sizes())
        .map(|(l, n)| format!("{l}: {n}"))
        .collect();
    println!(
        "{} ({}; {} of {} rows used)",
        a.data.display(),
        sizes.join(", "),
        load.total_rows - load.dropped_rows,
        load.total_rows
    );

    let smooth: Vec<&FitReport> = reports.iter().filter(|r| r.lambda.is_some()).collect();
    if !smooth.is_empty() {
        let source = match a.lambda.value() {
            None => format!("auto = 1/sqrt({})", data.total_size()),
            Some(_) => "fixed".to_string(),
        };
        let lambda = a.lambda.value().unwrap_or_else(|| default_lambda(data.total_size()));
        println!("lambda = {lambda:.4} ({source})");
        for r in smooth {
            if let Some(frac) = r.lambda_rule_fraction {
                let flag = if frac < LAMBDA_RULE_TARGET { "  [below 0.9: consider a smaller lambda]" } else { "" };
                println!("  {}: {:.1}% of adjacent pairs have |diff|/lambda > 5{flag}", r.method, 100.0 * frac);
            }
        }
    }

    let mut names: Vec<String> = Vec::new();
    for r in reports {
        for n in &r.coefficient_names {
            if !names.contains(n) {
                names.push(n.clone());
            }
        }
    }
    let mut header = vec![String::new()];
    header.extend(reports.iter().map(|r| r.method.to_string()));
    let mut rows: Vec<Vec<String>> = names
        .iter()
        .map(|n| {
            let mut row = vec![n.clone()];
            for r in reports {
                row.push(match r.coefficient_names.iter().position(|x| x == n) {
                    Some(k) => with_se(r.coefficients.beta()[k], coefficient_se(r, k)),
                    None => String::new(),
                });
            }
            row
        })
        .collect();
    let mut ehum = vec!["EHUM".to_string()];
    ehum.extend(
        reports
            .iter()
            .map(|r| with_se(r.ehum_at_solution, r.bootstrap.as_ref().map(|b| b.ehum_se))),
    );
    rows.push(ehum);
    print!("{}", table(&header, &rows));
    if a.bootstrap > 0 {
        println!("(standard errors from {} stratified bootstrap replicates)", a.bootstrap);
    }
}
