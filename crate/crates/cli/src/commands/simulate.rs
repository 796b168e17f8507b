use std::time::Instant;

use serde::Serialize;
use shum::simulate::{
    population_hum, reference_beta, run_study, PopulationHum, ScenarioConfig, StudySummary,
};
use shum::FitOptions;

use super::unique_methods;
use crate::args::SimulateArgs;
use crate::manifest::{config_without, run_hash, unix_now, RunManifest, Timing, VERSION};
use crate::output::{ensure_dir, fmt3, num, table, with_se, write_csv, write_json};
use crate::{input_err, CliResult, Failure};

#[derive(Serialize)]
struct StudyOutput<'a> {
    manifest_hash: &'a str,
    version: &'a str,
    true_hum: Option<PopulationHum>,
    summary: &'a StudySummary,
}

pub fn run(a: SimulateArgs, argv: &[String], workers: usize) -> CliResult<()> {
    let clock = Instant::now();
    let started = unix_now();
    let methods = unique_methods(&a.methods)?;
    let cfg = ScenarioConfig::paper(a.scenario, a.n.clone(), a.reps, a.seed).map_err(input_err)?;
    if a.true_hum_draws > 0 && a.true_hum_draws < 10_000 {
        return Err(Failure::Input("--true-hum-draws must be 0 or at least 10000".into()));
    }
    let opts = FitOptions {
        lambda: a.lambda.value(),
        parametric_mode: a.parametric_mode.into(),
        ..FitOptions::default()
    };

    let summary = run_study(&cfg, &methods, &opts).map_err(|e| Failure::Fit(e.to_string()))?;
    let true_hum = match (a.true_hum_draws, reference_beta(&cfg)) {
        (0, _) | (_, None) => None,
        (draws, Some(beta)) => Some(population_hum(&cfg, beta.beta(), draws, a.seed).map_err(input_err)?),
    };

    let config = config_without(&a, &[]);
    let hash = run_hash("simulate", &config, a.seed, None);
    let out = &a.output.out;
    ensure_dir(out)?;
    if a.output.format.json() {
        let doc = StudyOutput {
            manifest_hash: &hash,
            version: VERSION,
            true_hum,
            summary: &summary,
        };
        write_json(&out.join("study.json"), &doc)?;
    }
    if a.output.format.csv() {
        let hum_rows: Vec<Vec<String>> = summary
            .methods
            .iter()
            .map(|m| {
                vec![
                    hash.clone(),
                    m.method.to_string(),
                    num(m.mean_ehum),
                    num(m.sd_ehum),
                    m.successes.to_string(),
                    m.failures.to_string(),
                ]
            })
            .collect();
        write_csv(
            &out.join("study_hum.csv"),
            &["manifest_hash", "method", "mean_ehum", "sd_ehum", "successes", "failures"],
            &hum_rows,
        )?;
        let coef_rows: Vec<Vec<String>> = summary
            .methods
            .iter()
            .flat_map(|m| {
                m.coefficients.iter().map(|c| {
                    vec![
                        hash.clone(),
                        m.method.to_string(),
                        format!("x{}", c.marker + 1),
                        num(c.truth),
                        num(c.mean),
                        num(c.bias),
                        num(c.sd),
                        c.count.to_string(),
                    ]
                })
            })
            .collect();
        write_csv(
            &out.join("study_coefficients.csv"),
            &["manifest_hash", "method", "marker", "truth", "mean", "bias", "sd", "count"],
            &coef_rows,
        )?;
    }

    print_summary(&a, &summary, true_hum);

    let manifest = RunManifest {
        manifest_hash: hash,
        version: VERSION,
        subcommand: "simulate",
        argv: argv.to_vec(),
        config,
        seed: a.seed,
        input_sha256: None,
        workers,
        started_unix_seconds: started,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
        timings: summary
            .seconds_per_fit
            .iter()
            .map(|(m, s)| Timing {
                method: m.to_string(),
                seconds: *s,
            })
            .collect(),
    };
    write_json(&out.join("manifest.json"), &manifest)
}

fn print_summary(a: &SimulateArgs, s: &StudySummary, true_hum: Option<PopulationHum>) {
    let sizes: Vec<String> = a.n.iter().map(|n| n.to_string()).collect();
    println!("Scenario {}, n = ({}), R = {}", a.scenario, sizes.join(", "), s.replications);
    if let Some(t) = true_hum {
        println!("True HUM = {:.3} (Monte Carlo SE {:.4})", t.value, t.standard_error);
    }
    let header = vec!["method".to_string(), "EHUM mean (SD)".to_string(), "failures".to_string()];
    let rows: Vec<Vec<String>> = s
        .methods
        .iter()
        .map(|m| vec![m.method.to_string(), with_se(m.mean_ehum, Some(m.sd_ehum)), m.failures.to_string()])
        .collect();
    print!("{}", table(&header, &rows));

    if let Some(truth) = &s.reference_beta {
        let markers: Vec<usize> = s
            .methods
            .iter()
            .find(|m| !m.coefficients.is_empty())
            .map(|m| m.coefficients.iter().map(|c| c.marker).collect())
            .unwrap_or_default();
        if !markers.is_empty() {
            println!();
            let mut header = vec!["coefficients".to_string()];
            header.extend(markers.iter().map(|k| format!("x{} mean (SD)", k + 1)));
            let mut rows = vec![{
                let mut r = vec!["truth".to_string()];
                r.extend(markers.iter().map(|&k| fmt3(truth[k])));
                r
            }];
            for m in s.methods.iter().filter(|m| !m.coefficients.is_empty()) {
                let mut r = vec![m.method.to_string()];
                r.extend(m.coefficients.iter().map(|c| with_se(c.mean, Some(c.sd))));
                rows.push(r);
            }
            print!("{}", table(&header, &rows));
        }
    }
    for w in &s.warnings {
        eprintln!("warning: {w}");
    }
}
