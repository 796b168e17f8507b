use serde::Serialize;
use shum::hum::{ehum_fast, random_guess_baseline};
use shum::project_scores;

use super::load_dataset;
use crate::args::{HumArgs, WeightsArg};
use crate::output::{fmt3, table};
use crate::{input_err, CliResult, Failure};

#[derive(Serialize)]
struct MarkerHum {
    marker: String,
    ehum: f64,
}

#[derive(Serialize)]
struct HumOutput {
    weights: Vec<f64>,
    ehum: f64,
    ordered_tuples: u128,
    total_tuples: u128,
    individual: Vec<MarkerHum>,
    baseline: f64,
}

pub fn run(a: HumArgs) -> CliResult<()> {
    let load = load_dataset(&a.data, &a.outcome, &a.markers, a.log_transform)?;
    let data = &load.dataset;
    let d = data.n_markers();
    let weights = match &a.weights {
        WeightsArg::Naive => vec![1.0 / (d as f64).sqrt(); d],
        WeightsArg::Values(w) if w.len() == d => w.clone(),
        WeightsArg::Values(w) => {
            return Err(Failure::Input(format!(
                "{} weights given for {d} markers",
                w.len()
            )))
        }
    };
    let combined = ehum_fast(&project_scores(data, &weights).map_err(input_err)?).map_err(input_err)?;
    let mut individual = Vec::with_capacity(d);
    for (k, name) in data.marker_names().iter().enumerate() {
        let scores: Vec<Vec<f64>> = (0..data.n_categories()).map(|j| data.column(j, k)).collect();
        individual.push(MarkerHum {
            marker: name.clone(),
            ehum: ehum_fast(&scores).map_err(input_err)?.value,
        });
    }
    let baseline = random_guess_baseline(data.n_categories()).map_err(input_err)?;
    let out = HumOutput {
        weights,
        ehum: combined.value,
        ordered_tuples: combined.ordered,
        total_tuples: combined.n_tuples,
        individual,
        baseline,
    };

    if a.json {
        println!("{}", serde_json::to_string_pretty(&out).map_err(input_err)?);
        return Ok(());
    }
    println!(
        "EHUM of combination: {} ({} of {} tuples correctly ordered)",
        fmt3(out.ehum),
        out.ordered_tuples,
        out.total_tuples
    );
    let rows: Vec<Vec<String>> = out
        .individual
        .iter()
        .zip(&out.weights)
        .map(|(m, w)| vec![m.marker.clone(), fmt3(*w), fmt3(m.ehum)])
        .collect();
    print!(
        "{}",
        table(&["marker".into(), "weight".into(), "individual EHUM".into()], &rows)
    );
    println!(
        "Random-guess baseline 1/{}! = {:.4}",
        data.n_categories(),
        out.baseline
    );
    Ok(())
}
