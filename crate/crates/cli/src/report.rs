//! Report emission: the long-format run CSV (one row per iteration, task,
//! and metric, with the full column set on every row) and the theory sweep
//! CSV.

use friendtrain::theory::SweepTable;
use friendtrain::train_loop::{IterationReport, LoopOutcome, Mode};

const COLUMNS: [&str; 9] = [
    "iteration",
    "task",
    "metric",
    "value",
    "selected_count",
    "pool_size",
    "oracle_pseudo_error",
    "mode",
    "seed",
];

fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Render the run report. Iteration 0 carries the pretrain-only dev metrics
/// (nothing selected yet, so the oracle column is empty); later iterations
/// add the selected-set oracle error column and a pool_error metric row.
pub fn run_report_csv(outcome: &LoopOutcome, pool_size: usize, mode: Mode, seed: u64) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COLUMNS).expect("in-memory write");

    let mut row = |iteration: usize,
                   task: &str,
                   metric: &str,
                   value: f64,
                   selected: usize,
                   oracle: Option<f64>| {
        w.write_record([
            iteration.to_string(),
            task.to_string(),
            metric.to_string(),
            fmt(value),
            selected.to_string(),
            pool_size.to_string(),
            oracle.map(fmt).unwrap_or_default(),
            mode.as_str().to_string(),
            seed.to_string(),
        ])
        .expect("in-memory write");
    };

    let pre_a = &outcome.pretrain_dev_a;
    row(0, "a", "precision", pre_a.precision, 0, None);
    row(0, "a", "recall", pre_a.recall, 0, None);
    row(0, "a", "f1", pre_a.f1, 0, None);
    let pre_b = &outcome.pretrain_dev_b;
    row(0, "b", "wer", pre_b.wer, 0, None);
    row(0, "b", "rouge_l", pre_b.rouge_l, 0, None);
    row(0, "b", "em", pre_b.em, 0, None);

    for rep in &outcome.reports {
        let IterationReport {
            iteration,
            selected_count_a,
            selected_count_b,
            oracle_pseudo_error_a,
            oracle_pseudo_error_b,
            oracle_pool_error_a,
            oracle_pool_error_b,
            dev_a,
            dev_b,
            ..
        } = rep;
        let (it, sa, sb) = (*iteration, *selected_count_a, *selected_count_b);
        let oa = Some(*oracle_pseudo_error_a);
        let ob = Some(*oracle_pseudo_error_b);
        row(it, "a", "precision", dev_a.precision, sa, oa);
        row(it, "a", "recall", dev_a.recall, sa, oa);
        row(it, "a", "f1", dev_a.f1, sa, oa);
        row(it, "a", "pool_error", *oracle_pool_error_a, sa, oa);
        row(it, "b", "wer", dev_b.wer, sb, ob);
        row(it, "b", "rouge_l", dev_b.rouge_l, sb, ob);
        row(it, "b", "em", dev_b.em, sb, ob);
        row(it, "b", "pool_error", *oracle_pool_error_b, sb, ob);
    }

    String::from_utf8(w.into_inner().expect("in-memory write")).expect("csv is utf8")
}

pub fn sweep_csv(table: &SweepTable, n_samples: u64, seed: u64) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "eta_a",
        "eta_b",
        "sigma",
        "closed_error",
        "mc_error",
        "closed_agree",
        "mc_agree",
        "n_samples",
        "seed",
    ])
    .expect("in-memory write");
    for row in &table.rows {
        w.write_record([
            fmt(row.params.eta_a),
            fmt(row.params.eta_b),
            row.params.sigma_size.to_string(),
            fmt(row.closed.error_rate),
            fmt(row.mc.error_rate),
            fmt(row.closed.agreement_rate),
            fmt(row.mc.agreement_rate),
            n_samples.to_string(),
            seed.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("csv is utf8")
}
