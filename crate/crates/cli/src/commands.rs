use std::path::Path;

use serde::Serialize;

use aroi_core::active::simulate;
use aroi_core::dataset::{generate_synthetic, ingest_csv, summarize, ColumnMap, DatasetSummary, LabelVocab, Rejection};
use aroi_core::models::Family;
use aroi_core::roi::{roi_curve, sensitivity, CostParams, RoiGrid};
use aroi_core::store::{RunRecord, RunStatus, Store};
use aroi_core::sweep::{best_cell, BestBy, SweepResult};

use crate::manifest::{parse as parse_manifest, LoadedManifest};
use crate::output::{emit, json, money, table, with_manifest_line};
use crate::{Cli, CliError, Command, Format, OutputArgs};

/// Executes one parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenSynth {
            n,
            class_ratio,
            signal,
            seed,
            out,
        } => {
            let corpus = generate_synthetic(n, class_ratio, signal, seed)?;
            let csv = String::from_utf8(corpus.dataset.to_canonical_csv()).expect("canonical CSV is UTF-8");
            emit(out.as_deref(), &csv)
        }
        Command::Serve {
            listen,
            workers,
            token,
            max_upload_mb,
        } => serve(&cli.store, &listen, workers, token, max_upload_mb),
        Command::Ingest {
            csv,
            text_a,
            text_b,
            label,
            id,
            positive,
            negative,
            name,
            output,
        } => {
            let mut map = ColumnMap::new(text_a, text_b, label);
            if let Some(id) = id {
                map = map.with_id(id);
            }
            if positive.is_some() || negative.is_some() {
                let d = LabelVocab::default();
                map = map.with_vocab(LabelVocab {
                    positive: positive.unwrap_or(d.positive),
                    negative: negative.unwrap_or(d.negative),
                });
            }
            ingest(&open_store(&cli.store)?, &csv, &map, name, &output)
        }
        Command::Sweep { manifest, workers, out } => {
            sweep(&open_store(&cli.store)?, &manifest, workers, out.as_deref())
        }
        Command::Roi { run_id, params, output } => {
            let store = open_store(&cli.store)?;
            let rec = store.get_run(&run_id)?;
            let params = cost_params(&rec, params.as_deref())?;
            roi(&rec, &params, &output)
        }
        Command::Sensitivity {
            run_id,
            param,
            values,
            family,
            fraction,
            params,
            output,
        } => {
            let store = open_store(&cli.store)?;
            let rec = store.get_run(&run_id)?;
            let params = cost_params(&rec, params.as_deref())?;
            sensitivity_cmd(&rec, &params, &param, &values, family.as_deref(), fraction, &output)
        }
        Command::AlSimulate { manifest, out } => al_simulate(&open_store(&cli.store)?, &manifest, out.as_deref()),
        Command::Report { run_id, params, output } => {
            let store = open_store(&cli.store)?;
            let rec = store.get_run(&run_id)?;
            let params = cost_params(&rec, params.as_deref())?;
            report(&rec, &params, &output)
        }
        Command::Runs { output } => runs(&open_store(&cli.store)?, &output),
    }
}

fn open_store(root: &Path) -> Result<Store, CliError> {
    Ok(Store::open(root)?)
}

#[derive(Serialize)]
struct IngestOutput {
    dataset_hash: String,
    name: String,
    summary: DatasetSummary,
    rejections: Vec<Rejection>,
}

fn ingest(
    store: &Store,
    csv: &Path,
    map: &ColumnMap,
    name: Option<String>,
    output: &OutputArgs,
) -> Result<(), CliError> {
    let file = std::fs::File::open(csv).map_err(|e| CliError::io(format!("cannot open {}: {e}", csv.display())))?;
    let name = name.unwrap_or_else(|| {
        csv.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let ingested = ingest_csv(file, map, name)?;
    let hash = store.put_dataset(&ingested.dataset)?;
    let summary = summarize(&ingested.dataset);
    let view = IngestOutput {
        dataset_hash: hash,
        name: ingested.dataset.name().to_string(),
        summary,
        rejections: ingested.report.rejected.clone(),
    };
    let s = &view.summary;
    let rows = vec![
        ("dataset_hash", view.dataset_hash.clone()),
        ("name", view.name.clone()),
        ("n", s.n.to_string()),
        ("dependent", s.class_counts.dependent.to_string()),
        ("independent", s.class_counts.independent.to_string()),
        ("class_ratio", format!("{:.4}", s.class_ratio)),
        (
            "tokens_a_p25_p50_p75",
            format!("{}/{}/{}", s.tokens_a.p25, s.tokens_a.p50, s.tokens_a.p75),
        ),
        (
            "tokens_b_p25_p50_p75",
            format!("{}/{}/{}", s.tokens_b.p25, s.tokens_b.p50, s.tokens_b.p75),
        ),
        ("vocabulary_size", s.vocabulary_size.to_string()),
        ("rejected_rows", view.rejections.len().to_string()),
    ];
    let text = match output.format {
        Format::Json => json(&view),
        Format::Csv => {
            let mut t = String::from("key,value\n");
            for (k, v) in rows {
                t.push_str(&format!("{k},{v}\n"));
            }
            t
        }
        Format::Table => {
            let mut t = table(
                &["field", "value"],
                &rows
                    .into_iter()
                    .map(|(k, v)| vec![k.to_string(), v])
                    .collect::<Vec<_>>(),
            );
            for r in &view.rejections {
                t.push_str(&format!("rejected row {}: {}\n", r.row, r.reason));
            }
            t
        }
    };
    emit(output.out.as_deref(), &text)
}

fn sweep(store: &Store, manifest: &Path, workers: usize, out: Option<&Path>) -> Result<(), CliError> {
    let loaded = LoadedManifest::read(manifest)?;
    loaded.manifest.sweep.validate()?;
    loaded.manifest.costs.validate()?;
    let ds = loaded.dataset(store)?;
    let hash = store.put_dataset(&ds)?;
    let rec = store.create_run(&hash, loaded.manifest.sweep.clone(), Some(loaded.text.clone()))?;
    let rec = store.execute_run(&rec.run_id, workers)?;
    let csv_path = store.sweep_csv_path(&rec.run_id)?;
    if let Some(out) = out {
        std::fs::copy(&csv_path, out).map_err(|e| CliError::io(format!("cannot write {}: {e}", out.display())))?;
    }
    println!("{}", rec.run_id);
    eprintln!(
        "status: {:?}, cells: {}/{}",
        rec.status, rec.progress.done, rec.progress.total
    );
    eprintln!("csv: {}", csv_path.display());
    match rec.status {
        RunStatus::Done => Ok(()),
        RunStatus::Partial => Err(CliError::runtime(
            "PARTIAL_RUN",
            "some cells failed; see the error column",
        )),
        _ => Err(CliError::runtime(
            "RUN_FAILED",
            rec.error.unwrap_or_else(|| "run failed".into()),
        )),
    }
}

fn finished(rec: &RunRecord) -> Result<&SweepResult, CliError> {
    match (&rec.status, &rec.result) {
        (RunStatus::Done | RunStatus::Partial, Some(r)) => Ok(r),
        (status, _) => Err(CliError::validation(
            "RUN_NOT_EVALUABLE",
            format!("run {} is {status:?}", rec.run_id),
        )),
    }
}

/// Explicit params file, else the run manifest's `[costs]`, else reference values.
fn cost_params(rec: &RunRecord, path: Option<&Path>) -> Result<CostParams, CliError> {
    let params = match path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
            if path.extension().is_some_and(|e| e == "json") {
                serde_json::from_str(&text).map_err(|e| CliError::validation("INVALID_PARAMS", e.to_string()))?
            } else {
                toml::from_str(&text).map_err(|e| CliError::validation("INVALID_PARAMS", e.message().to_string()))?
            }
        }
        None => rec
            .manifest
            .as_deref()
            .and_then(|m| parse_manifest(m).ok())
            .map(|m| m.costs)
            .unwrap_or_default(),
    };
    params.validate()?;
    Ok(params)
}

fn break_even_text(b: Option<f64>) -> String {
    b.map(|f| f.to_string()).unwrap_or_else(|| "none".into())
}

fn roi(rec: &RunRecord, params: &CostParams, output: &OutputArgs) -> Result<(), CliError> {
    let grid = roi_curve(finished(rec)?, params)?;
    let text = match output.format {
        Format::Json => json(&grid),
        Format::Csv => with_manifest_line(rec.manifest_sha256().as_deref(), &grid.to_csv()),
        Format::Table => roi_table(&grid),
    };
    emit(output.out.as_deref(), &text)
}

fn roi_table(grid: &RoiGrid) -> String {
    let mut rows = Vec::new();
    for c in &grid.curves {
        for p in &c.points {
            rows.push(vec![
                c.family.to_string(),
                p.fraction.to_string(),
                money(p.cost),
                money(p.benefit),
                money(p.roi),
                break_even_text(c.break_even),
            ]);
        }
    }
    table(&["family", "fraction", "cost", "benefit", "roi", "break_even"], &rows)
}

fn sensitivity_cmd(
    rec: &RunRecord,
    params: &CostParams,
    param: &str,
    values: &[f64],
    family: Option<&str>,
    fraction: Option<f64>,
    output: &OutputArgs,
) -> Result<(), CliError> {
    let result = finished(rec)?;
    let cell = match (family, fraction) {
        (None, None) => best_cell(result, &BestBy::F1)?,
        (Some(f), Some(x)) => {
            let family: Family = f
                .parse()
                .map_err(|_| CliError::validation("UNKNOWN_FAMILY", format!("unknown family `{f}`")))?;
            result.cell(family, x).ok_or_else(|| {
                CliError::validation(
                    "CELL_NOT_EVALUABLE",
                    format!("run has no {family} cell at fraction {x}"),
                )
            })?
        }
        _ => {
            return Err(CliError::validation(
                "INVALID_ARGUMENTS",
                "give both --family and --fraction, or neither",
            ))
        }
    };
    let report = sensitivity(cell, params, param, values)?;
    let text = match output.format {
        Format::Json => json(&report),
        Format::Csv => {
            let mut body = String::from("family,fraction,param,value,cost,benefit,roi\n");
            for r in &report.grid {
                body.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    report.family, report.fraction, report.param, r.value, r.cost, r.benefit, r.roi
                ));
            }
            with_manifest_line(rec.manifest_sha256().as_deref(), &body)
        }
        Format::Table => {
            let rows: Vec<Vec<String>> = report
                .grid
                .iter()
                .map(|r| vec![r.value.to_string(), money(r.cost), money(r.benefit), money(r.roi)])
                .collect();
            format!(
                "{} at fraction {}, varying {}\n{}",
                report.family,
                report.fraction,
                report.param,
                table(&[param, "cost", "benefit", "roi"], &rows)
            )
        }
    };
    emit(output.out.as_deref(), &text)
}

#[derive(Serialize)]
struct ReportRow {
    family: Family,
    fraction: f64,
    n_train_used: usize,
    f1: Option<f64>,
    precision: Option<f64>,
    recall: Option<f64>,
    roi: Option<f64>,
    error: Option<String>,
}

fn report(rec: &RunRecord, params: &CostParams, output: &OutputArgs) -> Result<(), CliError> {
    let result = finished(rec)?;
    let grid = roi_curve(result, params)?;
    let rows: Vec<ReportRow> = result
        .cells
        .iter()
        .map(|c| ReportRow {
            family: c.family,
            fraction: c.fraction,
            n_train_used: c.n_train_used,
            f1: c.metrics.as_ref().map(|m| m.f1),
            precision: c.metrics.as_ref().map(|m| m.precision),
            recall: c.metrics.as_ref().map(|m| m.recall),
            roi: grid.point(c.family, c.fraction).map(|p| p.roi),
            error: c.error.as_ref().map(|e| e.code.clone()),
        })
        .collect();
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    let text = match output.format {
        Format::Json => json(&rows),
        Format::Csv => {
            let mut body = String::from("family,fraction,n_train_used,f1,precision,recall,roi,error\n");
            for r in &rows {
                body.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    r.family,
                    r.fraction,
                    r.n_train_used,
                    opt(r.f1),
                    opt(r.precision),
                    opt(r.recall),
                    opt(r.roi),
                    r.error.clone().unwrap_or_default()
                ));
            }
            with_manifest_line(rec.manifest_sha256().as_deref(), &body)
        }
        Format::Table => {
            // One row per fraction, an F1 and an ROI column per family.
            let families = result.families();
            let mut headers = vec!["fraction".to_string()];
            for f in &families {
                headers.push(format!("{} F1", short_name(*f)));
                headers.push(format!("{} ROI", short_name(*f)));
            }
            let cell_text = |x: Option<f64>, fmt: fn(f64) -> String| x.map(fmt).unwrap_or_else(|| "error".into());
            let body: Vec<Vec<String>> = result
                .config
                .fractions
                .iter()
                .map(|&fraction| {
                    let mut row = vec![format!("{:.0}%", fraction * 100.0)];
                    for &family in &families {
                        let r = rows.iter().find(|r| r.family == family && r.fraction == fraction);
                        row.push(cell_text(r.and_then(|r| r.f1), |v| format!("{v:.2}")));
                        row.push(cell_text(r.and_then(|r| r.roi), money));
                    }
                    row
                })
                .collect();
            let mut t = table(&headers.iter().map(String::as_str).collect::<Vec<_>>(), &body);
            let breaks: Vec<String> = grid
                .curves
                .iter()
                .map(|c| format!("{}={}", short_name(c.family), break_even_text(c.break_even)))
                .collect();
            t.push_str(&format!("break-even: {}\n", breaks.join(" ")));
            t
        }
    };
    emit(output.out.as_deref(), &text)
}

fn short_name(f: Family) -> &'static str {
    match f {
        Family::LogisticRegression => "LR",
        Family::NaiveBayes => "NB",
        Family::DecisionTree => "DT",
        Family::RandomForest => "RF",
        Family::LinearSvc => "SVM",
    }
}

fn runs(store: &Store, output: &OutputArgs) -> Result<(), CliError> {
    let records = store.list_runs()?;
    #[derive(Serialize)]
    struct Row<'a> {
        run_id: &'a str,
        created_at: String,
        status: RunStatus,
        done: usize,
        total: usize,
        dataset_hash: &'a str,
    }
    let rows: Vec<Row> = records
        .iter()
        .map(|r| Row {
            run_id: &r.run_id,
            created_at: r.created_at.to_rfc3339(),
            status: r.status,
            done: r.progress.done,
            total: r.progress.total,
            dataset_hash: &r.dataset_hash,
        })
        .collect();
    let text = match output.format {
        Format::Json => json(&rows),
        Format::Csv => {
            let mut t = String::from("run_id,created_at,status,done,total,dataset_hash\n");
            for r in &rows {
                t.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.run_id,
                    r.created_at,
                    serde_json::to_value(r.status)
                        .expect("status")
                        .as_str()
                        .unwrap_or_default(),
                    r.done,
                    r.total,
                    r.dataset_hash
                ));
            }
            t
        }
        Format::Table => table(
            &["run_id", "created_at", "status", "cells"],
            &rows
                .iter()
                .map(|r| {
                    vec![
                        r.run_id.to_string(),
                        r.created_at.clone(),
                        format!("{:?}", r.status),
                        format!("{}/{}", r.done, r.total),
                    ]
                })
                .collect::<Vec<_>>(),
        ),
    };
    emit(output.out.as_deref(), &text)
}

fn al_simulate(store: &Store, manifest: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let loaded = LoadedManifest::read(manifest)?;
    loaded.manifest.active.validate()?;
    let ds = loaded.dataset(store)?;
    let sim = simulate(&ds, &loaded.manifest.active)?;
    let csv = with_manifest_line(Some(&loaded.sha256()), &sim.curve_csv());
    emit(out, &csv)?;
    let stop = sim
        .state
        .stopped
        .map(|s| format!("{s:?}"))
        .unwrap_or_else(|| "none".into());
    eprintln!(
        "annotations: {}, iterations: {}, stop: {stop}",
        sim.state.annotations_spent, sim.state.iteration
    );
    Ok(())
}

fn serve(
    root: &Path,
    listen: &str,
    workers: usize,
    token: Option<String>,
    max_upload_mb: usize,
) -> Result<(), CliError> {
    let mut cfg = aroi_api::ApiConfig::new(root);
    cfg.workers = workers.max(1);
    cfg.token = token.filter(|t| !t.is_empty());
    cfg.max_upload_bytes = max_upload_mb.saturating_mul(1024 * 1024);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::io(e.to_string()))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(listen)
            .await
            .map_err(|e| CliError::validation("INVALID_LISTEN", format!("cannot bind {listen}: {e}")))?;
        let addr = listener.local_addr().map_err(|e| CliError::io(e.to_string()))?;
        eprintln!("listening on http://{addr}");
        aroi_api::serve(listener, cfg)
            .await
            .map_err(|e| CliError::io(e.to_string()))
    })
}
