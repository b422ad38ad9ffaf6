use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use serde::de::DeserializeOwned;
use serde_json::json;
use tempfile::TempDir;
use tokio::net::TcpListener;
use vizkb_client::Client;
use vizkb_core::api::*;
use vizkb_core::augment::{read_pairs_jsonl, write_pairs_jsonl, DesignPair};
use vizkb_core::config::ProjectConfig;
use vizkb_core::evaluate::{shifts_to_csv, SliceKey};
use vizkb_core::kb::{ChartSpec, WeightTable};
use vizkb_core::labeling::{LabelRecord, LlmConfig};
use vizkb_core::training::ModelFamily;
use vizkb_service::{load_weights, AppState};

use crate::args::*;
use crate::output::{sidecar, Sink};

pub fn name(command: &Command) -> &'static str {
    match command {
        Command::Validate(_) => "validate",
        Command::Features(_) => "features",
        Command::Cost(_) => "cost",
        Command::Enumerate(_) => "enumerate",
        Command::Augment(AugmentCommand::Primitive { .. }) => "augment primitive",
        Command::Augment(AugmentCommand::Feature { .. }) => "augment feature",
        Command::Augment(AugmentCommand::Seed { .. }) => "augment seed",
        Command::Coverage(_) => "coverage",
        Command::Deps(_) => "deps",
        Command::Label(LabelCommand::Classify { .. }) => "label classify",
        Command::Label(LabelCommand::Llm { .. }) => "label llm",
        Command::Label(LabelCommand::Import { .. }) => "label import",
        Command::Label(LabelCommand::Export) => "label export",
        Command::Train(_) => "train",
        Command::Cv(_) => "cv",
        Command::Eval(_) => "eval",
        Command::Report(ReportCommand::Shift { .. }) => "report shift",
        Command::Report(ReportCommand::Cosine { .. }) => "report cosine",
        Command::Serve(_) => "serve",
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_pairs(path: &Path) -> Result<Vec<DesignPair>> {
    let file = fs::File::open(path).with_context(|| format!("reading {}", path.display()))?;
    read_pairs_jsonl(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))
}

fn read_opt_pairs(path: Option<&PathBuf>) -> Result<Vec<DesignPair>> {
    path.map_or(Ok(Vec::new()), |p| read_pairs(p))
}

fn weights(path: Option<&PathBuf>) -> Result<Option<WeightTable>> {
    Ok(path.map(|p| load_weights(p)).transpose()?)
}

fn pairs_jsonl(pairs: &[DesignPair]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_pairs_jsonl(&mut buf, pairs)?;
    Ok(buf)
}

fn jsonl<T: serde::Serialize>(items: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, &item)?;
        buf.push(b'\n');
    }
    Ok(buf)
}

fn family(f: Family) -> ModelFamily {
    match f {
        Family::Logistic => ModelFamily::Logistic,
        Family::LinearSvm => ModelFamily::LinearSvm,
    }
}

/// Starts a service on a loopback port for this process. The returned
/// directory holds a throwaway label store when the config names none.
async fn in_process(config: &ProjectConfig) -> Result<(Client, Option<TempDir>)> {
    let scratch = match config.paths.labels {
        Some(_) => None,
        None => Some(tempfile::tempdir()?),
    };
    let mut builder = AppState::builder(config.clone());
    if let Some(dir) = &scratch {
        builder = builder.labels_dir(dir.path());
    }
    let state = tokio::task::spawn_blocking(move || builder.build()).await??;
    let listener = TcpListener::bind("127.0.0.1:0").await?;
    let addr = listener.local_addr()?;
    tokio::spawn(async move {
        if let Err(e) = vizkb_service::serve(listener, state).await {
            tracing::error!(error = %e, "in-process service stopped");
        }
    });
    Ok((Client::new(format!("http://{addr}"))?, scratch))
}

fn strip(no_timestamps: bool) -> impl Fn(LabelRecord) -> LabelRecord {
    move |r| if no_timestamps { r.without_timestamp() } else { r }
}

pub async fn run(cli: Cli) -> Result<ExitCode> {
    let mut config = match &cli.config {
        Some(path) => ProjectConfig::load(path)?,
        None => ProjectConfig::default(),
    };
    let seed = cli.seed.unwrap_or(config.seed);
    config.seed = seed;

    if let Command::Serve(args) = &cli.command {
        serve(config, args).await?;
        return Ok(ExitCode::SUCCESS);
    }

    let (client, _scratch) = match &cli.server {
        Some(url) => (Client::new(url.clone())?, None),
        None => in_process(&config).await?,
    };
    let sink = Sink {
        out: cli.out.clone(),
        command: name(&cli.command).to_string(),
        seed,
    };
    let stamp = strip(cli.no_timestamps);

    let summary = match cli.command {
        Command::Validate(a) => {
            let r = client.validate(&spec_request(&a)?).await?;
            sink.write_json(&r)?;
            json!({"valid": r.valid, "violations": r.violations.len()})
        }
        Command::Features(a) => {
            let r = client.features(&spec_request(&a)?).await?;
            sink.write_json(&r)?;
            json!({"features": r.features.iter().count()})
        }
        Command::Cost(a) => {
            let r = client.cost(&spec_request(&a)?).await?;
            sink.write_json(&r)?;
            json!({"cost": r.cost})
        }
        Command::Enumerate(a) => {
            let mut bounds = config.enumerate.clone();
            if let Some(n) = a.max_results {
                bounds.max_results = n;
            }
            let r = client
                .enumerate(&EnumerateRequest {
                    partial: read_json(&a.partial)?,
                    force: a.force.into_iter().collect(),
                    forbid: a.forbid.into_iter().collect(),
                    bounds,
                })
                .await?;
            sink.write(&jsonl(&r.designs)?)?;
            json!({"designs": r.designs.len()})
        }
        Command::Augment(AugmentCommand::Primitive { corpus, max_new }) => {
            let pairs = read_pairs(&corpus)?;
            let r = client
                .augment_primitive(&PrimitiveAugmentRequest {
                    pairs,
                    max_new: max_new.unwrap_or(config.augment.max_new),
                    bounds: config.enumerate.clone(),
                })
                .await?;
            sink.write(&pairs_jsonl(&r.pairs)?)?;
            warn_all(&r.warnings);
            json!({"pairs": r.pairs.len(), "warnings": r.warnings.len()})
        }
        Command::Augment(AugmentCommand::Feature {
            partials,
            corpus,
            features,
            binary,
            threshold,
            report,
        }) => {
            let mut ablation = config.augment.ablation.clone();
            ablation.seed = seed;
            let r = client
                .augment_feature(&FeatureAugmentRequest {
                    partials: read_json(&partials)?,
                    corpus: read_opt_pairs(corpus.as_ref())?,
                    features: (!features.is_empty()).then_some(features),
                    binary,
                    threshold: threshold.unwrap_or(config.augment.coverage_threshold),
                    config: ablation,
                })
                .await?;
            sink.write(&pairs_jsonl(&r.pairs)?)?;
            if let Some(path) = report {
                let text = serde_json::to_string_pretty(&json!({"unary": r.unary, "binary": r.binary}))?;
                fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
            }
            json!({"pairs": r.pairs.len(), "unary": r.unary.len(), "binary": r.binary.len()})
        }
        Command::Augment(AugmentCommand::Seed {
            specs,
            weights: w,
            top,
        }) => {
            let r = client
                .augment_seed(&SeedAugmentRequest {
                    seeds: specs.map(|p| read_json(&p)).transpose()?,
                    weights: weights(w.as_ref())?,
                    n_top: top.unwrap_or(config.augment.n_top),
                    seed,
                    bounds: config.enumerate.clone(),
                })
                .await?;
            sink.write(&pairs_jsonl(&r.pairs)?)?;
            warn_all(&r.warnings);
            json!({"pairs": r.pairs.len(), "warnings": r.warnings.len()})
        }
        Command::Coverage(a) => {
            let r = client
                .coverage(&CoverageRequest {
                    corpus: read_opt_pairs(a.corpus.as_ref())?,
                    threshold: a.threshold.unwrap_or(config.augment.coverage_threshold),
                })
                .await?;
            sink.write_json(&r)?;
            json!({"under_covered": r.under_covered.len()})
        }
        Command::Deps(a) => {
            let r = client
                .deps(&DepsRequest {
                    partials: read_json(&a.partials)?,
                    corpus: read_opt_pairs(a.corpus.as_ref())?,
                    bounds: config.enumerate.clone(),
                })
                .await?;
            sink.write_json(&r)?;
            json!({"edges": r.edges.len(), "undetermined": r.undetermined.len()})
        }
        Command::Label(LabelCommand::Classify { labeled, unlabeled }) => {
            let mut cfg = config.classifier.clone();
            cfg.seed = seed;
            let r = client
                .classify(&ClassifyRequest {
                    labeled: read_pairs(&labeled)?,
                    unlabeled: read_pairs(&unlabeled)?,
                    config: cfg,
                })
                .await?;
            sink.write(&jsonl(r.records.iter().cloned().map(&stamp))?)?;
            json!({"records": r.records.len(), "train_accuracy": r.train_accuracy, "cv_accuracy": r.cv_accuracy})
        }
        Command::Label(LabelCommand::Llm {
            pairs,
            endpoint,
            model,
            concurrency,
            audit,
        }) => {
            let llm = LlmConfig {
                endpoint: endpoint.unwrap_or(config.llm.endpoint.clone()),
                model: model.unwrap_or(config.llm.model.clone()),
                concurrency: concurrency.unwrap_or(config.llm.concurrency),
                ..config.llm.clone()
            };
            let r = client
                .llm_label(&LlmRequest {
                    pairs: read_pairs(&pairs)?,
                    config: llm,
                })
                .await?;
            let records: Vec<LabelRecord> = r.outcomes.iter().filter_map(|o| o.record.clone()).map(&stamp).collect();
            sink.write(&jsonl(&records)?)?;
            let audit = audit.unwrap_or_else(|| match &cli.out {
                Some(out) => sidecar(out, "transcripts.jsonl"),
                None => PathBuf::from("llm-transcripts.jsonl"),
            });
            fs::write(&audit, jsonl(r.outcomes.iter().flat_map(|o| &o.transcripts))?)
                .with_context(|| format!("writing {}", audit.display()))?;
            for o in &r.outcomes {
                if let Some(e) = &o.error {
                    tracing::warn!(pair = %o.pair_id, error = %e, "no label");
                }
            }
            let contradictory = records.iter().filter(|r| r.flag.as_deref() == Some("contradictory")).count();
            json!({
                "records": records.len(),
                "failed": r.outcomes.len() - records.len(),
                "contradictory": contradictory,
                "audit": audit.display().to_string(),
            })
        }
        Command::Label(LabelCommand::Import { labels }) => {
            let text = fs::read_to_string(&labels).with_context(|| format!("reading {}", labels.display()))?;
            let r = client.import_labels(&ImportRequest { jsonl: text }).await?;
            json!({"imported": r.imported, "manual_labels": r.manual_labels})
        }
        Command::Label(LabelCommand::Export) => {
            let r = client.export_labels().await?;
            let records = r
                .jsonl
                .lines()
                .map(|l| serde_json::from_str::<LabelRecord>(l).map(&stamp))
                .collect::<Result<Vec<_>, _>>()?;
            sink.write(&jsonl(&records)?)?;
            json!({"records": records.len()})
        }
        Command::Train(a) => {
            let mut cfg = config.train.clone();
            cfg.seed = seed;
            if let Some(l) = a.lambda {
                cfg.lambda = l;
            }
            let r = client
                .train(&TrainRequest {
                    pairs: read_pairs(&a.pairs)?,
                    family: family(a.family),
                    config: cfg,
                })
                .await?;
            if let Some(path) = &a.coefficients {
                fs::write(path, serde_json::to_string_pretty(&r.coefficients)? + "\n")
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            if sink.wants_json() {
                sink.write_json(&r.weights)?;
            } else {
                sink.write(r.weights.to_csv().as_bytes())?;
            }
            let m = &r.coefficients.meta;
            json!({
                "features": r.weights.weights.len(),
                "epochs": m.epochs,
                "converged": m.converged,
                "final_loss": m.final_loss,
            })
        }
        Command::Cv(a) => {
            let mut cfg = config.train.clone();
            cfg.seed = seed;
            let r = client
                .cv(&CvRequest {
                    pairs: read_pairs(&a.pairs)?,
                    family: family(a.family),
                    config: cfg,
                    holdout: a.holdout,
                    folds: a.folds,
                    seed,
                })
                .await?;
            sink.write_json(&r)?;
            json!({"mean": r.report.mean, "folds": r.report.folds.len(), "holdout": r.plan.holdout.len()})
        }
        Command::Eval(a) => {
            let slices = a
                .slice
                .iter()
                .map(|s| match s {
                    Slice::Source => SliceKey::Source,
                    Slice::LabelProvenance => SliceKey::LabelProvenance,
                    Slice::Group => SliceKey::Group,
                })
                .collect();
            let r = client
                .eval(&EvalRequest {
                    pairs: read_pairs(&a.pairs)?,
                    weights: weights(a.weights.as_ref())?,
                    slices,
                })
                .await?;
            sink.write_json(&r)?;
            let all = r.slices.iter().find(|s| s.slice == "all");
            json!({"pairs": r.results.len(), "accuracy": all.and_then(|s| s.accuracy)})
        }
        Command::Report(ReportCommand::Shift { before, after, corpus }) => {
            let r = client
                .weight_shift(&ShiftRequest {
                    before: load_weights(&before)?,
                    after: load_weights(&after)?,
                    corpus: read_opt_pairs(corpus.as_ref())?,
                })
                .await?;
            if sink.wants_json() {
                sink.write_json(&r)?;
            } else {
                sink.write(shifts_to_csv(&r).as_bytes())?;
            }
            json!({"features": r.len()})
        }
        Command::Report(ReportCommand::Cosine { groups }) => {
            let mut map = BTreeMap::new();
            for g in &groups {
                let (name, path) = g
                    .split_once('=')
                    .ok_or_else(|| anyhow!("--group expects NAME=FILE, got `{g}`"))?;
                if map.insert(name.to_string(), read_pairs(Path::new(path))?).is_some() {
                    bail!("group `{name}` given twice");
                }
            }
            let r = client.cosine(&CosineRequest { groups: map }).await?;
            if sink.wants_json() {
                sink.write_json(&r)?;
            } else {
                sink.write(r.to_csv().as_bytes())?;
            }
            json!({"groups": r.groups.len()})
        }
        Command::Serve(_) => unreachable!("handled above"),
    };
    sink.finish(summary)?;
    Ok(ExitCode::SUCCESS)
}

fn spec_request(a: &SpecArgs) -> Result<SpecRequest> {
    Ok(SpecRequest {
        spec: read_json::<ChartSpec>(&a.spec)?,
        weights: weights(a.weights.as_ref())?,
    })
}

fn warn_all(warnings: &[String]) {
    let distinct: BTreeSet<&String> = warnings.iter().collect();
    for w in distinct {
        tracing::warn!("{w}");
    }
}

async fn serve(mut config: ProjectConfig, args: &ServeArgs) -> Result<()> {
    if let Some(c) = &args.corpus {
        config.paths.corpus = Some(c.clone());
    }
    if let Some(l) = &args.labels {
        config.paths.labels = Some(l.clone());
    }
    if config.paths.labels.is_none() {
        bail!("serve needs a label store directory (--labels or paths.labels)");
    }
    let state = tokio::task::spawn_blocking(move || AppState::builder(config).build()).await??;
    let listener = TcpListener::bind(&args.addr)
        .await
        .with_context(|| format!("binding {}", args.addr))?;
    let addr = listener.local_addr()?;
    eprintln!("{}", json!({"command": "serve", "ok": true, "addr": addr.to_string(), "pairs": state.corpus().len()}));
    vizkb_service::serve(listener, state).await?;
    Ok(())
}
