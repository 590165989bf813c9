use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{
    create_dir, read_json, require, seal_stage, write_json, write_text, Artifact, PipelineError, RunContext, Stage,
    StageError,
};
use crate::corpus::{
    assign_labels, citation_gap_welch_t, delay_stats, filter_corpus, load_corpus, synth_corpus, write_corpus,
    CorpusError, DelayStats, FilterReport, LabelKind, LabeledDataset, PublicationRecord, WelchTest,
};
use crate::embed::{embed_with_cache, EmbeddingCache};
use crate::eval::{evaluate, read_curve_csv, render_curves_svg, write_curve_csv, EvalReport, PlotSpec, Series};
use crate::features::{
    assemble, fit_context, leakage_guard, read_feature_csv, write_feature_csv, BlockTag, EmbeddingMap, FeatureContext,
    FeatureManifest, LabeledFeatures, Tier,
};
use crate::gbdt::{fit_with_history, load_model, predict_proba, save_model_with, TrainingHistory};
use crate::sampling::{downsample_majority, train_test_split, SplitManifest, SplitMember};
use crate::temporal::{
    decade_confusions, delta_labels, render_delta_svg, sample_per_year, write_points_csv, DecadeReport, Shortfall,
};

const THRESHOLD: f64 = 0.5;

fn tagged<T>(stage: Stage, r: Result<T, StageError>) -> Result<T, PipelineError> {
    r.map_err(|source| PipelineError::Stage { stage, source })
}

fn comment(ctx: &RunContext, stage: Stage) -> String {
    ctx.provenance(stage).line()
}

fn tier_dir(ctx: &RunContext, stage: Stage, tier: Tier) -> PathBuf {
    ctx.stage_dir(stage).join(tier.as_str())
}

/// Writes the synthetic corpus to `synth/corpus.jsonl`.
pub fn run_synth(ctx: &RunContext) -> Result<PathBuf, PipelineError> {
    tagged(Stage::Synth, synth(ctx))
}

fn synth(ctx: &RunContext) -> Result<PathBuf, StageError> {
    let cfg = ctx
        .profile
        .synth
        .as_ref()
        .ok_or_else(|| CorpusError::ConfigError("profile has no [synth] section".into()))?;
    let dir = ctx.stage_dir(Stage::Synth);
    create_dir(&dir)?;
    let path = dir.join("corpus.jsonl");
    write_corpus(&path, &synth_corpus(cfg)?)?;
    seal_stage(ctx, Stage::Synth, &["corpus.jsonl".into()])?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestStats {
    pub label: LabelKind,
    pub loaded: usize,
    pub skipped_lines: usize,
    pub filter: FilterReport,
    pub positives: usize,
    pub negatives: usize,
    pub rebalanced_positives: usize,
    pub rebalanced_negatives: usize,
    pub train: usize,
    pub test: usize,
    pub delay: Option<DelayStats>,
    /// Times cited, label 1 against label 0.
    pub times_cited_welch: Option<WelchTest>,
}

/// Load, filter, label, downsample and split.
pub fn run_ingest(ctx: &RunContext) -> Result<IngestStats, PipelineError> {
    tagged(Stage::Ingest, ingest(ctx))
}

fn ingest(ctx: &RunContext) -> Result<IngestStats, StageError> {
    let p = &ctx.profile;
    let corpus = ctx.corpus_path();
    if p.corpus.path.is_none() {
        require(&corpus, Stage::Synth)?;
    }
    let loaded = load_corpus(&corpus, p.corpus.strict)?;
    let (kept, filter) = filter_corpus(&loaded.records, &p.filter);
    let dataset = assign_labels(kept, p.label);
    let split = p.split_config();
    let rebalanced = downsample_majority(&dataset, split.downsample_keep, split.seed)?;
    let (train, test) = train_test_split(&rebalanced, &split);

    let times_cited = |want: u8| -> Vec<f64> {
        dataset
            .records
            .iter()
            .zip(&dataset.labels)
            .filter(|(_, &l)| l == want)
            .filter_map(|(r, _)| r.leakage.times_cited.map(|t| t as f64))
            .collect()
    };
    let stats = IngestStats {
        label: p.label,
        loaded: loaded.records.len(),
        skipped_lines: loaded.skipped_count(),
        filter,
        positives: dataset.positives(),
        negatives: dataset.negatives(),
        rebalanced_positives: rebalanced.positives(),
        rebalanced_negatives: rebalanced.negatives(),
        train: train.len(),
        test: test.len(),
        delay: delay_stats(&dataset.records, p.label).ok(),
        times_cited_welch: citation_gap_welch_t(&times_cited(1), &times_cited(0)).ok(),
    };

    let dir = ctx.stage_dir(Stage::Ingest);
    create_dir(&dir)?;
    let prov = ctx.provenance(Stage::Ingest);
    write_corpus(&dir.join("filtered.jsonl"), &dataset.records)?;
    let manifest = SplitManifest::new(&split, &train, &test);
    write_json(&dir.join("split_manifest.json"), &Artifact { provenance: prov.clone(), data: manifest })?;
    write_json(&dir.join("filter_report.json"), &Artifact { provenance: prov.clone(), data: filter })?;
    write_json(&dir.join("stats.json"), &Artifact { provenance: prov, data: stats.clone() })?;
    let files = ["filtered.jsonl", "split_manifest.json", "filter_report.json", "stats.json"];
    seal_stage(ctx, Stage::Ingest, &files.map(String::from))?;
    Ok(stats)
}

struct Ingested {
    /// Every record that passed the filter.
    full: LabeledDataset,
    train: LabeledDataset,
    test: LabeledDataset,
}

fn load_ingested(ctx: &RunContext) -> Result<Ingested, StageError> {
    let dir = ctx.stage_dir(Stage::Ingest);
    let manifest: Artifact<SplitManifest> = read_json(&dir.join("split_manifest.json"), Stage::Ingest)?;
    let manifest = manifest.data;
    if manifest.kind != ctx.profile.label {
        return Err(StageError::Inconsistent(format!(
            "ingest split was built for label {}, profile asks for {}",
            manifest.kind, ctx.profile.label
        )));
    }
    let filtered = dir.join("filtered.jsonl");
    require(&filtered, Stage::Ingest)?;
    let full = assign_labels(load_corpus(&filtered, true)?.records, manifest.kind);
    let index: BTreeMap<&str, usize> = full.records.iter().enumerate().map(|(i, r)| (r.id.as_str(), i)).collect();
    let pick = |members: &[SplitMember]| -> Result<LabeledDataset, StageError> {
        let mut idx = Vec::with_capacity(members.len());
        for m in members {
            let &i = index
                .get(m.id.as_str())
                .ok_or_else(|| StageError::Inconsistent(format!("split member {} is not in filtered.jsonl", m.id)))?;
            if full.labels[i] != m.label {
                return Err(StageError::Inconsistent(format!("label of {} differs from the split manifest", m.id)));
            }
            idx.push(i);
        }
        Ok(full.select(&idx))
    };
    let train = pick(&manifest.train)?;
    let test = pick(&manifest.test)?;
    Ok(Ingested { full, train, test })
}

/// Abstract embeddings keyed by record id. `persist` writes new vectors back
/// to the cache file.
fn embed_records(ctx: &RunContext, records: &[PublicationRecord], persist: bool) -> Result<EmbeddingMap, StageError> {
    let mut cache = EmbeddingCache::open(&ctx.embedding_cache_path())?;
    let texts: Vec<String> = records.iter().map(|r| r.r#abstract.clone().unwrap_or_default()).collect();
    let vectors = embed_with_cache(&texts, &ctx.profile.embedder, &mut cache)?;
    if persist {
        cache.save()?;
    }
    Ok(records.iter().map(|r| r.id.clone()).zip(vectors).collect())
}

/// Fits the feature context on the training partition and writes train/test
/// matrices for every tier. Returns the tiers written.
pub fn run_featurize(ctx: &RunContext) -> Result<Vec<Tier>, PipelineError> {
    tagged(Stage::Featurize, featurize(ctx))
}

fn featurize(ctx: &RunContext) -> Result<Vec<Tier>, StageError> {
    let p = &ctx.profile;
    let ing = load_ingested(ctx)?;
    let dir = ctx.stage_dir(Stage::Featurize);
    create_dir(&dir)?;
    let embeddings = if p.tiers.iter().any(|t| t.includes(BlockTag::Abstract)) {
        let all: Vec<PublicationRecord> = ing.train.records.iter().chain(&ing.test.records).cloned().collect();
        Some(embed_records(ctx, &all, true)?)
    } else {
        None
    };
    let fctx = fit_context(&ing.train.records, embeddings.as_ref(), &p.feature_config())?;
    let prov = ctx.provenance(Stage::Featurize);
    write_json(&dir.join("context.json"), &Artifact { provenance: prov.clone(), data: &fctx })?;

    let note = comment(ctx, Stage::Featurize);
    let mut files = vec!["context.json".to_string()];
    for &tier in &p.tiers {
        let tdir = tier_dir(ctx, Stage::Featurize, tier);
        create_dir(&tdir)?;
        let mut manifest = None;
        for (name, part) in [("train.csv", &ing.train), ("test.csv", &ing.test)] {
            let m = assemble(&part.records, &fctx, embeddings.as_ref(), tier)?;
            leakage_guard(&m)?;
            write_feature_csv(&tdir.join(name), &m, &part.labels, Some(&note))?;
            manifest = Some(FeatureManifest::new(&m, &fctx));
            files.push(format!("{tier}/{name}"));
        }
        write_json(&tdir.join("features.json"), &Artifact { provenance: prov.clone(), data: manifest })?;
        files.push(format!("{tier}/features.json"));
    }
    seal_stage(ctx, Stage::Featurize, &files)?;
    Ok(p.tiers.clone())
}

fn load_features(ctx: &RunContext, tier: Tier, part: &str) -> Result<LabeledFeatures, StageError> {
    let tdir = tier_dir(ctx, Stage::Featurize, tier);
    let manifest: Artifact<Option<FeatureManifest>> = read_json(&tdir.join("features.json"), Stage::Featurize)?;
    let manifest = manifest
        .data
        .ok_or_else(|| StageError::Inconsistent(format!("{tier} feature manifest is empty")))?;
    let path = tdir.join(part);
    require(&path, Stage::Featurize)?;
    let lf = read_feature_csv(&path, &manifest)?;
    // The files may have been edited since featurize ran.
    leakage_guard(&lf.features)?;
    Ok(lf)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub tier: Tier,
    pub rows: usize,
    pub features: usize,
    pub best_iteration: usize,
    pub history: TrainingHistory,
}

pub fn run_train(ctx: &RunContext) -> Result<Vec<TrainingSummary>, PipelineError> {
    tagged(Stage::Train, train(ctx))
}

fn train(ctx: &RunContext) -> Result<Vec<TrainingSummary>, StageError> {
    let cfg = ctx.profile.gbdt_config();
    let prov = ctx.provenance(Stage::Train);
    // Check every prerequisite before spending time on any tier.
    for &tier in &ctx.profile.tiers {
        require(&tier_dir(ctx, Stage::Featurize, tier).join("features.json"), Stage::Featurize)?;
    }
    let mut out = Vec::new();
    let mut files = Vec::new();
    for &tier in &ctx.profile.tiers {
        let lf = load_features(ctx, tier, "train.csv")?;
        let (model, history) = fit_with_history(&lf.features.values, &lf.labels, &cfg)?;
        let tdir = tier_dir(ctx, Stage::Train, tier);
        create_dir(&tdir)?;
        let prov_value = serde_json::to_value(&prov).expect("provenance serializes");
        save_model_with(&model, &tdir.join("model.json"), prov_value)?;
        let summary = TrainingSummary {
            tier,
            rows: lf.features.n_rows(),
            features: lf.features.n_cols(),
            best_iteration: model.best_iteration,
            history,
        };
        write_json(&tdir.join("training.json"), &Artifact { provenance: prov.clone(), data: &summary })?;
        files.push(format!("{tier}/model.json"));
        files.push(format!("{tier}/training.json"));
        out.push(summary);
    }
    seal_stage(ctx, Stage::Train, &files)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierReport {
    pub tier: Tier,
    pub label: LabelKind,
    pub report: EvalReport,
}

/// Scores the test partition of every tier.
pub fn run_eval(ctx: &RunContext) -> Result<Vec<TierReport>, PipelineError> {
    tagged(Stage::Eval, eval(ctx))
}

fn eval(ctx: &RunContext) -> Result<Vec<TierReport>, StageError> {
    let prov = ctx.provenance(Stage::Eval);
    let note = prov.line();
    let mut out = Vec::new();
    let mut files = Vec::new();
    for &tier in &ctx.profile.tiers {
        let model_path = tier_dir(ctx, Stage::Train, tier).join("model.json");
        require(&model_path, Stage::Train)?;
        let model = load_model(&model_path)?;
        let lf = load_features(ctx, tier, "test.csv")?;
        let probs = predict_proba(&model, &lf.features.values)?;
        let report = evaluate(&lf.labels, &probs, THRESHOLD)?;

        let tdir = tier_dir(ctx, Stage::Eval, tier);
        create_dir(&tdir)?;
        write_curve_csv(&tdir.join("roc.csv"), ["fpr", "tpr"], &report.roc_points, Some(&note))?;
        write_curve_csv(&tdir.join("pr.csv"), ["recall", "precision"], &report.pr_points, Some(&note))?;
        let mut pred = format!("# {note}\nid,label,probability\n");
        for ((id, &y), p) in lf.features.row_ids.iter().zip(&lf.labels).zip(&probs) {
            let _ = writeln!(pred, "{id},{y},{p}");
        }
        write_text(&tdir.join("predictions.csv"), &pred)?;
        let tr = TierReport { tier, label: ctx.profile.label, report };
        write_json(&tdir.join("report.json"), &Artifact { provenance: prov.clone(), data: &tr })?;
        for f in ["report.json", "roc.csv", "pr.csv", "predictions.csv"] {
            files.push(format!("{tier}/{f}"));
        }
        out.push(tr);
    }
    seal_stage(ctx, Stage::Eval, &files)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalSummary {
    pub tier: Tier,
    pub points: usize,
    pub from_test_partition: usize,
    pub shortfalls: Vec<Shortfall>,
    pub report: DecadeReport,
}

/// Per-year audit of one trained tier.
pub fn run_temporal(ctx: &RunContext) -> Result<TemporalSummary, PipelineError> {
    tagged(Stage::Temporal, temporal(ctx))
}

fn temporal(ctx: &RunContext) -> Result<TemporalSummary, StageError> {
    let p = &ctx.profile;
    let t = &p.temporal;
    let tier = p.temporal_tier();
    let model_path = tier_dir(ctx, Stage::Train, tier).join("model.json");
    require(&model_path, Stage::Train)?;
    let model = load_model(&model_path)?;
    let fctx: Artifact<FeatureContext> = read_json(&ctx.stage_dir(Stage::Featurize).join("context.json"), Stage::Featurize)?;
    let ing = load_ingested(ctx)?;
    let test_ids: BTreeSet<String> = ing.test.ids().into_iter().collect();

    let sample = sample_per_year(&ing.full, &test_ids, t.n_per_label, t.year_min..=t.year_max, p.seed, t.prefer_test);
    let embeddings = if tier.includes(BlockTag::Abstract) {
        let records: Vec<PublicationRecord> = sample.samples.iter().map(|s| s.record.clone()).collect();
        Some(embed_records(ctx, &records, false)?)
    } else {
        None
    };
    let points = delta_labels(&model, &sample.samples, &fctx.data, embeddings.as_ref(), tier)?;
    let report = decade_confusions(&points, &t.decades)?;

    let dir = ctx.stage_dir(Stage::Temporal);
    create_dir(&dir)?;
    let prov = ctx.provenance(Stage::Temporal);
    write_points_csv(&dir.join("delta_labels.csv"), &points, Some(&prov.line()))?;
    let title = format!("Predicted versus actual label, {tier} {}", p.label);
    let svg = format!("<!-- {} -->\n{}", prov.line(), render_delta_svg(&points, (t.year_min, t.year_max), &title));
    write_text(&dir.join("delta.svg"), &svg)?;
    let summary = TemporalSummary {
        tier,
        points: points.len(),
        from_test_partition: points.iter().filter(|x| x.from_test_partition).count(),
        shortfalls: sample.shortfalls,
        report,
    };
    write_json(&dir.join("decades.json"), &Artifact { provenance: prov, data: &summary })?;
    seal_stage(ctx, Stage::Temporal, &["delta_labels.csv", "delta.svg", "decades.json"].map(String::from))?;
    Ok(summary)
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

fn opt_pct(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), pct)
}

/// Renders ROC/PR overlays from the eval curve files and returns the metric
/// tables as Markdown.
pub fn run_report(ctx: &RunContext) -> Result<String, PipelineError> {
    tagged(Stage::Report, report(ctx))
}

fn report(ctx: &RunContext) -> Result<String, StageError> {
    let p = &ctx.profile;
    let mut found = Vec::new();
    for &tier in &p.tiers {
        let tdir = tier_dir(ctx, Stage::Eval, tier);
        let path = tdir.join("report.json");
        if !path.exists() {
            continue;
        }
        let tr: Artifact<TierReport> = read_json(&path, Stage::Eval)?;
        let roc = read_curve_csv(&tdir.join("roc.csv"))?;
        let pr = read_curve_csv(&tdir.join("pr.csv"))?;
        found.push((tr.data, roc, pr));
    }
    if found.is_empty() {
        return Err(StageError::MissingArtifact { stage: Stage::Eval, path: ctx.stage_dir(Stage::Eval) });
    }

    let prov = ctx.provenance(Stage::Report);
    let dir = ctx.stage_dir(Stage::Report);
    create_dir(&dir)?;
    let roc_series: Vec<Series> = found
        .iter()
        .map(|(r, roc, _)| Series { name: format!("{} (AUC {:.3})", r.tier, r.report.auc_roc), points: roc })
        .collect();
    let pr_series: Vec<Series> =
        found.iter().map(|(r, _, pr)| Series { name: r.tier.to_string(), points: pr }).collect();
    let roc_title = format!("ROC, label {}", p.label);
    let pr_title = format!("Precision-recall, label {}", p.label);
    let roc = render_curves_svg(
        &PlotSpec { title: &roc_title, x_label: "False positive rate", y_label: "True positive rate", diagonal: true },
        &roc_series,
    );
    let pr = render_curves_svg(
        &PlotSpec { title: &pr_title, x_label: "Recall", y_label: "Precision", diagonal: false },
        &pr_series,
    );
    write_text(&dir.join("roc_overlay.svg"), &format!("<!-- {} -->\n{roc}", prov.line()))?;
    write_text(&dir.join("pr_overlay.svg"), &format!("<!-- {} -->\n{pr}", prov.line()))?;

    let mut md = String::new();
    let _ = writeln!(md, "<!-- {} -->", prov.line());
    let _ = writeln!(md, "# {} (label {})\n", p.name, p.label);
    let _ = writeln!(md, "| tier | n | AUC | accuracy % | precision % | recall % | F1 % | lift % |");
    let _ = writeln!(md, "|---|---:|---:|---:|---:|---:|---:|---:|");
    for (r, _, _) in &found {
        let m = &r.report.metrics;
        let _ = writeln!(
            md,
            "| {} | {} | {:.4} | {} | {} | {} | {} | {} |",
            r.tier,
            r.report.n,
            r.report.auc_roc,
            pct(m.accuracy),
            opt_pct(m.precision),
            opt_pct(m.recall),
            opt_pct(m.f1),
            pct(m.lift)
        );
    }
    for (r, _, _) in &found {
        let cm = &r.report.cm;
        let _ = writeln!(md, "\n## Confusion matrix, {}\n", r.tier);
        let _ = writeln!(md, "| | predicted 0 | predicted 1 |\n|---|---:|---:|");
        let _ = writeln!(md, "| real 0 | {} | {} |\n| real 1 | {} | {} |", cm.tn, cm.fp, cm.fn_, cm.tp);
    }
    let decades = ctx.stage_dir(Stage::Temporal).join("decades.json");
    if decades.exists() {
        let t: Artifact<TemporalSummary> = read_json(&decades, Stage::Temporal)?;
        let _ = writeln!(md, "\n## Temporal audit, {} ({} points)\n", t.data.tier, t.data.points);
        let _ = writeln!(md, "| years | tn | fp | fn | tp | accuracy % |\n|---|---:|---:|---:|---:|---:|");
        for d in &t.data.report.decades {
            let _ = writeln!(
                md,
                "| {}-{} | {} | {} | {} | {} | {} |",
                d.start,
                d.end,
                d.cm.tn,
                d.cm.fp,
                d.cm.fn_,
                d.cm.tp,
                opt_pct(d.accuracy)
            );
        }
    }
    write_text(&dir.join("tables.md"), &md)?;
    seal_stage(ctx, Stage::Report, &["roc_overlay.svg", "pr_overlay.svg", "tables.md"].map(String::from))?;
    Ok(md)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub ingest: IngestStats,
    pub training: Vec<TrainingSummary>,
    pub reports: Vec<TierReport>,
    pub temporal: TemporalSummary,
    pub tables: String,
}

/// Every stage in order; a profile without `corpus.path` starts with synth.
pub fn run_pipeline(ctx: &RunContext) -> Result<RunSummary, PipelineError> {
    if ctx.profile.corpus.path.is_none() {
        run_synth(ctx)?;
    }
    let ingest = run_ingest(ctx)?;
    run_featurize(ctx)?;
    let training = run_train(ctx)?;
    let reports = run_eval(ctx)?;
    let temporal = run_temporal(ctx)?;
    let tables = run_report(ctx)?;

    let mut log = format!("{}\n", ctx.provenance(Stage::Report).line());
    let _ = writeln!(
        log,
        "ingest: loaded {} kept {} positives {} negatives {} train {} test {}",
        ingest.loaded, ingest.filter.kept, ingest.positives, ingest.negatives, ingest.train, ingest.test
    );
    for t in &training {
        let _ = writeln!(log, "train {}: {} rows, {} features, {} trees", t.tier, t.rows, t.features, t.best_iteration);
    }
    for r in &reports {
        let _ = writeln!(log, "eval {}: auc {} accuracy {}", r.tier, r.report.auc_roc, r.report.metrics.accuracy);
    }
    let _ = writeln!(log, "temporal {}: {} points", temporal.tier, temporal.points);
    tagged(Stage::Report, write_text(&ctx.out.join("log.txt"), &log))?;
    Ok(RunSummary { ingest, training, reports, temporal, tables })
}
