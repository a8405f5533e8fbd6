use std::path::{Path, PathBuf};

use clap::Args;
use oar_evalkit::components::Connectivity;
use oar_evalkit::harmonize::{ComplementPolicy, FilterRules};
use oar_evalkit::metrics::{write_metric_csv, MaskPolicy, MetricTable};
use oar_evalkit::pipeline::{
    case_ids_in, evaluate_dirs, harmonize_manifest, postprocess_dir, EvaluateOptions, HarmonizeOptions,
};
use oar_evalkit::report::{boxplot_export, summarize, write_summary_csv, GroupKey, LabelledTable};
use oar_evalkit::stats::MetricKind;
use oar_evalkit::{load_manifest, ErrorClass, Manifest};

use crate::{to_json, write_file, Failure, SchemaArg};

#[derive(Args, Debug)]
pub struct HarmonizeArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    schema: SchemaArg,
    /// Output directory for labels, provenance sidecars and the exclusion log.
    #[arg(long)]
    out: PathBuf,
    /// Abort on the first unreadable case.
    #[arg(long)]
    strict: bool,
    /// Inclusive axial slice-count range, `min:max`.
    #[arg(long, default_value = "80:400")]
    slice_range: String,
    /// Most organs that may stay missing after complementation.
    #[arg(long, default_value_t = 4)]
    max_missing: usize,
    /// Type 1 organs that may be filled from auxiliary labels.
    #[arg(long, value_delimiter = ',', default_value = "heart,pancreas,stomach_bowel")]
    complement: Vec<String>,
    /// Do not fill missing Type 2 organs from auxiliary labels.
    #[arg(long)]
    no_type2_complement: bool,
}

fn parse_range(text: &str) -> Result<(usize, usize), Failure> {
    let bad = || Failure::validation(format!("slice range `{text}` is not `min:max`"));
    let (a, b) = text.split_once(':').ok_or_else(bad)?;
    let lo: usize = a.trim().parse().map_err(|_| bad())?;
    let hi: usize = b.trim().parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

pub fn harmonize(args: HarmonizeArgs) -> Result<(), Failure> {
    let manifest = load_manifest(&args.manifest)?;
    let schema = args.schema.load(Some((&manifest, &args.manifest)))?;
    for organ in &args.complement {
        if schema.organ(organ).is_none() {
            return Err(Failure::validation(format!(
                "--complement names unknown organ `{organ}`"
            )));
        }
    }
    let opts = HarmonizeOptions {
        policy: ComplementPolicy {
            type1_list: args.complement.clone(),
            type2_all: !args.no_type2_complement,
        },
        rules: FilterRules {
            slice_range: parse_range(&args.slice_range)?,
            max_missing: args.max_missing,
        },
        strict: args.strict,
    };
    let summary = harmonize_manifest(&manifest, &schema, &opts, &args.out)?;
    write_file(&args.out.join("harmonize_summary.json"), to_json(&summary)?)?;
    println!(
        "harmonized {} cases, excluded {} (log: {})",
        summary.included.len(),
        summary.excluded.len(),
        args.out.join("exclusions.jsonl").display()
    );
    if let Some(first) = summary.errors.first() {
        for e in &summary.errors {
            eprintln!("failed: {}: {}", e.case_id, e.message);
        }
        return Err(Failure::new(
            first.class,
            format!("{} cases failed", summary.errors.len()),
        ));
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Directory of predicted label volumes, `<case_id>.nii.gz`.
    #[arg(long)]
    pred: PathBuf,
    /// Directory of reference label volumes.
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Output directory for metric and summary tables.
    #[arg(long)]
    out: PathBuf,
    /// Case metadata; limits evaluation to its cases and enables the
    /// nephrectomy false-positive block.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    schema: SchemaArg,
    /// Resample predictions onto the reference grid when they differ.
    #[arg(long)]
    resample: bool,
    /// Exit non-zero when any case could not be evaluated.
    #[arg(long)]
    strict: bool,
    /// Organs evaluated only on slices containing their reference.
    #[arg(long, value_delimiter = ',', default_value = "stomach_bowel")]
    masked: Vec<String>,
    /// Predicted removed-kidney volume (mm^3) counted as a false positive.
    #[arg(long, default_value_t = 0.0)]
    fpr_threshold: f64,
}

fn load_optional_manifest(path: Option<&Path>) -> Result<Option<Manifest>, Failure> {
    Ok(path.map(load_manifest).transpose()?)
}

pub fn evaluate(args: EvaluateArgs) -> Result<(), Failure> {
    let manifest = load_optional_manifest(args.manifest.as_deref())?;
    let schema = args.schema.load(manifest.as_ref().zip(args.manifest.as_deref()))?;
    let case_ids: Vec<String> = match &manifest {
        Some(m) => m.cases.iter().map(|c| c.case_id.clone()).collect(),
        None => case_ids_in(&args.reference)?,
    };
    if case_ids.is_empty() {
        return Err(Failure::validation("no cases to evaluate"));
    }
    let opts = EvaluateOptions {
        mask_policy: MaskPolicy {
            organs: args.masked.iter().filter(|s| !s.is_empty()).cloned().collect(),
        },
        resample: args.resample,
        fpr_threshold_mm3: args.fpr_threshold,
    };
    let table = evaluate_dirs(
        &case_ids,
        manifest.as_ref(),
        &args.pred,
        &args.reference,
        &schema,
        &opts,
    )?;
    write_outputs(&args.out, &table)?;
    println!(
        "evaluated {} rows from {} cases",
        table.rows.len(),
        case_ids.len() - table.errors.len()
    );
    if let Some(fpr) = &table.fpr {
        println!("removed-kidney false positives: {fpr}");
    }
    for e in &table.errors {
        eprintln!("not evaluated: {}: {}", e.case_id, e.message);
    }
    let hard = table.errors.iter().find(|e| e.class != ErrorClass::Io);
    match (hard, table.errors.first()) {
        (Some(e), _) => Err(Failure::new(e.class, format!("{}: {}", e.case_id, e.message))),
        (None, Some(e)) if args.strict => Err(Failure::new(
            e.class,
            format!("{} cases not evaluated", table.errors.len()),
        )),
        _ => Ok(()),
    }
}

fn write_outputs(out: &Path, table: &MetricTable) -> Result<(), Failure> {
    let mut csv = Vec::new();
    write_metric_csv(&table.rows, &mut csv)?;
    write_file(&out.join("metrics.csv"), csv)?;
    write_file(&out.join("metrics.json"), to_json(table)?)?;
    let summaries = summarize(&table.rows);
    let mut csv = Vec::new();
    write_summary_csv(&summaries, &mut csv)?;
    write_file(&out.join("summary.csv"), csv)?;
    let doc = serde_json::json!({
        "quartile_rule": oar_evalkit::report::QUARTILE_RULE,
        "convention": table.convention,
        "fpr": table.fpr,
        "organs": summaries,
    });
    write_file(&out.join("summary.json"), to_json(&doc)?)?;
    let tables = [LabelledTable {
        model: "prediction".into(),
        rows: table.rows.clone(),
    }];
    for metric in [MetricKind::Dsc, MetricKind::Hd95, MetricKind::Msd] {
        let doc = boxplot_export(&tables, None, &[GroupKey::Organ], metric)?;
        write_file(&out.join(format!("boxplot_{metric}.json")), to_json(&doc)?)?;
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct PostprocessArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Voxel connectivity: 6, 18 or 26.
    #[arg(long, default_value_t = 26)]
    connectivity: u32,
}

pub fn postprocess(args: PostprocessArgs) -> Result<(), Failure> {
    let conn = Connectivity::from_count(args.connectivity)?;
    let ids = case_ids_in(&args.pred)?;
    let errors = postprocess_dir(&ids, &args.pred, &args.out, conn)?;
    println!("post-processed {} of {} cases", ids.len() - errors.len(), ids.len());
    if let Some(first) = errors.first() {
        for e in &errors {
            eprintln!("failed: {}: {}", e.case_id, e.message);
        }
        return Err(Failure::new(first.class, format!("{} cases failed", errors.len())));
    }
    Ok(())
}
