use std::path::PathBuf;

use clap::Args;
use oar_evalkit::load_manifest;
use oar_evalkit::metrics::read_metric_csv_file;
use oar_evalkit::report::{boxplot_export, GroupKey, LabelledTable};
use oar_evalkit::stats::{
    compare_tables, make_cv_folds, make_split, parse_ratio, subgroup_analysis, Bucket, Dimension, MetricKind,
    SubgroupSpec,
};

use crate::{to_json, write_file, Failure};

fn parse_metric(s: &str) -> Result<MetricKind, String> {
    s.parse().map_err(|e: oar_evalkit::Error| e.to_string())
}

fn parse_dimension(s: &str) -> Result<Dimension, String> {
    s.parse().map_err(|e: oar_evalkit::Error| e.to_string())
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Metric CSV of the first model.
    table_a: PathBuf,
    /// Metric CSV of the second model.
    table_b: PathBuf,
    /// Signed-rank test on cases present in both tables (default: rank-sum).
    #[arg(long)]
    paired: bool,
    #[arg(long, default_value = "dsc", value_parser = parse_metric)]
    metric: MetricKind,
    /// Display names of the two models, `a,b` (default: file stems).
    #[arg(long, value_parser = parse_names)]
    names: Option<(String, String)>,
    /// Comparison report JSON.
    #[arg(long)]
    out: PathBuf,
    /// Also write box-plot data grouped by model and organ.
    #[arg(long)]
    boxplot: Option<PathBuf>,
}

fn parse_names(text: &str) -> Result<(String, String), String> {
    match text.split_once(',') {
        Some((a, b)) if !a.is_empty() && !b.is_empty() && !b.contains(',') => Ok((a.to_string(), b.to_string())),
        _ => Err(format!("expected two names `a,b`, got `{text}`")),
    }
}

fn stem(p: &std::path::Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| p.display().to_string())
}

pub fn compare(args: CompareArgs) -> Result<(), Failure> {
    let a = read_metric_csv_file(&args.table_a)?;
    let b = read_metric_csv_file(&args.table_b)?;
    let (name_a, name_b) = match &args.names {
        Some((a, b)) => (a.clone(), b.clone()),
        None => {
            let (sa, sb) = (stem(&args.table_a), stem(&args.table_b));
            if sa == sb {
                ("a".to_string(), "b".to_string())
            } else {
                (sa, sb)
            }
        }
    };
    let report = compare_tables((&name_a, &a), (&name_b, &b), args.metric, args.paired)?;
    write_file(&args.out, to_json(&report)?)?;
    if let Some(path) = &args.boxplot {
        let tables = [
            LabelledTable {
                model: name_a.clone(),
                rows: a,
            },
            LabelledTable {
                model: name_b.clone(),
                rows: b,
            },
        ];
        let doc = boxplot_export(&tables, None, &[GroupKey::Model, GroupKey::Organ], args.metric)?;
        write_file(path, to_json(&doc)?)?;
    }
    for organ in &report.organs {
        match organ.comparisons.first() {
            Some(c) => println!("{:<20} p={:.4e} {}", organ.organ, c.p_raw, c.stars),
            None => println!("{:<20} not tested", organ.organ),
        }
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct SubgroupArgs {
    /// Metric CSV produced by `evaluate`.
    #[arg(long)]
    metrics: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    /// sex, tumor_type, iv_contrast or age (age_group).
    #[arg(long, value_parser = parse_dimension)]
    by: Dimension,
    #[arg(long, default_value = "dsc", value_parser = parse_metric)]
    metric: MetricKind,
    /// Smallest group size that is tested.
    #[arg(long, default_value_t = 3)]
    min_n: usize,
    /// Test dimensions that are descriptive-only by default (iv_contrast).
    #[arg(long)]
    test_all: bool,
    #[arg(long)]
    out: PathBuf,
}

pub fn subgroup(args: SubgroupArgs) -> Result<(), Failure> {
    let rows = read_metric_csv_file(&args.metrics)?;
    let manifest = load_manifest(&args.manifest)?;
    let mut spec = SubgroupSpec::new(args.by);
    spec.min_n = args.min_n;
    if args.test_all {
        spec.descriptive_only.clear();
    }
    let report = subgroup_analysis(&rows, &manifest, &spec, args.metric)?;
    write_file(&args.out, to_json(&report)?)?;
    let tests: usize = report.organs.iter().map(|o| o.comparisons.len()).sum();
    println!(
        "{} organs, {tests} tests, Bonferroni family size {}",
        report.organs.len(),
        report.family_size
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct SplitArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Bucket ratio `train:val:test`, e.g. 132:21:36 or 64:16:20.
    #[arg(long)]
    ratio: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Case attributes to balance across buckets.
    #[arg(long, value_delimiter = ',', value_parser = parse_dimension)]
    stratify: Vec<Dimension>,
    /// Write this many independent splits (seeds seed, seed+1, ...).
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

pub fn split(args: SplitArgs) -> Result<(), Failure> {
    let manifest = load_manifest(&args.manifest)?;
    let ratio = parse_ratio(&args.ratio)?;
    let plans = match args.folds {
        Some(k) => make_cv_folds(&manifest, k, ratio, args.seed, &args.stratify)?,
        None => vec![make_split(&manifest, ratio, args.seed, &args.stratify)?],
    };
    let text = match args.folds {
        Some(_) => to_json(&plans)?,
        None => plans[0].to_json()?,
    };
    write_file(&args.out, text)?;
    for p in &plans {
        let counts: Vec<String> = Bucket::ALL.iter().map(|b| format!("{b}={}", p.count(*b))).collect();
        println!("seed {}: {}", p.seed, counts.join(" "));
    }
    Ok(())
}
