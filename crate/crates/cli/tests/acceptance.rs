//! One pass/fail line per acceptance criterion; exits non-zero on failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use oar_evalkit::harmonize::{resolve_overlaps, OrganMasks};
use oar_evalkit::manifest::{Contrast, NephrectomySide, Sex, TumorType};
use oar_evalkit::metrics::{dsc, edt, evaluate_case, hd95, msd, surface_distances, MaskPolicy, MetricStatus};
use oar_evalkit::nifti::{read_image, write_image, write_labels};
use oar_evalkit::pipeline::{evaluate_dirs, EvaluateOptions};
use oar_evalkit::report::{likert_summarize, parse_likert_lines, ScoreSubmission};
use oar_evalkit::review::ViewAxis;
use oar_evalkit::stats::{make_split, parse_ratio, wilcoxon_rank_sum, wilcoxon_signed_rank, Bucket, PairedSample};
use oar_evalkit::{
    AxisCode, AxisCodes, CaseRecord, Grid, ImageVolume, LabelVolume, Manifest, Mask, OrganSchema, Volume, VoxelData,
};
use oar_evalkit_client::{ReviewClient, SliceOptions};
use oar_evalkit_service::{serve, AppState, ServiceConfig};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn single_threaded<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(f)
}

// ---------------------------------------------------------------- oracles

fn random_mask(r: &mut ChaCha8Rng, grid: Grid) -> Mask {
    let [nx, ny, nz] = grid.dims;
    let mut m = Volume::filled(grid, false).unwrap();
    for _ in 0..r.random_range(1..4) {
        let lo = [r.random_range(0..nx), r.random_range(0..ny), r.random_range(0..nz)];
        let hi = [
            r.random_range(lo[0]..nx),
            r.random_range(lo[1]..ny),
            r.random_range(lo[2]..nz),
        ];
        for k in lo[2]..=hi[2] {
            for j in lo[1]..=hi[1] {
                for i in lo[0]..=hi[0] {
                    m.set(i, j, k, true);
                }
            }
        }
    }
    let speckle = r.random_range(0.0..0.1);
    for v in m.data_mut() {
        if r.random_bool(speckle) {
            *v = true;
        }
    }
    m
}

fn coords(mask: &Mask) -> Vec<[usize; 3]> {
    let g = mask.grid();
    (0..g.len()).filter(|&i| mask.data()[i]).map(|i| g.coords(i)).collect()
}

fn brute_surface(mask: &Mask) -> Vec<[usize; 3]> {
    let d = mask.grid().dims;
    coords(mask)
        .into_iter()
        .filter(|&c| {
            (0..3).any(|ax| {
                [-1i64, 1].iter().any(|&s| {
                    let n = c[ax] as i64 + s;
                    if n < 0 || n >= d[ax] as i64 {
                        return true;
                    }
                    let mut nc = c;
                    nc[ax] = n as usize;
                    !*mask.get(nc[0], nc[1], nc[2])
                })
            })
        })
        .collect()
}

fn mm(a: [usize; 3], b: [usize; 3], s: [f64; 3]) -> f64 {
    (0..3)
        .map(|ax| ((a[ax] as f64 - b[ax] as f64) * s[ax]).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// (dsc, hd95, msd) by counting and all-pairs surface distances.
fn brute_metrics(gt: &Mask, pred: &Mask) -> (f64, f64, f64) {
    let inter = gt.data().iter().zip(pred.data()).filter(|(a, b)| **a && **b).count();
    let dsc = 2.0 * inter as f64 / (gt.count() + pred.count()) as f64;
    let s = gt.grid().spacing;
    let (gs, ps) = (brute_surface(gt), brute_surface(pred));
    let nearest = |from: &[[usize; 3]], to: &[[usize; 3]]| -> Vec<f64> {
        from.iter()
            .map(|&a| to.iter().map(|&b| mm(a, b, s)).fold(f64::INFINITY, f64::min))
            .collect()
    };
    let mut d = nearest(&ps, &gs);
    d.extend(nearest(&gs, &ps));
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = 0.95 * (d.len() - 1) as f64;
    let i = pos.floor() as usize;
    let p95 = if i + 1 < d.len() {
        d[i] + (pos - i as f64) * (d[i + 1] - d[i])
    } else {
        d[i]
    };
    (dsc, p95, mean)
}

fn ranks(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|v| {
            let below = values.iter().filter(|w| *w < v).count() as f64;
            let equal = values.iter().filter(|w| *w == v).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

fn enumerated_p(all: &[f64], observed: f64) -> f64 {
    let n = all.len() as f64;
    let le = all.iter().filter(|s| **s <= observed + 1e-9).count() as f64 / n;
    let ge = all.iter().filter(|s| **s >= observed - 1e-9).count() as f64 / n;
    (2.0 * le.min(ge)).min(1.0)
}

fn signed_rank_oracle(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if d.is_empty() {
        return 1.0;
    }
    let r = ranks(&d.iter().map(|v| v.abs()).collect::<Vec<_>>());
    let observed: f64 = r.iter().zip(&d).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();
    let all: Vec<f64> = (0..1u32 << d.len())
        .map(|bits| (0..d.len()).filter(|i| bits >> i & 1 == 1).map(|i| r[i]).sum())
        .collect();
    enumerated_p(&all, observed)
}

fn rank_sum_oracle(x: &[f64], y: &[f64]) -> f64 {
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let r = ranks(&pooled);
    let observed: f64 = r[..x.len()].iter().sum();
    let all: Vec<f64> = (0..1u32 << pooled.len())
        .filter(|bits| bits.count_ones() as usize == x.len())
        .map(|bits| (0..pooled.len()).filter(|i| bits >> i & 1 == 1).map(|i| r[i]).sum())
        .collect();
    enumerated_p(&all, observed)
}

// ---------------------------------------------------------------- criteria

fn metric_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng(101);
    let (mut pairs, mut worst) = (0, 0.0f64);
    while pairs < 200 {
        let grid = Grid::new(
            [r.random_range(1..=16), r.random_range(1..=16), r.random_range(1..=16)],
            [
                r.random_range(0.5..=3.0),
                r.random_range(0.5..=3.0),
                r.random_range(0.5..=3.0),
            ],
        )
        .unwrap();
        let (a, b) = (random_mask(&mut r, grid), random_mask(&mut r, grid));
        if a.is_blank() || b.is_blank() {
            continue;
        }
        pairs += 1;
        let d = surface_distances(&a, &b).map_err(|e| e.to_string())?;
        let got = (dsc(&a, &b).unwrap(), hd95(&d).unwrap(), msd(&d).unwrap());
        let want = brute_metrics(&a, &b);
        let err = (got.0 - want.0)
            .abs()
            .max((got.1 - want.1).abs())
            .max((got.2 - want.2).abs());
        worst = worst.max(err);
        ensure!(err <= 1e-9, "pair {pairs}: got {got:?}, oracle {want:?}");
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!(
        "{pairs} pairs, max abs err {worst:.1e}, {:.1}s",
        elapsed.as_secs_f64()
    ))
}

fn analytic_phantoms() -> Outcome {
    let g = Grid::new([8, 8, 8], [1.0; 3]).unwrap();
    let cube = |x0: usize| {
        let mut m = Volume::filled(g, false).unwrap();
        for k in 2..5 {
            for j in 2..5 {
                for i in x0..x0 + 3 {
                    m.set(i, j, k, true);
                }
            }
        }
        m
    };
    let d = dsc(&cube(2), &cube(3)).unwrap();
    ensure!(d == 2.0 / 3.0, "shifted cubes DSC {d}");

    let line = |y: usize| {
        let mut m = Volume::filled(g, false).unwrap();
        for i in 0..8 {
            m.set(i, y, 4, true);
        }
        m
    };
    let dist = surface_distances(&line(2), &line(4)).unwrap();
    let (h, m) = (hd95(&dist).unwrap(), msd(&dist).unwrap());
    ensure!(h == 2.0 && m == 2.0, "parallel lines HD95 {h} MSD {m}");

    let mut r = rng(102);
    let base = Grid::new([10, 9, 7], [0.9, 1.3, 2.2]).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (a, b) = (random_mask(&mut r, base), random_mask(&mut r, base));
        if a.is_blank() || b.is_blank() {
            continue;
        }
        let d0 = surface_distances(&a, &b).unwrap();
        let (h0, m0, s0) = (hd95(&d0).unwrap(), msd(&d0).unwrap(), dsc(&a, &b).unwrap());
        for s in [0.5, 2.0, 3.7] {
            let gs = base.scaled(s);
            let (sa, sb) = (
                Volume::from_vec(gs, a.data().to_vec()).unwrap(),
                Volume::from_vec(gs, b.data().to_vec()).unwrap(),
            );
            let d = surface_distances(&sa, &sb).unwrap();
            ensure!(dsc(&sa, &sb).unwrap() == s0, "DSC changed under scaling {s}");
            for (got, base_v) in [(hd95(&d).unwrap(), h0), (msd(&d).unwrap(), m0)] {
                let want = s * base_v;
                let rel = if want == 0.0 {
                    got.abs()
                } else {
                    (got - want).abs() / want
                };
                worst = worst.max(rel);
                ensure!(rel <= 1e-12, "scaling {s}: {got} vs {want}");
            }
        }
    }
    Ok(format!("DSC 2/3, HD95 = MSD = 2.0 mm, scaling max rel err {worst:.1e}"))
}

fn stats_oracles() -> Outcome {
    let mut r = rng(103);
    let coarse = |r: &mut ChaCha8Rng| r.random_range(0..7) as f64 * 0.5;
    let mut worst = 0.0f64;
    for i in 0..120 {
        let n = r.random_range(1..=12);
        let a: Vec<f64> = (0..n).map(|_| coarse(&mut r)).collect();
        let b: Vec<f64> = (0..n).map(|_| coarse(&mut r)).collect();
        let p = wilcoxon_signed_rank(&PairedSample::new(a.clone(), b.clone()).unwrap())
            .unwrap()
            .p_value;
        let want = signed_rank_oracle(&a, &b);
        worst = worst.max((p - want).abs());
        ensure!((p - want).abs() <= 1e-12, "signed-rank instance {i}: {p} vs {want}");

        let (n, m) = (r.random_range(1..=8), r.random_range(1..=8));
        let x: Vec<f64> = (0..n).map(|_| coarse(&mut r)).collect();
        let y: Vec<f64> = (0..m).map(|_| coarse(&mut r)).collect();
        let p = wilcoxon_rank_sum(&x, &y).unwrap().p_value;
        let want = rank_sum_oracle(&x, &y);
        worst = worst.max((p - want).abs());
        ensure!((p - want).abs() <= 1e-12, "rank-sum instance {i}: {p} vs {want}");
    }
    let shift = PairedSample::new(vec![1.0, 2.0, 3.0, 4.0, 5.0], vec![2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
    let p1 = wilcoxon_signed_rank(&shift).unwrap().p_value;
    let p2 = wilcoxon_rank_sum(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap().p_value;
    ensure!(p1 == 0.0625, "uniform shift p {p1}");
    ensure!(p2 == 0.1, "separated triples p {p2}");
    Ok(format!(
        "120+120 instances, max abs err {worst:.1e}; p = {p1}, p = {p2}"
    ))
}

fn harmonization() -> Outcome {
    let schema = OrganSchema::default();
    let tier = |n: &str| schema.tier_of(n).unwrap();
    for hi in ["spleen", "kidney_left", "kidney_right", "heart"] {
        for lo in ["pancreas", "liver"] {
            ensure!(tier(hi) < tier(lo), "{hi} does not outrank {lo}");
        }
    }
    let names: Vec<&str> = schema.names().collect();
    let mut r = rng(104);
    let mut contested = 0usize;
    for round in 0..500 {
        let grid = Grid::new(
            [r.random_range(1..8), r.random_range(1..8), r.random_range(1..6)],
            [1.0; 3],
        )
        .unwrap();
        let k = r.random_range(1..7);
        let chosen: Vec<&str> = names.choose_multiple(&mut r, k).copied().collect();
        let mut masks = OrganMasks::new(grid);
        let density = r.random_range(0.05..0.6);
        for name in &chosen {
            let data = (0..grid.len()).map(|_| r.random_bool(density)).collect();
            masks.insert(*name, Volume::from_vec(grid, data).unwrap()).unwrap();
        }
        let out = resolve_overlaps(&masks, &schema).map_err(|e| e.to_string())?;
        for idx in 0..grid.len() {
            let claims: Vec<&str> = chosen
                .iter()
                .copied()
                .filter(|n| masks.get(n).unwrap().data()[idx])
                .collect();
            let got = out.data()[idx];
            let want = claims
                .iter()
                .min_by_key(|n| (tier(n), schema.position(n).unwrap()))
                .map_or(0, |n| schema.organ(n).unwrap().label_code);
            if claims.len() > 1 {
                contested += 1;
            }
            ensure!(
                got == want,
                "round {round} voxel {idx}: claims {claims:?} got {got} want {want}"
            );
        }
        let again = resolve_overlaps(&OrganMasks::from_labels(&out, &schema).unwrap(), &schema).unwrap();
        ensure!(again == out, "round {round}: not idempotent");
    }
    Ok(format!("500 mask sets, {contested} contested voxels"))
}

fn axial_axis_of(g: &Grid) -> usize {
    (0..3)
        .find(|&a| matches!(g.axis_codes.0[a], AxisCode::S | AxisCode::I))
        .unwrap()
}

fn crop_along(m: &Mask, axis: usize, first: usize, last: usize) -> Mask {
    let g = *m.grid();
    let mut dims = g.dims;
    dims[axis] = last - first + 1;
    let mut cg = Grid::new(dims, g.spacing).unwrap().with_axis_codes(g.axis_codes);
    cg.origin = g.origin;
    let mut out = Vec::with_capacity(cg.len());
    for idx in 0..cg.len() {
        let mut c = cg.coords(idx);
        c[axis] += first;
        out.push(*m.get(c[0], c[1], c[2]));
    }
    Volume::from_vec(cg, out).unwrap()
}

fn masked_equivalence() -> Outcome {
    let schema = OrganSchema::default();
    let code = schema.organ("stomach_bowel").unwrap().label_code;
    let policy = MaskPolicy::default();
    let mut r = rng(105);
    let mut cases = 0;
    while cases < 60 {
        let codes = if cases % 2 == 0 {
            AxisCodes::RAS
        } else {
            AxisCodes([AxisCode::L, AxisCode::S, AxisCode::P])
        };
        let grid = Grid::new(
            [r.random_range(3..12), r.random_range(3..12), r.random_range(3..12)],
            [
                r.random_range(0.5..3.0),
                r.random_range(0.5..3.0),
                r.random_range(0.5..3.0),
            ],
        )
        .unwrap()
        .with_axis_codes(codes);
        let (g, p) = (random_mask(&mut r, grid), random_mask(&mut r, grid));
        if g.is_blank() {
            continue;
        }
        cases += 1;
        let to_labels = |m: &Mask| -> LabelVolume { m.map(|&v| if v { code } else { 0 }) };
        let rows = evaluate_case("x", &to_labels(&g), &to_labels(&p), &schema, &policy).map_err(|e| e.to_string())?;
        let row = rows.iter().find(|r| r.organ == "stomach_bowel").unwrap();

        let axis = axial_axis_of(&grid);
        let slices: Vec<usize> = coords(&g).iter().map(|c| c[axis]).collect();
        let (first, last) = (*slices.iter().min().unwrap(), *slices.iter().max().unwrap());
        let (cg, cp) = (crop_along(&g, axis, first, last), crop_along(&p, axis, first, last));
        if cp.is_blank() {
            ensure!(
                row.status == MetricStatus::EmptyPrediction && row.dsc == Some(0.0),
                "case {cases}: {row:?}"
            );
            continue;
        }
        ensure!(
            row.status == MetricStatus::Masked { first, last },
            "case {cases}: status {:?}",
            row.status
        );
        let d = surface_distances(&cg, &cp).unwrap();
        let want = (
            Some(dsc(&cg, &cp).unwrap()),
            Some(hd95(&d).unwrap()),
            Some(msd(&d).unwrap()),
        );
        ensure!(
            (row.dsc, row.hd95_mm, row.msd_mm) == want,
            "case {cases}: masked {:?} vs cropped {want:?}",
            (row.dsc, row.hd95_mm, row.msd_mm)
        );
        ensure!(
            row.pred_voxels == cp.count() && row.gt_voxels == cg.count(),
            "case {cases}: voxel counts"
        );
    }
    Ok(format!("{cases} random cases identical"))
}

fn case(id: &str, patient: &str, sex: Sex, side: NephrectomySide, dir: &Path) -> CaseRecord {
    CaseRecord {
        case_id: id.into(),
        patient_id: patient.into(),
        dataset: "synthetic".into(),
        age_years: Some(5.0),
        sex,
        tumor_type: TumorType::Renal,
        iv_contrast: Contrast::Yes,
        nephrectomy_side: side,
        image_path: dir.join(format!("{id}.nii.gz")),
        label_paths: BTreeMap::new(),
    }
}

fn manifest_json(cases: &[CaseRecord]) -> String {
    let cases: Vec<serde_json::Value> = cases
        .iter()
        .map(|c| {
            serde_json::json!({
                "case_id": c.case_id,
                "patient_id": c.patient_id,
                "dataset": c.dataset,
                "sex": c.sex.to_string(),
                "nephrectomy_side": c.nephrectomy_side.to_string(),
                "image_path": c.image_path,
            })
        })
        .collect();
    serde_json::json!({"schema_ref": "default", "cases": cases}).to_string()
}

fn split_fidelity() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let ratio = parse_ratio("132:21:36").unwrap();
    let sex = |i: usize| if i.is_multiple_of(3) { Sex::Male } else { Sex::Female };
    let single: Vec<CaseRecord> = (0..189)
        .map(|i| {
            case(
                &format!("c{i:03}"),
                &format!("p{i:03}"),
                sex(i),
                NephrectomySide::None,
                dir.path(),
            )
        })
        .collect();
    let m = Manifest {
        schema_ref: "default".into(),
        cases: single.clone(),
    };
    for seed in 0..20 {
        let plan = make_split(&m, ratio, seed, &[]).map_err(|e| e.to_string())?;
        let counts = Bucket::ALL.map(|b| plan.count(b));
        ensure!(counts == [132, 21, 36], "seed {seed}: counts {counts:?}");
    }

    // inject multi-scan patients: 189 cases over 160 patients
    let mut multi = Vec::new();
    for i in 0..189 {
        let patient = if i < 40 {
            format!("p{:03}", i / 4)
        } else {
            format!("p{i:03}")
        };
        multi.push(case(
            &format!("c{i:03}"),
            &patient,
            sex(i),
            NephrectomySide::None,
            dir.path(),
        ));
    }
    let mm = Manifest {
        schema_ref: "default".into(),
        cases: multi.clone(),
    };
    for seed in 0..20 {
        let plan = make_split(&mm, ratio, seed, &[oar_evalkit::stats::Dimension::Sex]).map_err(|e| e.to_string())?;
        let mut by_patient: BTreeMap<&str, BTreeSet<Bucket>> = BTreeMap::new();
        for c in &mm.cases {
            by_patient
                .entry(&c.patient_id)
                .or_default()
                .insert(plan.assignments[&c.case_id]);
        }
        ensure!(
            by_patient.values().all(|b| b.len() == 1),
            "seed {seed}: a patient straddles buckets"
        );
        let counts = Bucket::ALL.map(|b| plan.count(b));
        ensure!(counts == [132, 21, 36], "seed {seed}: multi-scan counts {counts:?}");
    }

    let manifest_path = dir.path().join("manifest.json");
    std::fs::write(&manifest_path, manifest_json(&multi)).map_err(|e| e.to_string())?;
    let run = |out: &str| -> Result<Vec<u8>, String> {
        let path = dir.path().join(out);
        let status = Command::new(env!("CARGO_BIN_EXE_oar-evalkit"))
            .args(["split", "--ratio", "132:21:36", "--seed", "2024", "--stratify", "sex"])
            .arg("--manifest")
            .arg(&manifest_path)
            .arg("--out")
            .arg(&path)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(String::from_utf8_lossy(&status.stderr).into_owned());
        }
        std::fs::read(&path).map_err(|e| e.to_string())
    };
    let (a, b) = (run("plan_a.json")?, run("plan_b.json")?);
    ensure!(a == b, "plans from two runs differ");
    Ok(format!(
        "132/21/36 for 20 seeds, no straddling, {}-byte plans identical across runs",
        a.len()
    ))
}

fn fpr_reporting() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (pred, reference) = (dir.path().join("pred"), dir.path().join("ref"));
    std::fs::create_dir_all(&pred).unwrap();
    std::fs::create_dir_all(&reference).unwrap();
    let schema = OrganSchema::default();
    let code = |n: &str| schema.organ(n).unwrap().label_code;
    let grid = Grid::new([10, 10, 6], [1.0, 1.0, 2.0]).unwrap();
    let mut cases = Vec::new();
    for i in 0..14 {
        let side = if i % 2 == 0 {
            NephrectomySide::Left
        } else {
            NephrectomySide::Right
        };
        let (removed, kept) = if i % 2 == 0 {
            ("kidney_left", "kidney_right")
        } else {
            ("kidney_right", "kidney_left")
        };
        let id = format!("n{i:02}");
        let mut gt = Volume::filled(grid, 0u16).unwrap();
        for k in 1..5 {
            for j in 2..6 {
                gt.set(2, j, k, code(kept));
                gt.set(3, j, k, code(kept));
            }
        }
        let mut p = gt.clone();
        if [3, 7, 12].contains(&i) {
            p.set(7, 5, 3, code(removed));
        }
        write_labels(&gt, reference.join(format!("{id}.nii.gz"))).unwrap();
        write_labels(&p, pred.join(format!("{id}.nii.gz"))).unwrap();
        cases.push(case(&id, &format!("p{i}"), Sex::Female, side, dir.path()));
    }
    let manifest = Manifest {
        schema_ref: "default".into(),
        cases: cases.clone(),
    };
    let ids: Vec<String> = cases.iter().map(|c| c.case_id.clone()).collect();
    let table = evaluate_dirs(
        &ids,
        Some(&manifest),
        &pred,
        &reference,
        &schema,
        &EvaluateOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let fpr = table.fpr.ok_or("no FPR block")?;
    ensure!(fpr.to_string() == "3/14", "library reports {fpr}");

    let manifest_path = dir.path().join("manifest.json");
    std::fs::write(&manifest_path, manifest_json(&cases)).unwrap();
    let out = dir.path().join("eval");
    let run = Command::new(env!("CARGO_BIN_EXE_oar-evalkit"))
        .arg("evaluate")
        .arg("--pred")
        .arg(&pred)
        .arg("--ref")
        .arg(&reference)
        .arg("--manifest")
        .arg(&manifest_path)
        .arg("--out")
        .arg(&out)
        .output()
        .map_err(|e| e.to_string())?;
    let stdout = String::from_utf8_lossy(&run.stdout);
    ensure!(
        run.status.success(),
        "evaluate failed: {}",
        String::from_utf8_lossy(&run.stderr)
    );
    ensure!(stdout.contains("3/14"), "CLI output lacks 3/14: {stdout}");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    ensure!(
        json["fpr"]["positives"] == 3 && json["fpr"]["total"] == 14,
        "metrics.json fpr {}",
        json["fpr"]
    );
    Ok("library and CLI report 3/14".into())
}

fn ellipsoid(grid: Grid, c: [f64; 3], r: [f64; 3]) -> Mask {
    let [nx, ny, nz] = grid.dims;
    let mut data = vec![false; grid.len()];
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let q = ((i as f64 - c[0]) / r[0]).powi(2)
                    + ((j as f64 - c[1]) / r[1]).powi(2)
                    + ((k as f64 - c[2]) / r[2]).powi(2);
                data[grid.index(i, j, k)] = q <= 1.0;
            }
        }
    }
    Volume::from_vec(grid, data).unwrap()
}

fn time_edt(n: usize, reps: usize) -> f64 {
    let grid = Grid::new([n; 3], [1.0, 1.0, 2.0]).unwrap();
    let mut r = rng(n as u64);
    let seeds: Vec<bool> = (0..grid.len()).map(|_| r.random_bool(0.001)).collect();
    (0..reps)
        .map(|_| {
            let t = Instant::now();
            std::hint::black_box(edt::squared_distance_field(&seeds, &grid));
            t.elapsed().as_secs_f64()
        })
        .fold(f64::INFINITY, f64::min)
}

fn performance() -> Outcome {
    let grid = Grid::new([512, 512, 200], [0.78, 0.78, 2.5]).unwrap();
    let gt = ellipsoid(grid, [255.5, 255.5, 99.5], [240.0, 235.0, 97.0]);
    let pred = ellipsoid(grid, [258.0, 252.0, 100.5], [236.0, 240.0, 95.0]);
    let (elapsed, h, m) = single_threaded(|| {
        let t = Instant::now();
        let d = surface_distances(&gt, &pred).unwrap();
        let (h, m) = (hd95(&d).unwrap(), msd(&d).unwrap());
        (t.elapsed(), h, m)
    });
    drop((gt, pred));
    ensure!(
        elapsed < Duration::from_secs(10),
        "512x512x200 HD95+MSD took {elapsed:?}"
    );

    let (t64, t256) = single_threaded(|| (time_edt(64, 7), time_edt(256, 2)));
    let per64 = t64 / 64f64.powi(3);
    let per256 = t256 / 256f64.powi(3);
    let ratio = per256 / per64;
    ensure!(
        (0.5..=2.0).contains(&ratio),
        "per-voxel EDT cost ratio 256^3/64^3 = {ratio:.2}"
    );
    Ok(format!(
        "{:.2}s single-threaded (HD95 {h:.2} mm, MSD {m:.2} mm); EDT per-voxel cost ratio 256^3/64^3 = {ratio:.2}",
        elapsed.as_secs_f64()
    ))
}

fn nifti_round_trip() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut r = rng(109);
    let mut files = 0;
    let mut worst = 0.0f64;
    for kind in 0..6 {
        for rep in 0..3 {
            let grid = Grid::new(
                [r.random_range(1..10), r.random_range(1..10), r.random_range(1..10)],
                [
                    r.random_range(0.3..5.0),
                    r.random_range(0.3..5.0),
                    r.random_range(0.3..5.0),
                ],
            )
            .unwrap()
            .with_axis_codes(if rep == 1 {
                AxisCodes([AxisCode::L, AxisCode::P, AxisCode::S])
            } else {
                AxisCodes::RAS
            });
            let n = grid.len();
            let voxels = match kind {
                0 => VoxelData::U8((0..n).map(|_| r.random()).collect()),
                1 => VoxelData::I16((0..n).map(|_| r.random()).collect()),
                2 => VoxelData::U16((0..n).map(|_| r.random()).collect()),
                3 => VoxelData::I32((0..n).map(|_| r.random()).collect()),
                4 => VoxelData::F32((0..n).map(|_| r.random::<f32>() * 1e5 - 5e4).collect()),
                _ => VoxelData::F64((0..n).map(|_| r.random::<f64>() * 1e9 - 5e8).collect()),
            };
            let image = ImageVolume::new(grid, voxels).unwrap();
            for ext in ["nii", "nii.gz"] {
                let path = dir.path().join(format!("v{kind}_{rep}.{ext}"));
                write_image(&image, &path).map_err(|e| e.to_string())?;
                let back = read_image(&path).map_err(|e| e.to_string())?;
                files += 1;
                ensure!(back.voxels == image.voxels, "{}: voxels differ", path.display());
                ensure!(
                    back.grid.dims == grid.dims && back.grid.axis_codes == grid.axis_codes,
                    "{}: geometry",
                    path.display()
                );
                for ax in 0..3 {
                    let rel = (back.grid.spacing[ax] - grid.spacing[ax]).abs() / grid.spacing[ax];
                    worst = worst.max(rel);
                    ensure!(rel <= 1e-6, "{}: spacing rel err {rel}", path.display());
                }
            }
        }
    }
    Ok(format!(
        "{files} files over 6 datatypes, spacing max rel err {worst:.1e}"
    ))
}

fn service_fixture(dir: &Path, schema: &OrganSchema) -> Manifest {
    let mut cases = Vec::new();
    for (n, dims) in [("rev1", [12, 10, 6]), ("rev2", [9, 14, 5])] {
        let grid = Grid::new(dims, [0.8, 0.8, 3.0]).unwrap();
        let ct = ImageVolume::new(
            grid,
            VoxelData::I16((0..grid.len()).map(|i| (i % 400) as i16 - 100).collect()),
        )
        .unwrap();
        write_image(&ct, dir.join(format!("{n}_ct.nii.gz"))).unwrap();
        let mut labels = Volume::filled(grid, 0u16).unwrap();
        for k in 0..dims[2] {
            labels.set(2, 2, k, schema.organ("liver").unwrap().label_code);
            labels.set(5, 6, k, schema.organ("spleen").unwrap().label_code);
        }
        write_labels(&labels, dir.join(format!("{n}_labels.nii.gz"))).unwrap();
        let mut c = case(n, &format!("pt_{n}"), Sex::Male, NephrectomySide::None, dir);
        c.image_path = dir.join(format!("{n}_ct.nii.gz"));
        c.label_paths
            .insert("multilabel".into(), dir.join(format!("{n}_labels.nii.gz")));
        cases.push(c);
    }
    Manifest {
        schema_ref: "default".into(),
        cases,
    }
}

async fn start_service(dir: &Path) -> Result<ReviewClient, String> {
    let schema = OrganSchema::default();
    let config = ServiceConfig::new(service_fixture(dir, &schema), schema, dir.join("scores.jsonl"));
    let state = Arc::new(AppState::new(config).map_err(|e| e.to_string())?);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0")
        .await
        .map_err(|e| e.to_string())?;
    let addr = listener.local_addr().unwrap();
    tokio::spawn(serve(state, listener));
    Ok(ReviewClient::new(format!("http://{addr}")))
}

async fn service_session() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let client = start_service(dir.path()).await?;
    let base = client.list_cases().await.map_err(|e| e.to_string())?;
    ensure!(base.len() == 2, "listed {} cases", base.len());

    let expected = [("rev1", [12u32, 10, 6]), ("rev2", [9, 14, 5])];
    for (id, [nx, ny, nz]) in expected {
        for (axis, size) in [
            (ViewAxis::Axial, (nx, ny)),
            (ViewAxis::Coronal, (nx, nz)),
            (ViewAxis::Sagittal, (ny, nz)),
        ] {
            let bytes = client
                .slice_png(id, axis, 0, &SliceOptions::default())
                .await
                .map_err(|e| e.to_string())?;
            let reader = png::Decoder::new(std::io::Cursor::new(bytes))
                .read_info()
                .map_err(|e| e.to_string())?;
            let got = (reader.info().width, reader.info().height);
            ensure!(got == size, "{id} {}: png {got:?}, expected {size:?}", axis.as_str());
        }
    }

    let sub = |rater: &str, organ: &str, score: i64| ScoreSubmission {
        rater_id: rater.into(),
        organ: organ.into(),
        score,
        comment: None,
    };
    let scores_path = dir.path().join("scores.jsonl");
    for (case_id, rater, organ, score) in [
        ("rev1", "r1", "liver", 4),
        ("rev1", "r2", "liver", 5),
        ("rev2", "r1", "liver", 4),
        ("rev2", "r2", "liver", 3),
        ("rev1", "r1", "spleen", 2),
        ("rev2", "r2", "spleen", 2),
    ] {
        client
            .submit_score(case_id, &sub(rater, organ, score))
            .await
            .map_err(|e| e.to_string())?;
    }
    let before = std::fs::read(&scores_path).map_err(|e| e.to_string())?;
    let mut rejected = 0;
    for (case_id, s) in [
        ("rev1", sub("r1", "liver", 0)),
        ("rev1", sub("r1", "liver", 6)),
        ("rev1", sub("r1", "gallbladder", 3)),
        ("rev1", sub("r1", "heart", 3)),
        ("rev1", sub("", "liver", 3)),
    ] {
        let err = client
            .submit_score(case_id, &s)
            .await
            .err()
            .ok_or("invalid score accepted")?;
        ensure!(err.status().map(|c| c.as_u16()) == Some(422), "expected 422, got {err}");
        rejected += 1;
    }
    let missing = client
        .submit_score("nope", &sub("r1", "liver", 3))
        .await
        .err()
        .ok_or("unknown case accepted")?;
    ensure!(
        missing.status().map(|c| c.as_u16()) == Some(404),
        "unknown case: {missing}"
    );
    ensure!(
        std::fs::read(&scores_path).unwrap() == before,
        "rejected scores were persisted"
    );

    let live = client.likert_summary().await.map_err(|e| e.to_string())?;
    let (records, errors) = parse_likert_lines(&std::fs::read_to_string(&scores_path).unwrap());
    ensure!(
        errors.is_empty() && records.len() == 6,
        "scores file replay: {} records, {errors:?}",
        records.len()
    );
    ensure!(
        live.summaries == likert_summarize(&records),
        "live summary differs from file replay"
    );

    let restarted = start_service(dir.path()).await?;
    let replayed = restarted.likert_summary().await.map_err(|e| e.to_string())?;
    ensure!(
        replayed.summaries == live.summaries,
        "restarted service summary differs"
    );
    let liver = live
        .summaries
        .iter()
        .find(|s| s.organ == "liver")
        .ok_or("no liver summary")?;
    let spleen = live
        .summaries
        .iter()
        .find(|s| s.organ == "spleen")
        .ok_or("no spleen summary")?;
    ensure!(
        serde_json::to_value(liver.usability).unwrap() == "acceptable_minor_mods",
        "liver mean {}",
        liver.combined_mean
    );
    ensure!(
        serde_json::to_value(spleen.usability).unwrap() == "not_usable",
        "spleen mean {}",
        spleen.combined_mean
    );
    Ok(format!(
        "2 cases, 6 slice sizes, 6 scores stored, {rejected}+1 rejected, replay identical"
    ))
}

fn main() {
    let runtime = tokio::runtime::Runtime::new().unwrap();
    let criteria: Vec<(u32, &str, Check)> = vec![
        (1, "metric oracle equivalence", Box::new(metric_oracle)),
        (2, "analytic phantoms", Box::new(analytic_phantoms)),
        (3, "statistics oracles", Box::new(stats_oracles)),
        (4, "harmonization properties", Box::new(harmonization)),
        (5, "masked-evaluation equivalence", Box::new(masked_equivalence)),
        (6, "split fidelity", Box::new(split_fidelity)),
        (7, "FPR reporting", Box::new(fpr_reporting)),
        (8, "performance", Box::new(performance)),
        (9, "NIfTI round trip", Box::new(nifti_round_trip)),
        (10, "service protocol", Box::new(|| runtime.block_on(service_session()))),
    ];
    let mut failed = 0;
    for (n, name, check) in &criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
