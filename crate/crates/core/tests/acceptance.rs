//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Criteria 1-3 read the Mulan flags, scene and yeast files from
//! `$MLBALANCE_DATA_DIR` (default `<workspace>/data/mulan`), as
//! `<name>.arff` plus `<name>.xml`.

#![allow(clippy::needless_range_loop)]

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use mlbalance::dataset::{parse_mulan, write_arff, FeatureColumn};
use mlbalance::ensemble::{cross_validate_ensemble, Diversify, EnsembleSettings};
use mlbalance::evaluation::{auc_roc, correlate_measures, cross_validate, CvProtocol, CvSettings, Measure, Metric};
use mlbalance::imbalance::{global_measures, importance, influence, limb, limb_sensitivity, local_stats, InstanceType};
use mlbalance::learners::{train, LearnerKind, LearnerParams};
use mlbalance::neighbors::build_index;
use mlbalance::sampling::{sample, Method, Provenance, SamplerConfig};
use mlbalance::synthetic::{family, generate, SyntheticSpec};
use mlbalance::MultiLabelDataset;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn data_dir() -> PathBuf {
    std::env::var_os("MLBALANCE_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mulan"))
}

fn mulan(name: &str) -> std::result::Result<MultiLabelDataset, String> {
    let dir = data_dir();
    let arff = dir.join(format!("{name}.arff"));
    let xml = dir.join(format!("{name}.xml"));
    let a = std::fs::read_to_string(&arff).map_err(|e| format!("dataset unavailable: {} ({e})", arff.display()))?;
    let x = std::fs::read_to_string(&xml).map_err(|e| format!("dataset unavailable: {} ({e})", xml.display()))?;
    parse_mulan(&a, &x).map_err(|e| format!("{name}: {e}"))
}

fn within(what: &str, got: f64, want: f64, tol: f64, notes: &mut Vec<String>) -> bool {
    let ok = (got - want).abs() <= tol;
    notes.push(format!(
        "{what}={got:.5} (target {want} ±{tol}{})",
        if ok { "" } else { " MISS" }
    ));
    ok
}

fn budget(start: Instant, limit: Duration, notes: &mut Vec<String>) -> bool {
    let t = start.elapsed();
    notes.push(format!("{:.2}s of {:.0}s", t.as_secs_f64(), limit.as_secs_f64()));
    t < limit
}

fn verdict(ok: bool, notes: Vec<String>) -> Check {
    if ok {
        Ok(notes.join(", "))
    } else {
        Err(notes.join(", "))
    }
}

fn c1_flags_measures() -> Check {
    let start = Instant::now();
    let ds = mulan("flags")?;
    let g = global_measures(&ds).map_err(|e| e.to_string())?;
    let mut notes = Vec::new();
    let mut ok = true;
    ok &= within("MeanIR", g.mean_ir, 2.255, 0.002, &mut notes);
    ok &= within("CVIR", g.cvir, 0.7648, 0.002, &mut notes);
    ok &= within("MeanImR", g.mean_imr, 2.753, 0.002, &mut notes);
    ok &= within("CVImR", g.cvimr, 0.7108, 0.002, &mut notes);
    ok &= within("SCUMBLE", g.scumble, 0.0606, 0.002, &mut notes);
    ok &= budget(start, Duration::from_secs(1), &mut notes);
    verdict(ok, notes)
}

fn c2_scene_yeast_measures() -> Check {
    let start = Instant::now();
    let scene = mulan("scene")?;
    let yeast = mulan("yeast")?;
    let gs = global_measures(&scene).map_err(|e| e.to_string())?;
    let gy = global_measures(&yeast).map_err(|e| e.to_string())?;
    let mut notes = Vec::new();
    let mut ok = true;
    ok &= within("scene MeanIR", gs.mean_ir, 1.254, 0.0005, &mut notes);
    ok &= within("scene SCUMBLE", gs.scumble, 0.0003, 0.0005, &mut notes);
    ok &= within("yeast MeanImR", gy.mean_imr, 8.954, 0.01, &mut notes);
    ok &= budget(start, Duration::from_secs(5), &mut notes);
    verdict(ok, notes)
}

fn c3_limb() -> Check {
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, want) in [("flags", 0.5163), ("scene", 0.2633), ("yeast", 0.5821)] {
        let start = Instant::now();
        let ds = match mulan(name) {
            Ok(ds) => ds,
            Err(e) => {
                notes.push(e);
                ok = false;
                continue;
            }
        };
        let idx = build_index(&ds, 5).map_err(|e| e.to_string())?;
        let v = limb(&ds, &idx).map_err(|e| e.to_string())?;
        ok &= within(&format!("{name} LImb"), v, want, 0.05, &mut notes);
        ok &= budget(start, Duration::from_secs(30), &mut notes);
    }
    verdict(ok, notes)
}

fn sample_std(xs: &[f64]) -> f64 {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

fn c4_limb_stability() -> Check {
    let mut sets: Vec<(String, MultiLabelDataset)> = family(3, 400, 7).map_err(|e| e.to_string())?;
    for name in ["flags", "scene", "yeast"] {
        if let Ok(ds) = mulan(name) {
            sets.push((name.to_string(), ds));
        }
    }
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, ds) in &sets {
        let values: Vec<f64> = limb_sensitivity(ds, &[5, 6, 7, 8, 9])
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|(_, v)| v)
            .collect();
        let sd = sample_std(&values);
        ok &= sd < 0.05;
        notes.push(format!("{name} sd={sd:.4}"));
    }
    ok &= sets.len() >= 3;
    verdict(ok, notes)
}

fn c5_correlation_direction() -> Check {
    let start = Instant::now();
    let datasets = family(6, 400, 2024).map_err(|e| e.to_string())?;
    let learners = [LearnerKind::BrLinear, LearnerKind::Mlknn];
    let table = correlate_measures(
        &datasets,
        &learners,
        &LearnerParams::default(),
        5,
        CvProtocol::default(),
        99,
    )
    .map_err(|e| e.to_string())?;
    let mut notes = Vec::new();
    let mut ok = true;
    for learner in learners {
        let rho = table.rho(Measure::Limb, learner, Metric::MacroAucpr);
        notes.push(format!(
            "rho(LImb,AUCPR,{learner})={}",
            rho.map_or("undefined".into(), |r| format!("{r:.3}"))
        ));
        ok &= rho.is_some_and(|r| r < -0.6);
        for measure in Measure::ALL {
            for metric in Metric::ALL {
                match table.rho(measure, learner, metric) {
                    Some(r) if r < 0.0 => {}
                    other => {
                        ok = false;
                        notes.push(format!("rho({measure},{metric},{learner})={other:?} not negative"));
                    }
                }
            }
        }
    }
    ok &= budget(start, Duration::from_secs(300), &mut notes);
    verdict(ok, notes)
}

// ---- brute-force oracles ----

struct Toy {
    ds: MultiLabelDataset,
    numeric: Vec<bool>,
}

fn random_columns(rng: &mut ChaCha8Rng, d: usize) -> (Vec<FeatureColumn>, Vec<usize>) {
    let mut cols = Vec::new();
    let mut arity = Vec::new();
    for f in 0..d {
        if rng.gen_bool(0.25) {
            let a = rng.gen_range(2..4);
            cols.push(FeatureColumn::nominal(
                format!("n{f}"),
                (0..a).map(|v| format!("v{v}")).collect(),
            ));
            arity.push(a);
        } else {
            cols.push(FeatureColumn::numeric(format!("x{f}")));
            arity.push(0);
        }
    }
    (cols, arity)
}

fn random_features(rng: &mut ChaCha8Rng, n: usize, arity: &[usize], grid: bool) -> Array2<f64> {
    Array2::from_shape_fn((n, arity.len()), |(_, f)| match arity[f] {
        0 if grid => rng.gen_range(0..5) as f64,
        0 => rng.gen_range(-2.0..3.0),
        a => rng.gen_range(0..a) as f64,
    })
}

fn random_toy(rng: &mut ChaCha8Rng, n_range: std::ops::RangeInclusive<usize>, q_max: usize) -> Toy {
    let n = rng.gen_range(n_range);
    let d = rng.gen_range(1..=4);
    let q = rng.gen_range(1..=q_max);
    let (cols, arity) = random_columns(rng, d);
    let grid = rng.gen_bool(0.5);
    let features = random_features(rng, n, &arity, grid);
    let rates: Vec<f64> = (0..q).map(|_| rng.gen_range(0.05..0.7)).collect();
    let labels = Array2::from_shape_fn((n, q), |(_, j)| rng.gen_bool(rates[j]) as u8);
    let ds = MultiLabelDataset::new("toy", cols, features, (0..q).map(|j| format!("l{j}")).collect(), labels).unwrap();
    Toy {
        ds,
        numeric: arity.iter().map(|&a| a == 0).collect(),
    }
}

struct Scale {
    min: Vec<f64>,
    range: Vec<f64>,
    numeric: Vec<bool>,
}

impl Scale {
    fn fit(x: &Array2<f64>, numeric: &[bool]) -> Self {
        let d = x.ncols();
        let mut min = vec![0.0; d];
        let mut range = vec![0.0; d];
        for f in 0..d {
            if numeric[f] {
                let lo = x.column(f).iter().copied().fold(f64::INFINITY, f64::min);
                let hi = x.column(f).iter().copied().fold(f64::NEG_INFINITY, f64::max);
                min[f] = lo;
                range[f] = hi - lo;
            }
        }
        Scale {
            min,
            range,
            numeric: numeric.to_vec(),
        }
    }

    fn cell(&self, f: usize, v: f64) -> f64 {
        if !self.numeric[f] {
            v
        } else if self.range[f] > 0.0 {
            (v - self.min[f]) / self.range[f]
        } else {
            v - self.min[f]
        }
    }

    fn dist2(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut s = 0.0;
        for f in 0..a.len() {
            let (x, y) = (self.cell(f, a[f]), self.cell(f, b[f]));
            if self.numeric[f] {
                s += (x - y) * (x - y);
            } else if x != y {
                s += 1.0;
            }
        }
        s
    }
}

fn oracle_neighbors(scale: &Scale, train: &Array2<f64>, query: &[f64], k: usize, skip: Option<usize>) -> Vec<usize> {
    let mut all: Vec<(f64, usize)> = (0..train.nrows())
        .filter(|&m| Some(m) != skip)
        .map(|m| (scale.dist2(query, train.row(m).as_slice().unwrap()), m))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.truncate(k);
    all.into_iter().map(|(_, m)| m).collect()
}

fn type_of(opp: usize, k: usize) -> InstanceType {
    let c = opp as f64 / k as f64;
    if c < 0.3 {
        InstanceType::Safe
    } else if c < 0.7 {
        InstanceType::Borderline
    } else if c < 1.0 {
        InstanceType::Rare
    } else {
        InstanceType::Outlier
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

fn oracle_seed(seed: u64) -> std::result::Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let toy = random_toy(&mut rng, 10..=100, 8);
    let ds = &toy.ds;
    let (n, q) = (ds.n(), ds.q());
    let k = rng.gen_range(1..=9.min(n - 1));
    let x = ds.features();
    let y = ds.labels();
    let scale = Scale::fit(x, &toy.numeric);
    let idx = build_index(ds, k).map_err(|e| e.to_string())?;

    let knn: Vec<Vec<usize>> = (0..n)
        .map(|i| oracle_neighbors(&scale, x, x.row(i).as_slice().unwrap(), k, Some(i)))
        .collect();
    for i in 0..n {
        if idx.knn(i) != knn[i].as_slice() {
            return Err(format!("seed {seed}: kNN of {i} differs"));
        }
    }
    let mut rknn = vec![Vec::new(); n];
    for i in 0..n {
        for &m in &knn[i] {
            rknn[m].push(i);
        }
    }
    for i in 0..n {
        let mut got = idx.rknn(i).to_vec();
        got.sort_unstable();
        if got != rknn[i] {
            return Err(format!("seed {seed}: RkNN of {i} differs"));
        }
    }

    let stats = local_stats(ds, &idx).map_err(|e| e.to_string())?;
    // minority class: 1 unless positives strictly outnumber negatives
    let minority: Vec<u8> = (0..q)
        .map(|j| {
            let pos = (0..n).filter(|&i| y[[i, j]] == 1).count();
            if pos > n - pos {
                0
            } else {
                1
            }
        })
        .collect();
    let mut opp = vec![vec![0usize; q]; n];
    for i in 0..n {
        for j in 0..q {
            opp[i][j] = knn[i].iter().filter(|&&m| y[[m, j]] != y[[i, j]]).count();
            if stats.opposite[[i, j]] as usize != opp[i][j] || !close(stats.c[[i, j]], opp[i][j] as f64 / k as f64) {
                return Err(format!("seed {seed}: C[{i},{j}] differs"));
            }
        }
    }
    let mut s = vec![vec![-1.0f64; q]; n];
    for j in 0..q {
        let inf: Vec<usize> = (0..n).filter(|&i| y[[i, j]] == minority[j] && opp[i][j] < k).collect();
        let total: usize = inf.iter().map(|&i| opp[i][j]).sum();
        for &i in &inf {
            s[i][j] = if total == 0 {
                0.0
            } else {
                opp[i][j] as f64 / total as f64
            };
        }
    }
    let w: Vec<f64> = s.iter().map(|row| row.iter().filter(|&&v| v != -1.0).sum()).collect();
    for i in 0..n {
        for j in 0..q {
            let (a, b) = (stats.s[[i, j]], s[i][j]);
            if (a == -1.0) != (b == -1.0) || !close(a, b) {
                return Err(format!("seed {seed}: S[{i},{j}] = {a}, oracle {b}"));
            }
        }
        if !close(stats.w[i], w[i]) {
            return Err(format!("seed {seed}: w[{i}] differs"));
        }
    }

    // types, promoted in place until stable
    let mut t = vec![vec![InstanceType::Majority; q]; n];
    for i in 0..n {
        for j in 0..q {
            if y[[i, j]] == minority[j] {
                t[i][j] = type_of(opp[i][j], k);
            }
        }
    }
    loop {
        let mut changed = false;
        for i in 0..n {
            for j in 0..q {
                if t[i][j] == InstanceType::Rare
                    && knn[i].iter().any(|&m| {
                        y[[m, j]] == minority[j] && matches!(t[m][j], InstanceType::Safe | InstanceType::Borderline)
                    })
                {
                    t[i][j] = InstanceType::Borderline;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    for i in 0..n {
        for j in 0..q {
            if stats.types[[i, j]] != t[i][j] {
                return Err(format!(
                    "seed {seed}: T[{i},{j}] = {:?}, oracle {:?}",
                    stats.types[[i, j]],
                    t[i][j]
                ));
            }
        }
    }

    let u: Vec<f64> = (0..n)
        .map(|i| {
            if rknn[i].is_empty() {
                return 0.0;
            }
            let mut total = 0.0;
            for j in 0..q {
                let mut acc = 0.0;
                for &m in &rknn[i] {
                    if s[m][j] != -1.0 {
                        acc += if y[[i, j]] != y[[m, j]] { -s[m][j] } else { s[m][j] };
                    }
                }
                total += acc / rknn[i].len() as f64;
            }
            total
        })
        .collect();
    let got_u = influence(ds, &idx, &stats);
    let lo = (0..n).map(|i| w[i] + u[i]).fold(f64::INFINITY, f64::min);
    let got_v = importance(&stats.w, &got_u);
    for i in 0..n {
        if !close(got_u[i], u[i]) || !close(got_v[i], w[i] + u[i] - lo) {
            return Err(format!("seed {seed}: u/v of {i} differ"));
        }
    }

    // MLkNN against count tables built from scratch
    let smoothing = [1.0, 0.5, 2.0][rng.gen_range(0..3)];
    let params = LearnerParams {
        k,
        smoothing,
        ..LearnerParams::default()
    };
    let model = train(ds, LearnerKind::Mlknn, &params).map_err(|e| e.to_string())?;
    let arity: Vec<usize> = ds
        .columns()
        .iter()
        .map(|c| match &c.kind {
            mlbalance::dataset::ColumnKind::Numeric => 0,
            mlbalance::dataset::ColumnKind::Nominal(v) => v.len(),
        })
        .collect();
    let grid = rng.gen_bool(0.5);
    let queries = random_features(&mut rng, 10, &arity, grid);
    let mut pos_tab = vec![vec![0usize; k + 1]; q];
    let mut neg_tab = vec![vec![0usize; k + 1]; q];
    for i in 0..n {
        for j in 0..q {
            let c = knn[i].iter().filter(|&&m| y[[m, j]] == 1).count();
            if y[[i, j]] == 1 {
                pos_tab[j][c] += 1;
            } else {
                neg_tab[j][c] += 1;
            }
        }
    }
    for r in 0..queries.nrows() {
        let qrow = queries.row(r);
        let nb = oracle_neighbors(&scale, x, qrow.as_slice().unwrap(), k, None);
        let got = model.score(qrow).map_err(|e| e.to_string())?;
        for j in 0..q {
            let pos = (0..n).filter(|&i| y[[i, j]] == 1).count() as f64;
            let prior = (smoothing + pos) / (2.0 * smoothing + n as f64);
            let c = nb.iter().filter(|&&m| y[[m, j]] == 1).count();
            let lp = (smoothing + pos_tab[j][c] as f64)
                / (smoothing * (k + 1) as f64 + pos_tab[j].iter().sum::<usize>() as f64);
            let ln = (smoothing + neg_tab[j][c] as f64)
                / (smoothing * (k + 1) as f64 + neg_tab[j].iter().sum::<usize>() as f64);
            let want = prior * lp / (prior * lp + (1.0 - prior) * ln);
            if !close(got[j], want) {
                return Err(format!(
                    "seed {seed}: MLkNN score row {r} label {j}: {} vs {want}",
                    got[j]
                ));
            }
        }
    }

    // AUC-ROC over all positive/negative pairs
    let m = rng.gen_range(2..=100);
    let truth: Vec<u8> = (0..m).map(|_| rng.gen_bool(0.4) as u8).collect();
    let scores: Vec<f64> = (0..m).map(|_| rng.gen_range(0..8) as f64 / 7.0).collect();
    let (mut num, mut pairs) = (0.0, 0usize);
    for a in 0..m {
        for b in 0..m {
            if truth[a] == 1 && truth[b] == 0 {
                pairs += 1;
                num += if scores[a] > scores[b] {
                    1.0
                } else if scores[a] == scores[b] {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    let want = (pairs > 0).then(|| num / pairs as f64);
    match (auc_roc(&truth, &scores), want) {
        (None, None) => {}
        (Some(a), Some(b)) if close(a, b) => {}
        (a, b) => return Err(format!("seed {seed}: AUC {a:?} vs oracle {b:?}")),
    }
    Ok(())
}

fn c6_oracles() -> Check {
    let failures: Vec<String> = (0..100).filter_map(|seed| oracle_seed(seed).err()).collect();
    if failures.is_empty() {
        Ok("100 seeds: kNN, RkNN, C, S, w, T, u, v, MLkNN, AUC-ROC match".into())
    } else {
        Err(failures.join("; "))
    }
}

fn c7_sampler_contracts() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut counts = [0usize; 4]; // mlsol configs, mlul configs, RR conflicts, OT conflicts
    for case in 0..100 {
        let toy = random_toy(&mut rng, 20..=120, 6);
        let ds = &toy.ds;
        let n = ds.n();
        let k = rng.gen_range(1..=7);
        let oversample = case % 2 == 0;
        let pct: usize = if oversample {
            rng.gen_range(5..=150)
        } else {
            rng.gen_range(1..=60)
        };
        let method = if oversample { Method::Mlsol } else { Method::Mlul };
        let cfg = SamplerConfig::new(method, pct as f64 / 100.0, k, rng.gen());
        let out = sample(ds, &cfg).map_err(|e| format!("case {case}: {e}"))?;
        let err = |m: String| format!("case {case} ({method}, n={n}, p={}%, k={k}): {m}", pct);
        if oversample {
            counts[0] += 1;
            let want = n + n * pct / 100;
            if out.dataset.n() != want {
                return Err(err(format!("size {} != {want}", out.dataset.n())));
            }
            let stats = local_stats(ds, &build_index(ds, k).unwrap()).unwrap();
            for (row, p) in out.provenance.iter().enumerate().skip(n) {
                let Provenance::Synthetic { seed: s, reference: r } = *p else {
                    return Err(err("non-synthetic tail row".into()));
                };
                for j in 0..ds.q() {
                    let (ys, yr, yc) = (ds.labels()[[s, j]], ds.labels()[[r, j]], out.dataset.labels()[[row, j]]);
                    if yc != ys && yc != yr {
                        return Err(err(format!("label {j} of row {row} from neither parent")));
                    }
                    if ys != yr {
                        match stats.types[[s, j]] {
                            InstanceType::Rare => {
                                counts[2] += 1;
                                if yc != ys {
                                    return Err(err(format!("RR seed {s} lost its minority label {j}")));
                                }
                            }
                            InstanceType::Outlier => {
                                counts[3] += 1;
                                if yc != yr {
                                    return Err(err(format!("OT seed {s} kept label {j}")));
                                }
                            }
                            _ => {}
                        }
                    }
                }
                for f in 0..ds.d() {
                    let (a, b) = (ds.features()[[s, f]], ds.features()[[r, f]]);
                    let v = out.dataset.features()[[row, f]];
                    if v < a.min(b) || v > a.max(b) {
                        return Err(err(format!("feature {f} of row {row} outside its parents")));
                    }
                }
            }
        } else {
            counts[1] += 1;
            let want = n * (100 - pct) / 100;
            if out.dataset.n() != want {
                return Err(err(format!("size {} != {want}", out.dataset.n())));
            }
            let ids: Vec<usize> = out
                .provenance
                .iter()
                .map(|p| match p {
                    Provenance::Retained { id } => *id,
                    _ => usize::MAX,
                })
                .collect();
            if ids.iter().any(|&i| i >= n) || ids.windows(2).any(|w| w[0] >= w[1]) {
                return Err(err("retained ids not a sorted subset".into()));
            }
            for (row, &id) in ids.iter().enumerate() {
                if out.dataset.row(row) != ds.row(id) || out.dataset.label_row(row) != ds.label_row(id) {
                    return Err(err(format!("row {row} is not input row {id}")));
                }
            }
        }
    }
    if counts[2] == 0 || counts[3] == 0 {
        return Err(format!("RR/OT conflicts never exercised: {counts:?}"));
    }
    Ok(format!(
        "{} MLSOL + {} MLUL configs; {} RR and {} OT conflicting cells resolved as required",
        counts[0], counts[1], counts[2], counts[3]
    ))
}

fn c8_ensemble_behavior() -> Check {
    let protocol = CvProtocol { folds: 2, repeats: 1 };
    let sets = [
        generate(&SyntheticSpec::family_member(3, 6, 400, 101)).map_err(|e| e.to_string())?,
        generate(&SyntheticSpec::family_member(5, 6, 400, 202)).map_err(|e| e.to_string())?,
    ];
    let params = LearnerParams::default();
    let mut notes = Vec::new();
    let mut ok = true;
    for (d, ds) in sets.iter().enumerate() {
        let (mut single, mut emlsol, mut disa_sol, mut disa_ros) = (0.0, 0.0, 0.0, 0.0);
        for seed in 0..10u64 {
            let sol = SamplerConfig::new(Method::Mlsol, Method::Mlsol.default_ratio(), 5, seed);
            let ros = SamplerConfig::new(Method::Mlros, Method::Mlros.default_ratio(), 5, seed);
            let cv = CvSettings {
                learner: LearnerKind::BrLinear,
                params,
                sampler: Some(sol),
                protocol,
                seed,
            };
            single += cross_validate(ds, &cv).map_err(|e| e.to_string())?.mean.macro_aucpr;
            let ens = |sampler| EnsembleSettings {
                sampler,
                learner: LearnerKind::BrLinear,
                params,
                members: 5,
                diversify: Diversify::SeedOnly,
            };
            let e = cross_validate_ensemble(ds, &ens(sol), protocol, seed).map_err(|e| e.to_string())?;
            emlsol += e.mean.macro_aucpr;
            disa_sol += e.mean_disagreement;
            disa_ros += cross_validate_ensemble(ds, &ens(ros), protocol, seed)
                .map_err(|e| e.to_string())?
                .mean_disagreement;
        }
        let (single, emlsol, disa_sol, disa_ros) = (single / 10.0, emlsol / 10.0, disa_sol / 10.0, disa_ros / 10.0);
        ok &= emlsol >= single && disa_sol > disa_ros;
        notes.push(format!(
            "toy{d}: AUCPR EMLSOL {emlsol:.4} vs MLSOL {single:.4}; disa EMLSOL {disa_sol:.4} vs EMLROS {disa_ros:.4}"
        ));
    }
    verdict(ok, notes)
}

fn digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn c9_determinism() -> Check {
    let ds = generate(&SyntheticSpec {
        n: 200,
        seed: 5,
        ..SyntheticSpec::default()
    })
    .map_err(|e| e.to_string())?;
    let mut checked = 0;
    let same = |what: &str, a: String, b: String| {
        if a == b {
            Ok(())
        } else {
            Err(format!("{what}: {a} != {b}"))
        }
    };
    for method in Method::ALL {
        let cfg = SamplerConfig::new(method, method.default_ratio(), 5, 31);
        let run = || -> std::result::Result<String, String> {
            let out = sample(&ds, &cfg).map_err(|e| e.to_string())?;
            Ok(digest(serde_json::to_string(&out).unwrap().as_bytes()))
        };
        same(method.as_str(), run()?, run()?)?;
        checked += 1;
    }
    let pool = |threads: usize| rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let cv = CvSettings {
        learner: LearnerKind::Mlknn,
        params: LearnerParams::default(),
        sampler: Some(SamplerConfig::new(Method::Mlul, 0.1, 5, 3)),
        protocol: CvProtocol { folds: 2, repeats: 2 },
        seed: 3,
    };
    let run_cv = |threads| {
        pool(threads).install(|| {
            digest(
                serde_json::to_string(&cross_validate(&ds, &cv).unwrap())
                    .unwrap()
                    .as_bytes(),
            )
        })
    };
    same("cross-validation", run_cv(1), run_cv(4))?;
    same("cross-validation rerun", run_cv(4), run_cv(4))?;
    checked += 2;
    let ens = EnsembleSettings {
        sampler: SamplerConfig::new(Method::Mlsol, 0.3, 5, 8),
        learner: LearnerKind::BrLinear,
        params: LearnerParams::default(),
        members: 3,
        diversify: Diversify::VaryK,
    };
    let run_ens = |threads| {
        pool(threads).install(|| {
            let r = cross_validate_ensemble(&ds, &ens, CvProtocol { folds: 2, repeats: 1 }, 8).unwrap();
            digest(serde_json::to_string(&r).unwrap().as_bytes())
        })
    };
    same("ensemble", run_ens(1), run_ens(3))?;
    checked += 1;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = dir.path().join("in.arff");
    std::fs::write(&input, write_arff(&ds)).unwrap();
    std::fs::write(dir.path().join("in.xml"), mlbalance::dataset::write_mulan_xml(&ds)).unwrap();
    let cli = |out: &str, jobs: &str| -> std::result::Result<String, String> {
        let out = dir.path().join(out);
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_mlbalance"))
            .args(["--jobs", jobs, "sample", "--method", "mlsol", "--seed", "12", "--in"])
            .arg(&input)
            .arg("--out")
            .arg(&out)
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("cli sample exited with {status}"));
        }
        let mut all = std::fs::read(&out).unwrap();
        all.extend(std::fs::read(out.with_extension("xml")).unwrap());
        all.extend(std::fs::read(format!("{}.provenance.json", out.display())).unwrap());
        Ok(digest(&all))
    };
    same("cli sample", cli("a.arff", "1")?, cli("b.arff", "4")?)?;
    checked += 1;
    Ok(format!(
        "{checked} pipelines hash-identical across reruns and thread counts"
    ))
}

fn main() -> ExitCode {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [Criterion; 9] = [
        ("1 flags global measures", c1_flags_measures),
        ("2 scene/yeast global measures", c2_scene_yeast_measures),
        ("3 LImb reproduction", c3_limb),
        ("4 LImb stability over k", c4_limb_stability),
        ("5 correlation direction", c5_correlation_direction),
        ("6 oracle equivalence", c6_oracles),
        ("7 sampler contracts", c7_sampler_contracts),
        ("8 ensemble behavior", c8_ensemble_behavior),
        ("9 determinism", c9_determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS criterion {name} [{secs:.1}s]: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name} [{secs:.1}s]: {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
