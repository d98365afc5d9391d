//! End-to-end acceptance checks. Prints one `PASS`/`FAIL` line per
//! criterion and exits nonzero if any fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use cfscil_core::harness::gradcheck::{run_gradcheck, TOLERANCE};
use cfscil_core::harness::synth::{generate_synthetic, SynthSpec};
use cfscil_core::hdvec::{self, nudge_activation, softabs_sharpen};
use cfscil_core::memory::{add_classes, compress};
use cfscil_core::nudge::{loss_lo, run_nudging};
use cfscil_core::session::run_experiment;
use cfscil_core::{
    offdiag_abs_cosine, ClassId, Dataset64, EmbedLayer64, ExplicitMemory64, KeySeed, Mode,
    ModeConfig64, NudgeConfig64, Sample, SessionSchedule, SharpenConfig64,
};

const GRADCHECK_POINTS: usize = 20;
const GRADCHECK_BUDGET: Duration = Duration::from_secs(10);

const LINEARITY_INSTANCES: u64 = 100;
const LINEARITY_SHOTS: usize = 5;
const LINEARITY_TOL: f64 = 1e-9;

// 2 / (1 + e^5), σ(β/2) + σ(-3β/2) and e^4 + e^-4 - 2, evaluated directly
const SOFTABS_AT_0: f64 = 0.013_385_7;
const SOFTABS_AT_1: f64 = 0.993_307;
const CONST_TOL: f64 = 1e-6;
const NUDGE_AT_1: f64 = 52.6164;
const NUDGE_TOL: f64 = 1e-3;

const NUDGE_D: usize = 64;
const NUDGE_C: usize = 100;
const NUDGE_SEEDS: u64 = 10;
const NUDGE_BUDGET: Duration = Duration::from_secs(30);

const E2E_D: usize = 512;
const E2E_DF: usize = 640;
const E2E_SHOTS_TRAIN: usize = 20;
const E2E_SHOTS_EVAL: usize = 20;
const EASY_MIN_ACC: f64 = 0.95;
const ORACLE_GAP: f64 = 0.02;
const PAIRED_SEEDS: u64 = 10;
const PAIRED_MIN_WINS: usize = 8;
const RUN_BUDGET: Duration = Duration::from_secs(60);

const MAX_COMPRESSION_DROP: f64 = 0.05;
const RETRIEVAL_TRIALS: u32 = 100;

struct Outcome {
    passed: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize, std: f64) -> Vec<f64> {
    let dist = Normal::new(0.0, std).unwrap();
    (0..n).map(|_| dist.sample(rng)).collect()
}

fn synth(scale: f64, seed: u64) -> (Dataset64, Dataset64) {
    generate_synthetic(&SynthSpec {
        class_count: 100,
        d_f: E2E_DF,
        cluster_center_scale: scale,
        cluster_sigma: 1.0,
        shots_train: E2E_SHOTS_TRAIN,
        shots_eval: E2E_SHOTS_EVAL,
        seed,
    })
    .unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let report = run_gradcheck(0, GRADCHECK_POINTS).unwrap();
    let elapsed = start.elapsed();
    outcome(
        report.max_rel_err() < TOLERANCE && elapsed < GRADCHECK_BUDGET,
        format!(
            "gradcheck {} points: alignment {:.2e}, nudging {:.2e} (< {:.0e}); {:.2} s",
            report.points,
            report.alignment_max_rel_err,
            report.nudge_max_rel_err,
            TOLERANCE,
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..LINEARITY_INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (d, d_f) = (32, 24);
        let layer = EmbedLayer64::random(d, d_f, seed);
        let support: Vec<Sample<f64>> = (0..LINEARITY_SHOTS)
            .map(|_| Sample::new(0, gaussian(&mut rng, d_f, 1.0)))
            .collect();
        let mut em = ExplicitMemory64::new(d);
        add_classes(&mut em, None, &layer, &support, LINEARITY_SHOTS).unwrap();
        let mut mean_of_protos = vec![0.0; d];
        for s in &support {
            for (m, v) in mean_of_protos.iter_mut().zip(layer.forward(&s.features).unwrap()) {
                *m += v / LINEARITY_SHOTS as f64;
            }
        }
        let got = em.prototypes().column(0).to_vec();
        let num: f64 = got.iter().zip(&mean_of_protos).map(|(a, b)| (a - b).powi(2)).sum();
        let den: f64 = mean_of_protos.iter().map(|b| b * b).sum();
        worst = worst.max((num / den).sqrt());
    }
    outcome(
        worst < LINEARITY_TOL,
        format!("{LINEARITY_INSTANCES} instances, worst relative error {worst:.2e} (< {LINEARITY_TOL:.0e})"),
    )
}

fn criterion_3() -> Outcome {
    let cfg = SharpenConfig64::default();
    let e0 = softabs_sharpen(0.0, &cfg);
    let e1 = softabs_sharpen(1.0, &cfg);
    let s1 = nudge_activation(1.0, &cfg);
    outcome(
        (e0 - SOFTABS_AT_0).abs() < CONST_TOL
            && (e1 - SOFTABS_AT_1).abs() < CONST_TOL
            && (s1 - NUDGE_AT_1).abs() < NUDGE_TOL,
        format!("softabs(0) = {e0:.8}, softabs(1) = {e1:.8}, nudge(1) = {s1:.6}"),
    )
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let cfg = NudgeConfig64 {
        iterations: 100,
        rate: 0.01,
        sharpen: SharpenConfig64::default(),
        variant: Default::default(),
    };
    let mut ok = 0;
    let mut worst = String::new();
    for seed in 0..NUDGE_SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let k0 = Array2::from_shape_vec((NUDGE_D, NUDGE_C), gaussian(&mut rng, NUDGE_D * NUDGE_C, 1.0))
            .unwrap();
        let (k, _) = run_nudging(&k0.view(), &cfg).unwrap();
        let lo0 = loss_lo(&k0.view(), &cfg.sharpen).unwrap();
        let lo1 = loss_lo(&k.view(), &cfg.sharpen).unwrap();
        let (m0, _) = offdiag_abs_cosine(&k0.view()).unwrap();
        let (m1, _) = offdiag_abs_cosine(&k.view()).unwrap();
        if lo1 < lo0 && m1 < m0 {
            ok += 1;
        }
        if seed == 0 {
            worst = format!("seed 0: L_O {lo0:.1} -> {lo1:.1}, mean |cos| {m0:.4} -> {m1:.4}");
        }
    }
    let elapsed = start.elapsed();
    outcome(
        ok == NUDGE_SEEDS && elapsed < NUDGE_BUDGET,
        format!("{ok}/{NUDGE_SEEDS} seeds improved; {worst}; {:.2} s", elapsed.as_secs_f64()),
    )
}

fn schedule_counts(schedule: &SessionSchedule, classes: usize) -> Vec<usize> {
    let (train, eval) = generate_synthetic::<f64>(&SynthSpec {
        class_count: classes,
        d_f: 16,
        cluster_center_scale: 5.0,
        cluster_sigma: 1.0,
        shots_train: 5,
        shots_eval: 1,
        seed: 11,
    })
    .unwrap();
    let cfg = ModeConfig64::for_mode(Mode::Averaged);
    let out = run_experiment(&train, &eval, schedule, &cfg, 64, 11).unwrap();
    out.results.iter().map(|r| r.classes).collect()
}

fn criterion_5() -> Outcome {
    let mini = schedule_counts(&SessionSchedule::mini_imagenet(), 100);
    let omni = schedule_counts(&SessionSchedule::omniglot(), 1623);
    let mini_want: Vec<usize> = (0..9).map(|s| 60 + 5 * s).collect();
    let omni_want: Vec<usize> = (0..10).map(|s| 1200 + 47 * s).collect();
    outcome(
        mini == mini_want && omni == omni_want,
        format!("miniImageNet-shaped rows {:?}; Omniglot-shaped rows {:?}", mini, omni),
    )
}

/// Nearest class mean in feature space, using exactly the samples the
/// learner saw: every training sample of base classes and the first
/// `shots` of each novel class.
fn ncm_oracle(train: &Dataset64, eval: &Dataset64, schedule: &SessionSchedule) -> f64 {
    let groups = schedule.assign(&train.classes()).unwrap();
    let by_class = train.by_class();
    let mut means: BTreeMap<ClassId, Vec<f64>> = BTreeMap::new();
    for (s, group) in groups.iter().enumerate() {
        for &c in group {
            let all = &by_class[&c];
            let take = if s == 0 { all.len() } else { schedule.novel_sessions[s - 1].shots };
            let mut m = vec![0.0; train.dim()];
            for sample in &all[..take] {
                for (a, x) in m.iter_mut().zip(&sample.features) {
                    *a += x / take as f64;
                }
            }
            means.insert(c, m);
        }
    }
    let correct = eval
        .samples()
        .iter()
        .filter(|q| {
            let best = means
                .iter()
                .map(|(&c, m)| {
                    let d: f64 = m.iter().zip(&q.features).map(|(a, b)| (a - b).powi(2)).sum();
                    (c, d)
                })
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            best.0 == q.label
        })
        .count();
    correct as f64 / eval.len() as f64
}

fn final_accuracy(
    train: &Dataset64,
    eval: &Dataset64,
    cfg: &ModeConfig64,
    seed: u64,
) -> (f64, Duration) {
    let start = Instant::now();
    let out = run_experiment(train, eval, &SessionSchedule::mini_imagenet(), cfg, E2E_D, seed).unwrap();
    (out.results.last().unwrap().accuracy, start.elapsed())
}

fn criterion_6() -> Outcome {
    let schedule = SessionSchedule::mini_imagenet();
    let mode1 = ModeConfig64::for_mode(Mode::Averaged);
    let mode3 = ModeConfig64::for_mode(Mode::Nudged);

    let (train, eval) = synth(10.0, 600);
    let (easy, easy_time) = final_accuracy(&train, &eval, &mode1, 0);
    let oracle = ncm_oracle(&train, &eval, &schedule);
    let easy_ok = easy >= EASY_MIN_ACC && (easy - oracle).abs() <= ORACLE_GAP;

    let mut wins = 0;
    let mut pairs = Vec::new();
    let mut slowest = easy_time;
    for seed in 0..PAIRED_SEEDS {
        let (train, eval) = synth(2.0, 700 + seed);
        let (a1, t1) = final_accuracy(&train, &eval, &mode1, seed);
        let (a3, t3) = final_accuracy(&train, &eval, &mode3, seed);
        slowest = slowest.max(t1).max(t3);
        if a3 >= a1 {
            wins += 1;
        }
        pairs.push(format!("{a1:.3}/{a3:.3}"));
    }
    outcome(
        easy_ok && wins >= PAIRED_MIN_WINS && slowest < RUN_BUDGET,
        format!(
            "easy mode 1 final {easy:.4} vs oracle {oracle:.4}; hard mode 3 >= mode 1 in {wins}/{PAIRED_SEEDS} \
             (mode1/mode3: {}); slowest run {:.2} s",
            pairs.join(" "),
            slowest.as_secs_f64()
        ),
    )
}

fn mean_retrieval_cosine(d: usize) -> f64 {
    let mut total = 0.0;
    for trial in 0..RETRIEVAL_TRIALS {
        let mut rng = ChaCha8Rng::seed_from_u64(trial as u64);
        let protos = Array2::from_shape_vec((d, 2), gaussian(&mut rng, 2 * d, 1.0)).unwrap();
        let em = ExplicitMemory64::from_parts(protos.clone(), vec![0, 1]).unwrap();
        let cm = compress(&em, KeySeed(trial * 2)).unwrap();
        let est = cm.decompress_class(0).unwrap();
        total += hdvec::cosine(&est, &protos.column(0).to_vec()).unwrap();
    }
    total / RETRIEVAL_TRIALS as f64
}

fn criterion_7() -> Outcome {
    let (train, eval) = synth(10.0, 600);
    let plain = ModeConfig64::for_mode(Mode::Averaged);
    let mut packed = plain;
    packed.compress_em = true;
    let (a, _) = final_accuracy(&train, &eval, &plain, 0);
    let (b, _) = final_accuracy(&train, &eval, &packed, 0);
    let drop = a - b;
    let r64 = mean_retrieval_cosine(64);
    let r512 = mean_retrieval_cosine(512);
    outcome(
        drop <= MAX_COMPRESSION_DROP && r512 > r64,
        format!(
            "final accuracy {a:.4} -> {b:.4} compressed (drop {:.2} points); \
             mean retrieval cosine d=64 {r64:.4}, d=512 {r512:.4}",
            drop * 100.0
        ),
    )
}

fn criterion_8() -> Outcome {
    let (train, eval) = synth(2.0, 800);
    let schedule = SessionSchedule::mini_imagenet();
    let predictions = |cfg: &ModeConfig64| {
        let out = run_experiment(&train, &eval, &schedule, cfg, 128, 3).unwrap();
        out.learner.predict(&eval).unwrap()
    };
    let base = predictions(&ModeConfig64::for_mode(Mode::Averaged));
    let mut m3 = ModeConfig64::for_mode(Mode::Nudged);
    m3.nudge.iterations = 0;
    m3.retrain.iterations = 0;
    let mut m2 = ModeConfig64::for_mode(Mode::Bipolarized);
    m2.retrain.iterations = 0;
    let same3 = predictions(&m3) == base;
    let same2 = predictions(&m2) == base;
    outcome(
        same3 && same2,
        format!("mode 3 (U=0, T=0) identical: {same3}; mode 2 (T=0) identical: {same2}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("gradient oracle", criterion_1),
        ("linearity identity", criterion_2),
        ("sharpening constants", criterion_3),
        ("nudging efficacy", criterion_4),
        ("schedule fidelity", criterion_5),
        ("synthetic end-to-end", criterion_6),
        ("compression", criterion_7),
        ("degenerate equivalences", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        let tag = if o.passed { "PASS" } else { "FAIL" };
        if !o.passed {
            failed += 1;
        }
        println!("criterion {} {tag} {name}: {}", i + 1, o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
