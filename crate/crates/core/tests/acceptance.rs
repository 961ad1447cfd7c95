//! Acceptance suite. Runs every criterion in turn, prints one PASS/FAIL line
//! each, and exits non-zero if any failed.
//!
//! `ACCEPTANCE_ONLY=4,6` restricts the run to the listed criteria.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use common::{boundary, naive_net, rel_diff};
use multishell::dataset::{
    encode_dataset, generate_dataset, split_dataset, Dataset, GenerationParams, Normalizer, SplitFractions,
};
use multishell::inverse::{
    argmax, inverse_design, population_fitness, relative_rms, run_ga, DesignConfig, GaConfig, Individual, PlanRule,
    GENE_ALPHABET,
};
use multishell::scatter::{
    max_multipole_order, scattering_cross_section, spectrum, LayerStack, MaterialLibrary, MaterialTable, Oracle,
    SpectralGrid, DESIGN_BOX,
};
use multishell::surrogate::{
    encode_model, evaluate_mean_error, loss_tcnn, train, train_with, validation_error, ArchKind, MlpModel,
    TrainConfig,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn with_threads<T: Send>(n: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(f)
}

fn progress(label: &str) -> impl FnMut(multishell::surrogate::EpochStats) + '_ {
    let start = Instant::now();
    move |s| {
        if s.epoch % 25 == 0 {
            eprintln!("  [{label}] epoch {} val {:.3e} ({:.0?})", s.epoch, s.val_error, start.elapsed());
        }
    }
}

fn all_candidates(layers: usize) -> Vec<Individual> {
    (0..GENE_ALPHABET.len().pow(layers as u32))
        .map(|mut k| {
            (0..layers)
                .map(|_| {
                    let g = GENE_ALPHABET[k % GENE_ALPHABET.len()];
                    k /= GENE_ALPHABET.len();
                    g
                })
                .collect()
        })
        .collect()
}

fn random_stack(rng: &mut ChaCha8Rng, layers: usize) -> Vec<f64> {
    (0..layers).map(|_| rng.random_range(DESIGN_BOX.0..DESIGN_BOX.1)).collect()
}

/// Surrogates shared between criteria, trained on first use.
#[derive(Default)]
struct Shared {
    three: Option<(MlpModel, Dataset)>,
    six: Option<MlpModel>,
}

const THREE_LAYER_EPOCHS: usize = 200;
const SIX_LAYER_RECORDS: usize = 10_000;
const SIX_LAYER_EPOCHS: usize = 150;

impl Shared {
    /// 3-layer TCNN on 5,000 records; returns the model and its test split.
    fn three_layer(&mut self) -> &(MlpModel, Dataset) {
        self.three.get_or_insert_with(|| {
            let ds = generate_dataset(&GenerationParams::new(5000, 3, 1), &Oracle::default()).unwrap();
            let (tr, va, te) = split_dataset(&ds, SplitFractions::default(), 7).unwrap();
            let cfg = TrainConfig {
                epochs: THREE_LAYER_EPOCHS,
                seed: 3,
                ..TrainConfig::default()
            };
            let mut m = MlpModel::new(ArchKind::Tcnn, &tr, cfg).unwrap();
            train_with(&mut m, &tr, &va, progress("3-layer tcnn")).unwrap();
            (m, te)
        })
    }

    fn six_layer(&mut self) -> &MlpModel {
        self.six.get_or_insert_with(|| {
            let ds = generate_dataset(&GenerationParams::new(SIX_LAYER_RECORDS, 6, 11), &Oracle::default()).unwrap();
            let (tr, va, _) = split_dataset(&ds, SplitFractions::default(), 12).unwrap();
            let cfg = TrainConfig {
                epochs: SIX_LAYER_EPOCHS,
                seed: 13,
                ..TrainConfig::default()
            };
            let mut m = MlpModel::new(ArchKind::Tcnn, &tr, cfg).unwrap();
            train_with(&mut m, &tr, &va, progress("6-layer tcnn")).unwrap();
            m
        })
    }
}

fn constant_lib(name: &str, n: Complex64) -> MaterialLibrary {
    let mut lib = MaterialLibrary::default();
    lib.insert(MaterialTable::constant(name, n, 300.0, 900.0).unwrap());
    lib
}

fn criterion_1() -> Outcome {
    // Rayleigh limit of a homogeneous sphere.
    let mut rayleigh_worst: f64 = 0.0;
    for n in [
        Complex64::new(1.33, 0.0),
        Complex64::new(1.5, 0.0),
        Complex64::new(2.5, 0.0),
        Complex64::new(1.5, 0.1),
    ] {
        let lib = constant_lib("M", n);
        for x in [0.001, 0.003, 0.005] {
            for wl in [400.0, 600.0, 800.0] {
                let k = 2.0 * PI / wl;
                let a = x / k;
                let s = LayerStack::uniform(vec![a], "M").unwrap();
                let sigma = scattering_cross_section(&s, &lib, wl, 1.0).unwrap();
                let polar = ((n * n - 1.0) / (n * n + 2.0)).norm_sqr();
                let expected = 8.0 / 3.0 * PI * k.powi(4) * a.powi(6) * polar;
                rayleigh_worst = rayleigh_worst.max(rel_diff(sigma, expected));
            }
        }
    }

    // Interfaces between identical materials must vanish: a uniform titania
    // stack scatters like one sphere of the outer radius.
    let lib = MaterialLibrary::default();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut collapse_worst: f64 = 0.0;
    for _ in 0..50 {
        let layers = rng.random_range(2..=12);
        let t = random_stack(&mut rng, layers);
        let wl = rng.random_range(400.0..800.0);
        let total: f64 = t.iter().sum();
        let stacked = scattering_cross_section(&LayerStack::uniform(t, "TiO2").unwrap(), &lib, wl, 1.0).unwrap();
        let solid = scattering_cross_section(&LayerStack::uniform(vec![total], "TiO2").unwrap(), &lib, wl, 1.0).unwrap();
        collapse_worst = collapse_worst.max(rel_diff(stacked, solid));
    }

    // Index-matched particles do not scatter.
    let mut nullity_worst: f64 = 0.0;
    for host in [1.0, 1.33, 1.5] {
        let lib = constant_lib("Host", Complex64::new(host, 0.0));
        let s = LayerStack::uniform(vec![50.0, 40.0, 60.0, 35.0], "Host").unwrap();
        let sp = spectrum(&s, &lib, &SpectralGrid::default(), host).unwrap();
        let geometric = PI * s.outer_radius().powi(2);
        for v in sp.values() {
            nullity_worst = nullity_worst.max(v.abs() / geometric);
        }
    }

    // Independent dense boundary-matching solve.
    let mut bm_worst: f64 = 0.0;
    for _ in 0..100 {
        let s = LayerStack::silica_titania(random_stack(&mut rng, 12)).unwrap();
        let wl = rng.random_range(400.0..800.0);
        let order = max_multipole_order(2.0 * PI / wl * s.outer_radius()).unwrap();
        let fast = scattering_cross_section(&s, &lib, wl, 1.0).unwrap();
        let slow = boundary::cross_section(&s, &lib, wl, 1.0, order);
        bm_worst = bm_worst.max(rel_diff(fast, slow));
    }

    outcome(
        rayleigh_worst <= 5e-3 && collapse_worst <= 1e-9 && nullity_worst <= 1e-12 && bm_worst <= 1e-6,
        format!(
            "rayleigh {rayleigh_worst:.2e} (<=5e-3), collapse {collapse_worst:.2e} (<=1e-9), \
             index-matched {nullity_worst:.2e} (<=1e-12), boundary-matching {bm_worst:.2e} (<=1e-6)"
        ),
    )
}

fn criterion_2() -> Outcome {
    let (mut wp, mut wi): (f64, f64) = (0.0, 0.0);
    for seed in 0..50 {
        let (p, i) = naive_net::gradient_probe(5000 + seed);
        wp = wp.max(p);
        wi = wi.max(i);
    }
    outcome(
        wp < 1e-5 && wi < 1e-5,
        format!("50 probes, worst parameter {wp:.2e}, worst input {wi:.2e} (<1e-5)"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = 2 * rng.random_range(1..=200);
        let scale = 10f64.powf(rng.random_range(-3.0..3.0));
        let p: Vec<f64> = (0..n).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
        let t: Vec<f64> = (0..n).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
        let a = loss_tcnn(&p, &t, 0.5).unwrap();
        let b = 0.5 * validation_error(&p, &t).unwrap();
        worst = worst.max(rel_diff(a, b));
    }
    let hand = loss_tcnn(&[1.0, 1.0, 2.0, 2.0], &[0.0; 4], 0.6).unwrap();
    outcome(
        worst <= 1e-12 && (hand - 4.4).abs() <= 1e-12,
        format!("1000 pairs, worst {worst:.2e} (<=1e-12); hand case {hand} (4.4)"),
    )
}

fn criterion_4(shared: &mut Shared) -> Outcome {
    let (model, test) = shared.three_layer();
    let h = &model.history;
    let first = h.val_error[0];
    let last = *h.val_error.last().unwrap();
    let initial = h.initial_val_error.unwrap();
    let rec = &test.records[0];
    let overlay = relative_rms(&model.predict(&rec.thicknesses).unwrap(), &rec.spectrum).unwrap();
    let all: Vec<f64> = test
        .records
        .iter()
        .map(|r| relative_rms(&model.predict(&r.thicknesses).unwrap(), &r.spectrum).unwrap())
        .collect();
    let test_err = evaluate_mean_error(model, test).unwrap();
    outcome(
        first / last >= 10.0 && last < initial && overlay <= 0.10,
        format!(
            "val error epoch 1 {first:.3e} -> epoch {} {last:.3e} ({:.1}x, >=10x); held-out overlay rrms {:.2}% (<=10%); \
             test error {test_err:.3e}, median test rrms {:.2}%",
            h.val_error.len(),
            first / last,
            100.0 * overlay,
            100.0 * median(&all)
        ),
    )
}

const COMPARE_EPOCHS: usize = 60;

fn criterion_5() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for layers in [2, 3, 4] {
        let ds = generate_dataset(&GenerationParams::new(5000, layers, 50 + layers as u64), &Oracle::default()).unwrap();
        let (tr, va, te) = split_dataset(&ds, SplitFractions::default(), 5).unwrap();
        let cfg = TrainConfig {
            epochs: COMPARE_EPOCHS,
            seed: 5,
            ..TrainConfig::default()
        };
        let mut errs = Vec::new();
        for kind in [ArchKind::Tcnn, ArchKind::Fcnn] {
            let mut m = MlpModel::new(kind, &tr, cfg).unwrap();
            let label = format!("{layers}-layer {}", kind.as_str());
            train_with(&mut m, &tr, &va, progress(&label)).unwrap();
            errs.push(evaluate_mean_error(&m, &te).unwrap());
        }
        pass &= errs[0] <= errs[1];
        parts.push(format!(
            "{layers} layers tcnn {:.3e} fcnn {:.3e} ratio {:.2}",
            errs[0],
            errs[1],
            errs[0] / errs[1]
        ));
    }
    outcome(pass, format!("{} ({COMPARE_EPOCHS} epochs each)", parts.join("; ")))
}

fn criterion_6(shared: &mut Shared) -> Outcome {
    let (model, _) = shared.three_layer();
    let oracle = Oracle::default();
    let cands = all_candidates(3);
    let mut hits = 0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
        let truth = LayerStack::silica_titania(random_stack(&mut rng, 3)).unwrap();
        let target = model.normalizer.apply_output(oracle.spectrum(&truth).unwrap().values());
        let fit = population_fitness(&cands, &target, model).unwrap();
        let best = &cands[argmax(&fit)];
        let cfg = GaConfig {
            t_value: f64::INFINITY,
            max_generations: 30,
            seed,
            ..GaConfig::default()
        };
        let ga = run_ga(&target, model, &cfg, None).unwrap();
        if &ga.best == best {
            hits += 1;
        }
    }
    outcome(hits >= 19, format!("GA best = enumeration best in {hits}/20 runs (>=19)"))
}

fn criterion_7(shared: &mut Shared) -> Outcome {
    let model = shared.six_layer();
    let oracle = Oracle::default();
    let cands = all_candidates(6);
    let mut rng = ChaCha8Rng::seed_from_u64(700);
    let truth = LayerStack::silica_titania(random_stack(&mut rng, 6)).unwrap();
    let target = model.normalizer.apply_output(oracle.spectrum(&truth).unwrap().values());
    let mut fit = population_fitness(&cands, &target, model).unwrap();
    fit.sort_by(|a, b| b.partial_cmp(a).unwrap());
    // Reaching the threshold means finding one of the ten best of 4,096 stacks.
    let t_value = fit[9];
    let initial: Vec<Individual> = (0..100)
        .map(|_| (0..6).map(|_| GENE_ALPHABET[rng.random_range(0..4)]).collect())
        .collect();
    let max_generations = 200;
    let mut medians = Vec::new();
    let mut monotone = true;
    for plan in [PlanRule::Adaptive, PlanRule::Fixed(20), PlanRule::Fixed(80)] {
        let mut gens = Vec::new();
        for seed in 0..20 {
            let cfg = GaConfig {
                t_value,
                max_generations,
                plan,
                seed,
                ..GaConfig::default()
            };
            let r = run_ga(&target, model, &cfg, Some(&initial)).unwrap();
            if plan == PlanRule::Adaptive {
                monotone &= r.history.windows(2).all(|w| w[1].best_fitness >= w[0].best_fitness);
            }
            // Runs that never reach the threshold count as one past the cap.
            gens.push(r.generations_to_threshold(t_value).unwrap_or(max_generations + 1) as f64);
        }
        medians.push(median(&gens));
    }
    let worse_fixed = medians[1].max(medians[2]);
    outcome(
        medians[0] <= worse_fixed && monotone,
        format!(
            "median generations: adaptive {}, fixed:20 {}, fixed:80 {} (adaptive <= {worse_fixed}); \
             best-so-far nondecreasing: {monotone}",
            medians[0], medians[1], medians[2]
        ),
    )
}

fn criterion_8(shared: &mut Shared) -> Outcome {
    let model = shared.six_layer();
    let oracle = Oracle::default();
    let mut rng = ChaCha8Rng::seed_from_u64(800);
    let mut errors = Vec::new();
    for i in 0..10u64 {
        let truth = LayerStack::silica_titania(random_stack(&mut rng, 6)).unwrap();
        let target = oracle.spectrum(&truth).unwrap().into_values();
        let mut cfg = DesignConfig::default();
        cfg.ga.seed = i;
        let report = inverse_design(&target, "random 6-layer stack", model, &oracle, &cfg).unwrap();
        errors.push(report.oracle_rrms.unwrap());
    }
    let med = median(&errors);
    let list: Vec<String> = errors.iter().map(|e| format!("{:.1}", 100.0 * e)).collect();
    outcome(
        med <= 0.10,
        format!("median oracle rrms {:.2}% (<=10%); per target % [{}]", 100.0 * med, list.join(", ")),
    )
}

fn criterion_9() -> Outcome {
    let oracle = Oracle {
        grid: SpectralGrid::new(400.0, 800.0, 32).unwrap(),
        ..Oracle::default()
    };
    let pipeline = || {
        let ds = generate_dataset(&GenerationParams::new(300, 4, 9), &oracle).unwrap();
        let (tr, va, te) = split_dataset(&ds, SplitFractions::default(), 9).unwrap();
        let (x, y) = Normalizer::fit(&tr).unwrap().apply_dataset(&tr);
        let cfg = TrainConfig {
            epochs: 4,
            batch_size: 64,
            seed: 9,
            ..TrainConfig::default()
        };
        let mut m = MlpModel::new(ArchKind::Tcnn, &tr, cfg).unwrap();
        train(&mut m, &tr, &va).unwrap();
        let target = oracle.spectrum(&te.stack(0).unwrap()).unwrap().into_values();
        let mut dc = DesignConfig::default();
        dc.ga.max_generations = 10;
        dc.fine_tune.steps = 20;
        let report = inverse_design(&target, "test record 0", &m, &oracle, &dc).unwrap();
        let bits = |v: &[f64]| v.iter().flat_map(|f| f.to_le_bytes()).collect::<Vec<u8>>();
        vec![
            encode_dataset(&ds),
            encode_dataset(&tr),
            encode_dataset(&va),
            encode_dataset(&te),
            bits(&x),
            bits(&y),
            encode_model(&m),
            report.to_text().into_bytes(),
            bits(&report.designed_oracle),
            bits(&report.designed_surrogate),
        ]
    };
    let runs: Vec<Vec<Vec<u8>>> = [1, 1, 3, 8].iter().map(|&n| with_threads(n, pipeline)).collect();
    let stages = ["dataset", "train split", "val split", "test split", "inputs", "outputs", "model", "report", "oracle", "surrogate"];
    let mismatched: Vec<&str> = (0..stages.len())
        .filter(|&k| runs.iter().any(|r| r[k] != runs[0][k]))
        .map(|k| stages[k])
        .collect();
    outcome(
        mismatched.is_empty(),
        format!(
            "{} stages x 4 runs (1, 1, 3, 8 workers); mismatched: {}",
            stages.len(),
            if mismatched.is_empty() { "none".to_string() } else { mismatched.join(", ") }
        ),
    )
}

fn main() {
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|c| c.trim().parse().ok()).collect());
    let selected = |n: usize| only.as_ref().is_none_or(|o| o.contains(&n));
    let mut shared = Shared::default();
    let mut failures = 0;
    let mut lines = Vec::new();
    for n in 1..=9 {
        if !selected(n) {
            continue;
        }
        let start = Instant::now();
        let r = match n {
            1 => criterion_1(),
            2 => criterion_2(),
            3 => criterion_3(),
            4 => criterion_4(&mut shared),
            5 => criterion_5(),
            6 => criterion_6(&mut shared),
            7 => criterion_7(&mut shared),
            8 => criterion_8(&mut shared),
            _ => criterion_9(),
        };
        let line = format!(
            "criterion {n}: {} ({:.1?}) {}",
            if r.pass { "PASS" } else { "FAIL" },
            start.elapsed(),
            r.detail
        );
        println!("{line}");
        failures += usize::from(!r.pass);
        lines.push(line);
    }
    println!("\nacceptance summary");
    for l in &lines {
        println!("{l}");
    }
    if failures > 0 {
        println!("{failures} criterion(s) failed");
        std::process::exit(1);
    }
}
