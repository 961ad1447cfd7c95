use std::path::Path;

use anyhow::{Context, Result};
use multishell::dataset::{
    generate_dataset, load_dataset, split_dataset, Dataset, DatasetError, GenerationParams,
    SplitFractions, SpectrumUnit,
};
use multishell::inverse::{inverse_design, relative_rms, DesignConfig, FineTuneConfig, GaConfig, PlanRule};
use multishell::scatter::{LayerStack, MaterialLibrary, MaterialTable, Oracle, SpectralGrid};
use multishell::surrogate::{
    evaluate_mean_error, load_model, train_with, AdamConfig, ArchKind, Architecture, MlpModel,
    TrainConfig,
};

use crate::output::{line_plot, provenance, provenance_text, restem, Artifacts, Provenance, Series};
use crate::{CompareArgs, DesignArgs, EvalArgs, GenerateArgs, GridArgs, SplitArgs, TrainArgs, TrainingArgs, UsageError};

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Argument errors from the library are the caller's fault.
fn dataset_err(e: DatasetError) -> anyhow::Error {
    match e {
        DatasetError::Argument(m) => usage(m),
        other => other.into(),
    }
}

fn library(files: &[std::path::PathBuf]) -> Result<MaterialLibrary> {
    let mut lib = MaterialLibrary::default();
    for f in files {
        lib.insert(MaterialTable::from_file(f).with_context(|| format!("loading material table {}", f.display()))?);
    }
    Ok(lib)
}

fn oracle_from(grid: &GridArgs) -> Result<Oracle> {
    let g = SpectralGrid::new(grid.lambda_min, grid.lambda_max, grid.points).map_err(|e| usage(e.to_string()))?;
    if !(grid.host_index.is_finite() && grid.host_index > 0.0) {
        return Err(usage("host index must be positive"));
    }
    Ok(Oracle::new(library(&grid.material_files)?, grid.host_index, g))
}

fn fractions(s: &SplitArgs) -> SplitFractions {
    SplitFractions {
        train: s.train_frac,
        val: s.val_frac,
        test: s.test_frac,
    }
}

fn split(ds: &Dataset, s: &SplitArgs, seed: u64) -> Result<(Dataset, Dataset, Dataset)> {
    split_dataset(ds, fractions(s), s.split_seed.unwrap_or(seed)).map_err(dataset_err)
}

fn train_config(t: &TrainingArgs, seed: u64) -> Result<TrainConfig> {
    let cfg = TrainConfig {
        m: t.m,
        epochs: t.epochs,
        batch_size: t.batch_size as usize,
        adam: AdamConfig {
            learning_rate: t.lr,
            ..AdamConfig::default()
        },
        seed,
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn architecture(kind: ArchKind, t: &TrainingArgs, ds: &Dataset) -> Architecture {
    let base = match kind {
        ArchKind::Tcnn => Architecture::tcnn(ds.num_layers(), ds.n_points()),
        ArchKind::Fcnn => Architecture::fcnn(ds.num_layers(), ds.n_points()),
    };
    Architecture {
        hidden_layers: t.hidden_layers.unwrap_or(base.hidden_layers),
        hidden_width: t.hidden_width.unwrap_or(base.hidden_width),
        ..base
    }
}

fn parse_kind(s: &str) -> Result<ArchKind> {
    ArchKind::parse(s).ok_or_else(|| usage(format!("unknown architecture {s:?} (expected tcnn or fcnn)")))
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn training_provenance(t: &TrainingArgs, s: &SplitArgs, seed: u64) -> Vec<(&'static str, String)> {
    vec![
        ("epochs", t.epochs.to_string()),
        ("batch_size", t.batch_size.to_string()),
        ("lr", t.lr.to_string()),
        ("m", t.m.to_string()),
        ("split", format!("{},{},{}", s.train_frac, s.val_frac, s.test_frac)),
        ("split_seed", s.split_seed.unwrap_or(seed).to_string()),
    ]
}

/// Trains with per-epoch progress on stderr.
fn fit(model: &mut MlpModel, train: &Dataset, val: &Dataset, label: &str, quiet: bool) -> Result<()> {
    let total = model.config.epochs;
    train_with(model, train, val, |s| {
        if !quiet && (s.epoch == 1 || s.epoch % 10 == 0 || s.epoch == total) {
            eprintln!(
                "[{label}] epoch {:>5}/{total}  train_loss {:.4e}  val_error {:.4e}",
                s.epoch, s.train_loss, s.val_error
            );
        }
    })?;
    Ok(())
}

pub fn generate(a: GenerateArgs) -> Result<()> {
    let unit = SpectrumUnit::parse(&a.unit).ok_or_else(|| usage(format!("unknown unit {:?}", a.unit)))?;
    let oracle = oracle_from(&a.grid)?;
    let materials: [String; 2] = a.grid.materials.clone().try_into().map_err(|_| usage("--materials needs two names"))?;
    for m in &materials {
        if oracle.materials.get(m).is_err() {
            return Err(usage(format!("unknown material {m}")));
        }
    }
    let params = GenerationParams {
        count: a.count as usize,
        num_layers: a.layers as usize,
        bounds: (a.min_thickness, a.max_thickness),
        seed: a.common.seed,
        unit,
        materials,
    };
    let mut ds = generate_dataset(&params, &oracle).map_err(dataset_err)?;
    ds.manifest.params.insert("tool".into(), format!("multishell {}", env!("CARGO_PKG_VERSION")));
    let mut arts = Artifacts::default();
    arts.add(&a.out, multishell::dataset::encode_dataset(&ds));
    arts.commit()?;
    let m = &ds.manifest;
    println!("wrote {}", a.out.display());
    println!(
        "records: {}  layers: {}  grid: {}..{} nm x {}  materials: {}  host: {}  unit: {}  seed: {}",
        m.count,
        m.num_layers,
        m.grid.lambda_min(),
        m.grid.lambda_max(),
        m.grid.len(),
        m.materials.join("/"),
        m.host_index,
        m.unit.as_str(),
        m.seed
    );
    Ok(())
}

fn history_artifacts(arts: &mut Artifacts, path: &Path, model: &MlpModel, prov: &Provenance) -> Result<()> {
    let h = &model.history;
    let rows: Vec<Vec<String>> = h
        .train_loss
        .iter()
        .zip(&h.val_error)
        .enumerate()
        .map(|(i, (t, v))| vec![(i + 1).to_string(), t.to_string(), v.to_string()])
        .collect();
    arts.add_csv(path, &["epoch", "train_loss", "mean_val_error"], &rows, prov)?;
    let epochs: Vec<f64> = (1..=h.val_error.len()).map(|e| e as f64).collect();
    let svg = line_plot(
        "Training history",
        "epoch",
        "error (normalized units)",
        &[
            Series { name: "train loss", x: &epochs, y: &h.train_loss },
            Series { name: "mean val error", x: &epochs, y: &h.val_error },
        ],
        true,
        prov,
    );
    arts.add(restem(path, ".svg"), svg.into_bytes());
    Ok(())
}

pub fn train(a: TrainArgs) -> Result<()> {
    let seed = a.common.seed;
    let kind = parse_kind(&a.arch)?;
    let cfg = train_config(&a.training, seed)?;
    let ds = load_dataset(&a.data).with_context(|| format!("loading {}", a.data.display()))?;
    let (tr, va, te) = split(&ds, &a.split, seed)?;
    let mut model = MlpModel::with_architecture(architecture(kind, &a.training, &ds), &tr, cfg)
        .map_err(|e| usage(e.to_string()))?;
    let mut extra = training_provenance(&a.training, &a.split, seed);
    extra.push(("arch", kind.as_str().to_string()));
    extra.push(("dataset_seed", ds.manifest.seed.to_string()));
    extra.push(("dataset_count", ds.manifest.count.to_string()));
    let prov = provenance(seed, &extra);
    for (k, v) in &prov {
        model.provenance.insert(k.clone(), v.clone());
    }
    fit(&mut model, &tr, &va, kind.as_str(), a.training.quiet)?;
    let val = *model.history.val_error.last().unwrap();
    let test = evaluate_mean_error(&model, &te)?;

    let history_path = a.history.clone().unwrap_or_else(|| restem(&a.out, ".history.csv"));
    let mut arts = Artifacts::default();
    arts.add(&a.out, multishell::surrogate::encode_model(&model));
    history_artifacts(&mut arts, &history_path, &model, &prov)?;
    for p in arts.commit()? {
        println!("wrote {}", p.display());
    }
    let arch = model.architecture();
    println!(
        "{}: {} hidden layers x {} wide, {} parameters",
        arch.kind.as_str(),
        arch.hidden_layers,
        arch.hidden_width,
        arch.parameter_count()
    );
    println!("mean_val_error: {val:.6e}");
    println!("mean_test_error: {test:.6e}");
    Ok(())
}

pub fn compare(a: CompareArgs) -> Result<()> {
    let seed = a.common.seed;
    let cfg = train_config(&a.training, seed)?;
    let oracle = oracle_from(&a.grid)?;
    let materials: [String; 2] = a.grid.materials.clone().try_into().map_err(|_| usage("--materials needs two names"))?;
    let mut rows = Vec::new();
    let mut data_files = Artifacts::default();
    let (mut xs, mut tcnn_err, mut fcnn_err) = (Vec::new(), Vec::new(), Vec::new());
    for &layers in &a.layers {
        let params = GenerationParams {
            count: a.count as usize,
            num_layers: layers as usize,
            materials: materials.clone(),
            ..GenerationParams::new(a.count as usize, layers as usize, seed)
        };
        eprintln!("[{layers} layers] generating {} records", a.count);
        let ds = generate_dataset(&params, &oracle).map_err(dataset_err)?;
        if let Some(dir) = &a.data_dir {
            data_files.add(dir.join(format!("layers{layers}.nld")), multishell::dataset::encode_dataset(&ds));
        }
        let (tr, va, te) = split(&ds, &a.split, seed)?;
        let mut errs = Vec::new();
        for kind in [ArchKind::Tcnn, ArchKind::Fcnn] {
            let mut model = MlpModel::with_architecture(architecture(kind, &a.training, &ds), &tr, cfg)
                .map_err(|e| usage(e.to_string()))?;
            fit(&mut model, &tr, &va, &format!("{layers} layers {}", kind.as_str()), a.training.quiet)?;
            errs.push(evaluate_mean_error(&model, &te)?);
        }
        println!(
            "layers {layers}: tcnn {:.4e}  fcnn {:.4e}  ratio {:.3}",
            errs[0],
            errs[1],
            errs[0] / errs[1]
        );
        xs.push(layers as f64);
        tcnn_err.push(errs[0]);
        fcnn_err.push(errs[1]);
        rows.push(vec![
            layers.to_string(),
            errs[0].to_string(),
            errs[1].to_string(),
            (errs[0] / errs[1]).to_string(),
        ]);
    }
    let mut extra = training_provenance(&a.training, &a.split, seed);
    extra.push(("count", a.count.to_string()));
    extra.push(("layers", a.layers.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(",")));
    let prov = provenance(seed, &extra);
    let mut arts = data_files;
    arts.add_csv(&a.out, &["layers", "tcnn_error", "fcnn_error", "ratio"], &rows, &prov)?;
    let svg = line_plot(
        "Mean test error by layer count",
        "layers",
        "mean error (normalized units)",
        &[
            Series { name: "TCNN", x: &xs, y: &tcnn_err },
            Series { name: "FCNN", x: &xs, y: &fcnn_err },
        ],
        true,
        &prov,
    );
    arts.add(restem(&a.out, ".svg"), svg.into_bytes());
    for p in arts.commit()? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

/// Reads a (wavelength, value) CSV with a header row and checks it lies on `grid`.
fn read_target_csv(path: &Path, grid: &SpectralGrid) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut values = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() < 2 {
            return Err(usage(format!("target CSV row {} needs wavelength and value", i + 1)));
        }
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| usage(format!("bad number {s:?} in target CSV")));
        let wl = parse(&rec[0])?;
        if i >= grid.len() || (wl - grid.wavelength(i)).abs() > 1e-6 * grid.wavelength(i) {
            return Err(usage(format!(
                "target CSV wavelength {wl} at row {} does not match the model grid",
                i + 1
            )));
        }
        values.push(parse(&rec[1])?);
    }
    if values.len() != grid.len() {
        return Err(usage(format!(
            "target CSV has {} rows, the model grid has {}",
            values.len(),
            grid.len()
        )));
    }
    Ok(values)
}

pub fn design(a: DesignArgs) -> Result<()> {
    let seed = a.common.seed;
    let model = load_model(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    let oracle = Oracle::new(library(&a.material_files)?, model.host_index, model.grid);
    let layers = model.architecture().input_dim;
    let (target, source) = if let Some(stack) = &a.target_stack {
        if stack.len() != layers {
            return Err(usage(format!("--target-stack has {} layers, the model expects {layers}", stack.len())));
        }
        let s = LayerStack::new(stack.clone(), model.materials.clone()).map_err(|e| usage(e.to_string()))?;
        (oracle.spectrum(&s)?.into_values(), format!("oracle spectrum of stack {} nm", fmt_list(stack)))
    } else if let Some(path) = &a.target_data {
        let ds = load_dataset(path).with_context(|| format!("loading {}", path.display()))?;
        if ds.manifest.grid != model.grid {
            return Err(usage("target dataset grid differs from the model grid"));
        }
        let rec = ds
            .records
            .get(a.target_record)
            .ok_or_else(|| usage(format!("record {} out of range ({} records)", a.target_record, ds.len())))?;
        (
            rec.spectrum.clone(),
            format!(
                "record {} of {} (true stack {} nm)",
                a.target_record,
                path.display(),
                fmt_list(&rec.thicknesses)
            ),
        )
    } else {
        let path = a.target_csv.as_ref().unwrap();
        (read_target_csv(path, &model.grid)?, format!("CSV {}", path.display()))
    };
    let plan = PlanRule::parse(&a.ga_selection)
        .ok_or_else(|| usage(format!("unknown selection rule {:?}", a.ga_selection)))?;
    let cfg = DesignConfig {
        ga: GaConfig {
            population_size: a.population,
            t_value: a.t_value,
            max_generations: a.max_generations,
            selection_cap: a.selection_cap,
            crossover_fraction: a.crossover_fraction,
            plan,
            elitism: !a.no_elitism,
            seed,
        },
        fine_tune: FineTuneConfig {
            steps: a.fine_tune_steps,
            learning_rate: a.fine_tune_lr,
            ..FineTuneConfig::default()
        },
    };
    cfg.ga.validate().map_err(|e| usage(e.to_string()))?;
    let report = inverse_design(&target, &source, &model, &oracle, &cfg)?;

    let prov = provenance(
        seed,
        &[
            ("ga_selection", plan.describe()),
            ("population", a.population.to_string()),
            ("t_value", a.t_value.to_string()),
            ("max_generations", a.max_generations.to_string()),
            ("elitism", (!a.no_elitism).to_string()),
            ("fine_tune_steps", a.fine_tune_steps.to_string()),
            ("fine_tune_lr", a.fine_tune_lr.to_string()),
        ],
    );
    let mut arts = Artifacts::default();
    let mut text = provenance_text(&prov).lines().map(|l| format!("# {l}\n")).collect::<String>();
    text.push_str(&report.to_text());
    arts.add(&a.out, text.into_bytes());
    let overlay: Vec<Vec<String>> = (0..target.len())
        .map(|i| {
            vec![
                report.wavelengths[i].to_string(),
                report.target[i].to_string(),
                report.designed_oracle[i].to_string(),
                report.designed_surrogate[i].to_string(),
            ]
        })
        .collect();
    arts.add_csv(
        &restem(&a.out, ".overlay.csv"),
        &["wavelength_nm", "target", "designed_oracle", "designed_surrogate"],
        &overlay,
        &prov,
    )?;
    let ga_rows: Vec<Vec<String>> = report
        .ga
        .history
        .iter()
        .map(|r| {
            let plan = r.plan.map_or([String::new(), String::new(), String::new()], |p| {
                [p.n_selection.to_string(), p.n_crossover.to_string(), p.n_mutation.to_string()]
            });
            let mut row = vec![
                r.generation.to_string(),
                r.max_fitness.to_string(),
                r.mean_fitness.to_string(),
                r.best_fitness.to_string(),
            ];
            row.extend(plan);
            row
        })
        .collect();
    arts.add_csv(
        &restem(&a.out, ".ga.csv"),
        &["generation", "max_fitness", "mean_fitness", "best_fitness", "n_selection", "n_crossover", "n_mutation"],
        &ga_rows,
        &prov,
    )?;
    let svg = line_plot(
        "Target and designed spectra",
        "wavelength (nm)",
        "scattering cross-section",
        &[
            Series { name: "target", x: &report.wavelengths, y: &report.target },
            Series { name: "designed (oracle)", x: &report.wavelengths, y: &report.designed_oracle },
            Series { name: "designed (surrogate)", x: &report.wavelengths, y: &report.designed_surrogate },
        ],
        false,
        &prov,
    );
    arts.add(restem(&a.out, ".svg"), svg.into_bytes());
    for p in arts.commit()? {
        println!("wrote {}", p.display());
    }
    println!("refined stack (nm): {}", report.refined.iter().map(|t| format!("{t:.2}")).collect::<Vec<_>>().join(", "));
    println!("threshold reached: {}", report.ga.reached_threshold);
    println!("surrogate error: {:.4e}  oracle error: {:.4e}", report.surrogate_error, report.oracle_error);
    match report.oracle_rrms {
        Some(r) => println!("oracle relative rms: {r:.4}"),
        None => println!("oracle relative rms: undefined (all-zero target)"),
    }
    Ok(())
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let seed = a.common.seed;
    let model = load_model(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    let ds = load_dataset(&a.data).with_context(|| format!("loading {}", a.data.display()))?;
    model.check_compatible(&ds).map_err(|e| usage(e.to_string()))?;
    let part = match a.split.as_str() {
        "all" => ds,
        name @ ("train" | "val" | "test") => {
            let (tr, va, te) = split(&ds, &a.split_fractions, seed)?;
            match name {
                "train" => tr,
                "val" => va,
                _ => te,
            }
        }
        other => return Err(usage(format!("unknown split {other:?}"))),
    };
    let mean = evaluate_mean_error(&model, &part)?;
    let mut summary = format!(
        "split: {}\nrecords: {}\nmean_error: {mean:.6e}\n",
        a.split,
        part.len()
    );
    if let Some(v) = model.history.val_error.last() {
        summary.push_str(&format!("final_training_val_error: {v:.6e}\n"));
    }
    let prov = provenance(seed, &[("split", a.split.clone()), ("record", a.record.to_string())]);
    let mut arts = Artifacts::default();
    if let Some(path) = &a.overlay {
        let rec = part
            .records
            .get(a.record)
            .ok_or_else(|| usage(format!("record {} out of range ({} records)", a.record, part.len())))?;
        let pred = model.predict(&rec.thicknesses)?;
        let wl = model.grid.wavelengths();
        let rows: Vec<Vec<String>> = (0..wl.len())
            .map(|i| vec![wl[i].to_string(), rec.spectrum[i].to_string(), pred[i].to_string()])
            .collect();
        arts.add_csv(path, &["wavelength_nm", "oracle", "surrogate"], &rows, &prov)?;
        let svg = line_plot(
            &format!("Held-out record, stack {} nm", fmt_list(&rec.thicknesses)),
            "wavelength (nm)",
            "scattering cross-section",
            &[
                Series { name: "oracle", x: &wl, y: &rec.spectrum },
                Series { name: "surrogate", x: &wl, y: &pred },
            ],
            false,
            &prov,
        );
        arts.add(restem(path, ".svg"), svg.into_bytes());
        if let Some(r) = relative_rms(&pred, &rec.spectrum) {
            summary.push_str(&format!("overlay_relative_rms: {r:.6}\n"));
        }
    }
    if let Some(out) = &a.out {
        let mut text = provenance_text(&prov);
        text.push_str(&summary);
        arts.add(out, text.into_bytes());
    }
    for p in arts.commit()? {
        println!("wrote {}", p.display());
    }
    print!("{summary}");
    Ok(())
}
