//! Inverse design: a genetic algorithm over quantized thicknesses scored by the
//! surrogate, then gradient refinement of the winner through the frozen network.

mod finetune;
mod ga;

use std::fmt::Write as _;

use crate::scatter::{LayerStack, Oracle, ScatterError};
use crate::surrogate::{validation_error, MlpModel, SurrogateError};

pub use finetune::{fine_tune, surrogate_error_and_gradient, FineTuneConfig, FineTuneResult};
pub use ga::{
    argmax, crossover, fitness, fitness_from_sse, mutation, plan_generation, population_fitness, roulette_select,
    run_ga, single_point, GaConfig, GaResult, GenerationPlan, GenerationRecord, Individual, PlanRule, SSE_FLOOR,
};

/// Thickness values (nm) a GA gene may take.
pub const GENE_ALPHABET: [f64; 4] = [35.0, 45.0, 55.0, 65.0];

#[derive(Debug, thiserror::Error)]
pub enum InverseError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error(transparent)]
    Oracle(#[from] ScatterError),
}

/// `||design - target|| / ||target||`; `None` for an all-zero target.
pub fn relative_rms(design: &[f64], target: &[f64]) -> Option<f64> {
    let norm = target.iter().map(|t| t * t).sum::<f64>().sqrt();
    if norm == 0.0 {
        return None;
    }
    let diff = design.iter().zip(target).map(|(d, t)| (d - t).powi(2)).sum::<f64>().sqrt();
    Some(diff / norm)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DesignConfig {
    pub ga: GaConfig,
    pub fine_tune: FineTuneConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignReport {
    pub provenance: String,
    pub wavelengths: Vec<f64>,
    /// Spectra in the model's output units.
    pub target: Vec<f64>,
    pub designed_surrogate: Vec<f64>,
    pub designed_oracle: Vec<f64>,
    pub ga: GaResult,
    pub plan_rule: PlanRule,
    pub t_value: f64,
    pub fine_tune_trace: Vec<f64>,
    pub refined: Vec<f64>,
    /// Whole-spectrum squared errors in normalized units.
    pub surrogate_error: f64,
    pub oracle_error: f64,
    pub surrogate_rrms: Option<f64>,
    pub oracle_rrms: Option<f64>,
}

impl DesignReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let fmt_list = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(",");
        let fmt_opt = |v: Option<f64>| v.map_or("undefined".to_string(), |v| format!("{v:.6e}"));
        writeln!(s, "# design report").unwrap();
        writeln!(s, "target: {}", self.provenance).unwrap();
        writeln!(s, "plan_rule: {}", self.plan_rule.describe()).unwrap();
        writeln!(s, "t_value: {:e}", self.t_value).unwrap();
        writeln!(s, "generations: {}", self.ga.history.len() - 1).unwrap();
        writeln!(s, "threshold_reached: {}", self.ga.reached_threshold).unwrap();
        if !self.ga.reached_threshold {
            writeln!(
                s,
                "note: best fitness {:.4e} stayed below t_value; the target may be unreachable",
                self.ga.best_fitness
            )
            .unwrap();
        }
        writeln!(s, "ga_best_nm: {}", fmt_list(&self.ga.best)).unwrap();
        writeln!(s, "ga_best_fitness: {:.6e}", self.ga.best_fitness).unwrap();
        writeln!(s, "fine_tune_steps: {}", self.fine_tune_trace.len() - 1).unwrap();
        writeln!(s, "refined_nm: {}", fmt_list(&self.refined)).unwrap();
        writeln!(s, "surrogate_error: {:.6e}", self.surrogate_error).unwrap();
        writeln!(s, "oracle_error: {:.6e}", self.oracle_error).unwrap();
        writeln!(s, "surrogate_relative_rms: {}", fmt_opt(self.surrogate_rrms)).unwrap();
        writeln!(s, "oracle_relative_rms: {}", fmt_opt(self.oracle_rrms)).unwrap();
        writeln!(s, "\n# generation max_fitness mean_fitness best_fitness n_selection n_crossover n_mutation").unwrap();
        for r in &self.ga.history {
            let (a, b, c) = r
                .plan
                .map_or(("-".into(), "-".into(), "-".into()), |p| {
                    (p.n_selection.to_string(), p.n_crossover.to_string(), p.n_mutation.to_string())
                });
            writeln!(
                s,
                "{} {:.6e} {:.6e} {:.6e} {a} {b} {c}",
                r.generation, r.max_fitness, r.mean_fitness, r.best_fitness
            )
            .unwrap();
        }
        s
    }
}

/// GA then fine-tuning against `target` (model output units), with the result
/// checked by the exact oracle.
pub fn inverse_design(
    target: &[f64],
    provenance: &str,
    model: &MlpModel,
    oracle: &Oracle,
    config: &DesignConfig,
) -> Result<DesignReport, InverseError> {
    if oracle.grid != model.grid {
        return Err(InverseError::Argument("oracle grid differs from the model grid".into()));
    }
    if target.len() != model.grid.len() || target.iter().any(|v| !v.is_finite()) {
        return Err(InverseError::Argument("target does not fit the model grid".into()));
    }
    let target_n = model.normalizer.apply_output(target);
    let ga = run_ga(&target_n, model, &config.ga, None)?;
    let tuned = fine_tune(model, &ga.best, &target_n, &config.fine_tune)?;
    let stack = LayerStack::new(tuned.thicknesses.clone(), model.materials.clone())?;
    let designed_oracle = oracle.spectrum(&stack)?.into_values();
    let designed_surrogate = model.predict(&tuned.thicknesses)?;
    let oracle_error = validation_error(&model.normalizer.apply_output(&designed_oracle), &target_n)?;
    let surrogate_error = validation_error(&model.normalizer.apply_output(&designed_surrogate), &target_n)?;
    Ok(DesignReport {
        provenance: provenance.to_string(),
        wavelengths: model.grid.wavelengths(),
        target: target.to_vec(),
        surrogate_rrms: relative_rms(&designed_surrogate, target),
        oracle_rrms: relative_rms(&designed_oracle, target),
        designed_surrogate,
        designed_oracle,
        plan_rule: config.ga.plan,
        t_value: config.ga.t_value,
        ga,
        fine_tune_trace: tuned.trace,
        refined: tuned.thicknesses,
        surrogate_error,
        oracle_error,
    })
}
