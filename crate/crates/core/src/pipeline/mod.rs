//! Staged wrapper search over SVM parameters and the feature mask.
//!
//! Each patient gets a stratified fold plan, a random-parameter baseline
//! and four optimizer stages that alternate between (C, gamma) and the
//! feature mask, each starting from the best position found so far.

pub mod encoding;
mod fitness;
mod folds;
mod seeds;

pub use encoding::{decode, encode, Decoded};
pub use fitness::{fold_mean, FitnessContext, FoldEvaluation};
pub use folds::FoldPlan;
pub use seeds::derive_seed;

use std::convert::Infallible;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eho::{self, EhoConfig, EhoError, Objective, RunError};
use crate::features::{FeatureVector, N_FEATURES};
use crate::metrics::{confusion_by_symbol, macro_metrics, metrics, MetricsRow, PatientReport, StageKind, StageRow};
use crate::svm::{Classifier, KernelParams, SvmError, TrainConfig, MAX_GAMMA, MAX_PENALTY, MIN_PENALTY};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{0} beats are too few for the fold plan")]
    InsufficientData(usize),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("invalid stage plan: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Eho(#[from] EhoError),
    #[error(transparent)]
    Svm(#[from] SvmError),
}

/// What one stage searches over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageSpec {
    pub kind: StageKind,
    pub generations: usize,
}

impl StageSpec {
    pub fn active_dims(&self) -> Vec<usize> {
        match self.kind {
            StageKind::Parameters => vec![encoding::PENALTY_DIM, encoding::GAMMA_DIM],
            StageKind::Features => encoding::FEATURE_DIMS.collect(),
            StageKind::Baseline => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StagePlan {
    pub stages: Vec<StageSpec>,
}

impl StagePlan {
    /// Parameters, features, parameters, features.
    pub fn alternating(generations: usize) -> Self {
        let kinds = [StageKind::Parameters, StageKind::Features, StageKind::Parameters, StageKind::Features];
        Self {
            stages: kinds.iter().map(|&kind| StageSpec { kind, generations }).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.stages.len() != 4 {
            return Err(PipelineError::InvalidPlan(format!("{} stages, want 4", self.stages.len())));
        }
        for pair in self.stages.windows(2) {
            let mut covered = [false; encoding::DIM];
            for d in pair[0].active_dims().into_iter().chain(pair[1].active_dims()) {
                covered[d] = true;
            }
            if !covered.iter().all(|c| *c) {
                return Err(PipelineError::InvalidPlan("consecutive stages must cover every dimension".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    pub plan: StagePlan,
    pub n_folds: usize,
    pub balanced_fitness: bool,
    /// Optimizer settings; bounds and seed are filled in per stage.
    pub eho: EhoConfig,
    pub svm: TrainConfig,
}

impl PipelineConfig {
    pub fn new(seed: u64, stage_generations: usize) -> Self {
        Self {
            seed,
            plan: StagePlan::alternating(stage_generations),
            n_folds: 3,
            balanced_fitness: false,
            eho: EhoConfig::new(Vec::new(), stage_generations, seed),
            svm: TrainConfig::new(MIN_PENALTY),
        }
    }
}

/// A configuration together with its cross-validation result.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluated {
    pub position: Vec<f64>,
    pub decoded: Decoded,
    pub evaluation: FoldEvaluation,
    pub binary: MetricsRow,
    pub macro_avg: MetricsRow,
}

impl Evaluated {
    fn new(ctx: &FitnessContext, position: Vec<f64>) -> Self {
        let decoded = decode(&position);
        let evaluation = ctx.evaluate(&decoded);
        let pairs: Vec<_> = ctx
            .data
            .iter()
            .zip(&evaluation.predictions)
            .map(|(v, p)| (v.symbol, *p))
            .collect();
        let m = confusion_by_symbol(&pairs).expect("fitness context holds beats");
        Self {
            position,
            decoded,
            binary: metrics(&m),
            macro_avg: macro_metrics(&m).expect("per-symbol counts kept"),
            evaluation,
        }
    }

    pub fn fitness(&self) -> f64 {
        self.evaluation.fitness
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageResult {
    pub stage_no: usize,
    pub spec: StageSpec,
    /// Best configuration found in this stage.
    pub best: Evaluated,
    /// Best fitness over this and all earlier stages.
    pub cumulative_fitness: f64,
    /// Best fitness after each generation.
    pub trace: Vec<f64>,
    /// Fitness of the warm start handed to this stage.
    pub warm_start_fitness: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
pub struct PatientRun {
    pub patient: String,
    pub folds: FoldPlan,
    pub baseline: Evaluated,
    pub stages: Vec<StageResult>,
    /// Index into `stages` of the highest-fitness stage (earliest on ties).
    pub best_stage: usize,
    /// Trained on every beat with the best stage's configuration.
    pub classifier: Classifier,
}

fn stage_row(stage: usize, kind: StageKind, e: &Evaluated, cumulative: f64, generations: usize) -> StageRow {
    StageRow {
        stage,
        kind,
        fitness: e.fitness(),
        cumulative_fitness: cumulative,
        fold_accuracies: e.evaluation.fold_accuracies.clone(),
        binary: e.binary,
        macro_avg: e.macro_avg,
        penalty: e.decoded.penalty,
        gamma: e.decoded.gamma,
        mask: e.decoded.mask,
        generations,
    }
}

impl PatientRun {
    pub fn report(&self) -> PatientReport {
        PatientReport {
            patient: self.patient.clone(),
            baseline: stage_row(0, StageKind::Baseline, &self.baseline, self.baseline.fitness(), 0),
            stages: self
                .stages
                .iter()
                .map(|s| stage_row(s.stage_no, s.spec.kind, &s.best, s.cumulative_fitness, s.spec.generations))
                .collect(),
        }
    }
}

/// Fitness of a stage's subspace: inactive dimensions stay at the warm start.
struct StageObjective<'a> {
    ctx: &'a FitnessContext,
    frozen: &'a [f64],
    active: &'a [usize],
}

impl StageObjective<'_> {
    fn full(&self, sub: &[f64]) -> Vec<f64> {
        let mut p = self.frozen.to_vec();
        for (d, v) in self.active.iter().zip(sub) {
            p[*d] = *v;
        }
        p
    }
}

impl Objective for StageObjective<'_> {
    type Error = Infallible;

    fn evaluate(&self, sub: &[f64]) -> Result<f64, Infallible> {
        Ok(self.ctx.evaluate(&decode(&self.full(sub))).fitness)
    }

    /// Fewer selected features win ties.
    fn tie_break(&self, sub: &[f64]) -> f64 {
        decode(&self.full(sub)).n_features() as f64
    }
}

/// Random C in [1, 1000] and gamma in (0, 1000] with every feature on.
pub fn baseline_position(seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let penalty = MIN_PENALTY + (MAX_PENALTY - MIN_PENALTY) * rng.random::<f64>();
    let gamma = MAX_GAMMA * (1.0 - rng.random::<f64>());
    encode(&Decoded {
        penalty,
        gamma,
        mask: [true; N_FEATURES],
    })
}

/// Run one stage from `warm_start`.
pub fn run_stage(
    ctx: &FitnessContext,
    spec: StageSpec,
    stage_no: usize,
    warm_start: &Evaluated,
    eho_template: &EhoConfig,
    seed: u64,
) -> Result<StageResult, PipelineError> {
    if spec.generations == 0 {
        return Ok(StageResult {
            stage_no,
            spec,
            best: warm_start.clone(),
            cumulative_fitness: warm_start.fitness(),
            trace: Vec::new(),
            warm_start_fitness: warm_start.fitness(),
            evaluations: 0,
        });
    }
    let active = spec.active_dims();
    let all_bounds = encoding::bounds();
    let mut cfg = eho_template.clone();
    cfg.bounds = active.iter().map(|&d| all_bounds[d]).collect();
    cfg.max_gen = spec.generations;
    cfg.rng_seed = seed;
    let objective = StageObjective {
        ctx,
        frozen: &warm_start.position,
        active: &active,
    };
    let start: Vec<f64> = active.iter().map(|&d| warm_start.position[d]).collect();
    let out = eho::run(&cfg, &objective, &[start]).map_err(|e| match e {
        RunError::Config(c) => PipelineError::Eho(c),
        RunError::Objective { error, .. } => match error {},
    })?;
    let best = Evaluated::new(ctx, objective.full(&out.best_position));
    debug_assert_eq!(best.fitness(), out.best_fitness);
    Ok(StageResult {
        stage_no,
        spec,
        best,
        cumulative_fitness: 0.0,
        trace: out.trace,
        warm_start_fitness: warm_start.fitness(),
        evaluations: out.evaluations,
    })
}

/// Baseline plus all four stages for one patient.
pub fn run_patient(patient: &str, data: Vec<FeatureVector>, config: &PipelineConfig) -> Result<PatientRun, PipelineError> {
    config.plan.validate()?;
    if data.len() < config.n_folds {
        return Err(PipelineError::InsufficientData(data.len()));
    }
    let labels: Vec<_> = data.iter().map(|v| v.label).collect();
    let folds = FoldPlan::stratified(&labels, config.n_folds, derive_seed(config.seed, &format!("folds/{patient}")));
    log::debug!("patient {patient} folds {folds}");
    let ctx = FitnessContext::new(data, folds.clone(), config.balanced_fitness, config.svm)?;

    let baseline = Evaluated::new(&ctx, baseline_position(derive_seed(config.seed, &format!("baseline/{patient}"))));
    log::info!("patient {patient}: baseline fitness {:.4}", baseline.fitness());

    let mut stages: Vec<StageResult> = Vec::with_capacity(4);
    let mut warm = baseline.clone();
    let mut best_stage = 0;
    for (k, spec) in config.plan.stages.iter().enumerate() {
        let seed = derive_seed(config.seed, &format!("stage{}/{patient}", k + 1));
        let mut result = run_stage(&ctx, *spec, k + 1, &warm, &config.eho, seed)?;
        if k > 0 && result.best.fitness() > stages[best_stage].best.fitness() {
            best_stage = k;
        }
        let prev = stages.last().map_or(f64::NEG_INFINITY, |s| s.cumulative_fitness);
        result.cumulative_fitness = prev.max(result.best.fitness());
        log::info!(
            "patient {patient}: stage {} ({}) fitness {:.4}",
            k + 1,
            spec.kind.name(),
            result.best.fitness()
        );
        warm = result.best.clone();
        stages.push(result);
    }

    let best = &stages[best_stage].best.decoded;
    let all: Vec<&FeatureVector> = ctx.data.iter().collect();
    let svm = TrainConfig {
        penalty: best.penalty,
        ..config.svm
    };
    let classifier = Classifier::fit(&all, &best.mask, &svm, KernelParams::new(best.gamma)?)?;
    Ok(PatientRun {
        patient: patient.to_string(),
        folds,
        baseline,
        stages,
        best_stage,
        classifier,
    })
}
