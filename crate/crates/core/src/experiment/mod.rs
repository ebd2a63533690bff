//! Experiment runner: configuration, seeded parallel Monte Carlo, and the
//! prediction/comparison tables produced by the command-line tool.

mod config;
mod oracle;
mod report;

pub use config::{CompareConfig, EnsembleConfig, ExperimentConfig, GridConfig, ModelConfig, Spacing};
pub use oracle::{run_oracle, OracleCheck};
pub use report::{
    read_profile_csv, write_predict_csv, write_profile_csv, write_sample_dump, CompareOutcome, PredictRow, Summary,
};

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use rayon::prelude::*;
use thiserror::Error;

use crate::ensemble::{realize, EnsembleError, EnsembleSpec, FactorSpec, SeedPolicy};
use crate::linalg::max_abs;
use crate::singlering::{AnalyticModel, CustomS, SingleRingError};
use crate::spectral::{eig_full, overlaps_diagonal, OverlapRecord, SpectralError};
use crate::stats::{compare, CompareOptions, EdgeWindow, ProfileEstimates, RadialGrid, RadialProfile, StatsError};

/// Total draws (accepted + rejected) may not exceed this multiple of `M`.
pub const REJECTION_CAP_FACTOR: u64 = 3;

/// Samples per work unit. Fixed, so the reduction order (and therefore every
/// floating-point sum) does not depend on the worker count.
const CHUNK: u64 = 8;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("rejection cap exceeded: {draws} draws for {accepted} accepted samples (cap {cap})")]
    RejectionCapExceeded { draws: u64, accepted: u64, cap: u64 },
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Model(#[from] SingleRingError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed profile: {0}")]
    Profile(String),
}

/// Per-sample sink for overlap records. Partial tallies from different work
/// units are combined with [`Tally::absorb`] in sample order.
pub trait Tally: Send {
    fn record(&mut self, sample: u64, records: &[OverlapRecord]);
    fn absorb(&mut self, other: Self);
}

impl Tally for RadialProfile {
    fn record(&mut self, _sample: u64, records: &[OverlapRecord]) {
        self.accumulate(records).expect("sample dimension matches the profile");
    }

    fn absorb(&mut self, other: Self) {
        self.merge(&other).expect("profiles share a grid");
    }
}

impl Tally for EdgeWindow {
    fn record(&mut self, _sample: u64, records: &[OverlapRecord]) {
        self.accumulate(records);
    }

    fn absorb(&mut self, other: Self) {
        self.merge(&other);
    }
}

/// Raw records of every accepted sample, in sample order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleDump(pub Vec<(u64, Vec<OverlapRecord>)>);

impl Tally for SampleDump {
    fn record(&mut self, sample: u64, records: &[OverlapRecord]) {
        self.0.push((sample, records.to_vec()));
    }

    fn absorb(&mut self, mut other: Self) {
        self.0.append(&mut other.0);
    }
}

impl<A: Tally, B: Tally> Tally for (A, B) {
    fn record(&mut self, sample: u64, records: &[OverlapRecord]) {
        self.0.record(sample, records);
        self.1.record(sample, records);
    }

    fn absorb(&mut self, other: Self) {
        self.0.absorb(other.0);
        self.1.absorb(other.1);
    }
}

impl<A: Tally> Tally for Option<A> {
    fn record(&mut self, sample: u64, records: &[OverlapRecord]) {
        if let Some(a) = self {
            a.record(sample, records);
        }
    }

    fn absorb(&mut self, other: Self) {
        if let (Some(a), Some(b)) = (self, other) {
            a.absorb(b);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
}

/// Data-quality counters for one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunDiagnostics {
    pub accepted: u64,
    pub draws: u64,
    pub singular_factors: u64,
    pub ill_conditioned: u64,
    pub max_biorthogonality_defect: f64,
    pub max_normalization_defect: f64,
    /// `max ‖XR − RΛ‖_max / ‖X‖_max` over accepted samples.
    pub max_relative_residual: f64,
    pub min_overlap: f64,
}

impl RunDiagnostics {
    fn empty() -> Self {
        Self {
            accepted: 0,
            draws: 0,
            singular_factors: 0,
            ill_conditioned: 0,
            max_biorthogonality_defect: 0.0,
            max_normalization_defect: 0.0,
            max_relative_residual: 0.0,
            min_overlap: f64::INFINITY,
        }
    }

    pub fn rejected(&self) -> u64 {
        self.singular_factors + self.ill_conditioned
    }

    fn absorb(&mut self, o: &RunDiagnostics) {
        self.accepted += o.accepted;
        self.draws += o.draws;
        self.singular_factors += o.singular_factors;
        self.ill_conditioned += o.ill_conditioned;
        self.max_biorthogonality_defect = self.max_biorthogonality_defect.max(o.max_biorthogonality_defect);
        self.max_normalization_defect = self.max_normalization_defect.max(o.max_normalization_defect);
        self.max_relative_residual = self.max_relative_residual.max(o.max_relative_residual);
        self.min_overlap = self.min_overlap.min(o.min_overlap);
    }
}

/// Draw `opts.samples` accepted matrices from `spec` and feed their overlaps
/// to a tally.
///
/// Sample `s` uses the streams `(seed, s, attempt)`; a rejected draw (singular
/// inverse factor or ill-conditioned eigenbasis) is redrawn with the next
/// attempt index. The result is a pure function of `(spec, samples, seed)`.
pub fn monte_carlo<T, F>(spec: &EnsembleSpec, opts: RunOptions, make: F) -> Result<(T, RunDiagnostics), ExperimentError>
where
    T: Tally,
    F: Fn() -> T + Sync,
{
    // eigensolves run one per worker; nested parallelism would only contend
    faer::set_global_parallelism(faer::Par::Seq);
    let policy = SeedPolicy::new(opts.seed);
    let cap = REJECTION_CAP_FACTOR * opts.samples;
    let draws = AtomicU64::new(0);
    let exhausted = AtomicBool::new(false);
    let chunks = opts.samples.div_ceil(CHUNK);

    let run_chunk = |c: u64| -> Option<(T, RunDiagnostics)> {
        let mut tally = make();
        let mut diag = RunDiagnostics::empty();
        for sample in c * CHUNK..((c + 1) * CHUNK).min(opts.samples) {
            let mut attempt = 0u32;
            loop {
                if exhausted.load(Ordering::Relaxed) || draws.fetch_add(1, Ordering::Relaxed) >= cap {
                    exhausted.store(true, Ordering::Relaxed);
                    return None;
                }
                diag.draws += 1;
                let stream = policy.stream(sample, attempt);
                attempt += 1;
                let x = match realize(spec, &stream) {
                    Ok(x) => x,
                    Err(EnsembleError::SingularFactor { .. }) => {
                        diag.singular_factors += 1;
                        continue;
                    }
                    Err(e) => panic!("validated spec failed to realize: {e}"),
                };
                let es = match eig_full(x.as_ref()) {
                    Ok(es) => es,
                    Err(SpectralError::IllConditionedSimilarity { .. } | SpectralError::NoConvergence) => {
                        diag.ill_conditioned += 1;
                        continue;
                    }
                    Err(e) => panic!("eigendecomposition of a square matrix failed: {e}"),
                };
                let records = overlaps_diagonal(&es);
                diag.accepted += 1;
                diag.max_biorthogonality_defect = diag.max_biorthogonality_defect.max(es.biorthogonality_defect);
                diag.max_normalization_defect = diag.max_normalization_defect.max(es.normalization_defect);
                diag.max_relative_residual = diag.max_relative_residual.max(es.residual / max_abs(x.as_ref()));
                diag.min_overlap = records.iter().map(|r| r.overlap).fold(diag.min_overlap, f64::min);
                tally.record(sample, &records);
                break;
            }
        }
        Some((tally, diag))
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| ExperimentError::ConfigInvalid(format!("cannot start worker pool: {e}")))?;
    let parts: Vec<Option<(T, RunDiagnostics)>> = pool.install(|| (0..chunks).into_par_iter().map(run_chunk).collect());

    let mut tally = make();
    let mut diag = RunDiagnostics::empty();
    for part in parts {
        match part {
            Some((t, d)) => {
                tally.absorb(t);
                diag.absorb(&d);
            }
            None => {
                return Err(ExperimentError::RejectionCapExceeded {
                    draws: draws.load(Ordering::Relaxed).min(cap),
                    accepted: diag.accepted,
                    cap,
                })
            }
        }
    }
    Ok((tally, diag))
}

/// Analytic model for a config: explicit, or inferred from the ensemble.
pub fn resolve_model(model: &ModelConfig, spec: Option<&EnsembleSpec>) -> Result<AnalyticModel, ExperimentError> {
    let resolved = match *model {
        ModelConfig::GinibreProduct { n } => AnalyticModel::GinibreProduct { n },
        ModelConfig::TruncatedHaarProduct { n, kappa } => AnalyticModel::TruncatedHaarProduct { n, kappa },
        ModelConfig::SphericalProduct { k } => AnalyticModel::SphericalProduct { k },
        ModelConfig::HaarSum { k } => AnalyticModel::HaarSum { k },
        ModelConfig::FreeProduct => {
            let spec = spec.ok_or_else(|| invalid("model `free_product` needs an [ensemble] section"))?;
            if spec.combine() != crate::ensemble::Combine::Product {
                return Err(invalid("model `free_product` applies to product ensembles only"));
            }
            AnalyticModel::Custom(CustomS::free_product(spec.factors()))
        }
        ModelConfig::Auto => auto_model(spec.ok_or_else(|| invalid("model `auto` needs an [ensemble] section"))?)?,
    };
    resolved.validate()?;
    Ok(resolved)
}

fn invalid(msg: &str) -> ExperimentError {
    ExperimentError::ConfigInvalid(msg.to_string())
}

/// Recognizes the four built-in families. Factor order does not matter: the
/// radial law of a free product is symmetric in its factors.
fn auto_model(spec: &EnsembleSpec) -> Result<AnalyticModel, ExperimentError> {
    let factors = spec.factors();
    let count = |want: fn(&FactorSpec) -> bool| factors.iter().filter(|f| want(f)).count() as u32;
    let total = factors.len() as u32;
    let haar = count(|f| matches!(f, FactorSpec::HaarUnitary));
    if spec.combine() == crate::ensemble::Combine::Sum {
        return Ok(AnalyticModel::HaarSum { k: total });
    }
    let ginibre = count(|f| matches!(f, FactorSpec::Ginibre));
    let inverse = count(|f| matches!(f, FactorSpec::InverseGinibre));
    if haar == total {
        // a product of Haar unitaries is Haar
        return Ok(AnalyticModel::HaarSum { k: 1 });
    }
    if ginibre == total {
        return Ok(AnalyticModel::GinibreProduct { n: total });
    }
    if inverse > 0 && ginibre == inverse && ginibre + inverse == total {
        return Ok(AnalyticModel::SphericalProduct { k: ginibre });
    }
    if let FactorSpec::TruncatedHaar { kappa } = factors[0] {
        if factors.iter().all(|f| *f == FactorSpec::TruncatedHaar { kappa }) {
            return Ok(AnalyticModel::TruncatedHaarProduct { n: total, kappa });
        }
    }
    Err(invalid(
        "ensemble is not one of the built-in families; set model.kind = \"free_product\" or an explicit model",
    ))
}

/// Radial grid from the config, falling back to the model's support.
pub fn resolve_grid(grid: &GridConfig, model: &AnalyticModel) -> Result<RadialGrid, ExperimentError> {
    if grid.bins == 0 {
        return Err(invalid("grid.bins must be positive"));
    }
    let g = match (grid.lo, grid.hi) {
        (None, None) if grid.spacing.is_none() => RadialGrid::for_support(model.support(), grid.bins)?,
        (lo, hi) => {
            let support = model.support();
            let spacing = grid.spacing.unwrap_or(if support.is_bounded() { Spacing::Uniform } else { Spacing::Log });
            match spacing {
                Spacing::Uniform => {
                    let lo = lo.unwrap_or((support.r_min - 0.1).max(0.0));
                    let hi = hi.unwrap_or(if support.is_bounded() { support.r_max + 0.1 } else { 1e2 });
                    RadialGrid::uniform(lo, hi, grid.bins)?
                }
                Spacing::Log => RadialGrid::log_spaced(lo.unwrap_or(1e-2), hi.unwrap_or(1e2), grid.bins)?,
            }
        }
    };
    Ok(g)
}

/// Everything produced by one `sample` run.
#[derive(Debug, Clone)]
pub struct SampleRun {
    pub spec: EnsembleSpec,
    pub model: AnalyticModel,
    pub profile: RadialProfile,
    pub diagnostics: RunDiagnostics,
    pub dump: Option<SampleDump>,
}

pub fn run_sample(cfg: &ExperimentConfig) -> Result<SampleRun, ExperimentError> {
    let spec = cfg.ensemble_spec()?;
    let model = resolve_model(&cfg.model, Some(&spec))?;
    let grid = resolve_grid(&cfg.grid, &model)?;
    if cfg.samples == 0 {
        return Err(invalid("samples must be positive"));
    }
    let opts = RunOptions { samples: cfg.samples, seed: cfg.seed, workers: cfg.worker_count() };
    let n = spec.dimension();
    let dump = cfg.dump_samples;
    let ((mut profile, dump), diagnostics) = monte_carlo(&spec, opts, || {
        (RadialProfile::new(grid.clone(), n), dump.then(SampleDump::default))
    })?;
    profile.record_rejections(diagnostics.rejected());
    Ok(SampleRun { spec, model, profile, diagnostics, dump })
}

/// Rows of `r, F, ρ, O, c` at the grid edges.
pub fn run_predict(model: &AnalyticModel, grid: &RadialGrid) -> Vec<PredictRow> {
    grid.edges()
        .iter()
        .map(|&r| PredictRow {
            r,
            cdf: model.radial_cdf(r),
            rho: model.radial_density(r),
            overlap: model.overlap_correlator(r),
            c: model.conditional_kappa2(r).unwrap_or(f64::NAN),
        })
        .collect()
}

/// Compare a finalized profile with `model` and judge it against the
/// configured thresholds.
pub fn run_compare(
    profile: &ProfileEstimates,
    model: &AnalyticModel,
    cfg: &CompareConfig,
) -> Result<CompareOutcome, ExperimentError> {
    let opts = CompareOptions {
        c_edge: cfg.c_edge,
        bulk_lo: cfg.bulk_lo,
        bulk_hi: cfg.bulk_hi,
        min_count: cfg.min_count,
    };
    let report = compare(profile, model, &opts)?;
    let mut failures = Vec::new();
    let mut check = |name: &str, value: f64, limit: Option<f64>| {
        if let Some(limit) = limit {
            if !(value <= limit) {
                failures.push(format!("{name} = {value:.6} exceeds {limit}"));
            }
        }
    };
    check("bulk_sup_err_O", report.bulk_sup_err_o, cfg.max_sup_err_o);
    check("bulk_sup_err_rho", report.bulk_sup_err_rho, cfg.max_sup_err_rho);
    check("bulk_sup_rel_err_c", report.bulk_sup_rel_err_c, cfg.max_rel_err_c);
    let summary = Summary::new(profile, &report, cfg, failures);
    Ok(CompareOutcome { report, summary })
}
