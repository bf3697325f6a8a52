//! Parallel Monte Carlo runs and their comparison with theory.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Model};
use crate::ensemble::{build_rmte, eigenphases, trace_powers, EnsembleParams, TraceSequence};
use crate::error::{Result, SffError};
use crate::estimator::{rescale, MomentAccumulator, RescaledCurve, SffCurve};
use crate::random::{PhaseDistribution, RngStream};
use crate::rotor::{build_coupled_rotors, RotorParams};
use crate::theory::{ehrenfest_time, tau_sh, thouless_time_chi, CouplingModel, TheoryCurve};

/// Scales derived from the configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedScales {
    /// Effective coupling of the random-matrix model.
    pub epsilon: f64,
    pub chi: f64,
    pub gamma: f64,
    pub tau_sh: f64,
    /// `None` when `chi` is 0 or 1.
    pub t_th: Option<f64>,
    pub tau_th: Option<f64>,
    /// Rotors only.
    pub t_e: Option<f64>,
}

/// Everything produced by one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultBundle {
    pub config: ExperimentConfig,
    /// Unsmoothed moments.
    pub raw: SffCurve,
    /// Moments smoothed per realization, with exact standard errors.
    pub smoothed: SffCurve,
    /// `smoothed` in Heisenberg units.
    pub rescaled: RescaledCurve,
    /// Smoothed like the data.
    pub theory_exact: TheoryCurve,
    pub theory_perturbative: Option<TheoryCurve>,
    pub scales: DerivedScales,
    pub library_version: String,
}

/// The random-matrix model whose predictions apply to `cfg`.
pub fn coupling_model(cfg: &ExperimentConfig) -> CouplingModel {
    match cfg.model {
        Model::Rmte => CouplingModel {
            n: cfg.n,
            l: cfg.l,
            epsilon: cfg.epsilon.unwrap_or(0.0),
            dist: cfg.dist,
        },
        Model::Rotors => CouplingModel {
            n: cfg.n,
            l: 2,
            epsilon: rotor_template(cfg).epsilon(),
            dist: PhaseDistribution::CosineOfUniform,
        },
    }
}

fn rotor_template(cfg: &ExperimentConfig) -> RotorParams {
    RotorParams {
        k1: cfg.k1,
        k2: cfg.k2,
        ..RotorParams::new(cfg.n, cfg.gamma.unwrap_or(0.0))
    }
}

pub fn derived_scales(cfg: &ExperimentConfig) -> DerivedScales {
    let model = coupling_model(cfg);
    let chi = model.chi();
    let th = thouless_time_chi(model.n, model.l, chi).ok();
    DerivedScales {
        epsilon: model.epsilon,
        chi,
        gamma: model.gamma(),
        tau_sh: tau_sh(model.n, model.l),
        t_th: th.map(|t| t.t),
        tau_th: th.map(|t| t.tau),
        t_e: match cfg.model {
            Model::Rotors => ehrenfest_time(cfg.n, cfg.k1, cfg.k2).ok(),
            Model::Rmte => None,
        },
    }
}

/// Traces `tr U^t`, `t = 1..=tmax`, for realization `index`.
pub fn realization_traces(cfg: &ExperimentConfig, index: u64) -> Result<TraceSequence> {
    let mut rng = RngStream::new(cfg.master_seed, index);
    let u = match cfg.model {
        Model::Rmte => {
            let params = EnsembleParams::new(cfg.n, cfg.l, cfg.epsilon.unwrap_or(0.0), cfg.dist)?;
            build_rmte(&params, &mut rng)?
        }
        Model::Rotors => build_coupled_rotors(&rotor_template(cfg).with_random_boundary(&mut rng))?,
    };
    let numeric = |reason: String| SffError::Numeric {
        realization: index,
        seed: cfg.master_seed,
        reason,
    };
    let spec = eigenphases(&u).map_err(|e| numeric(e.to_string()))?;
    if spec.phases().iter().any(|p| !p.is_finite()) {
        return Err(numeric("non-finite eigenphase".into()));
    }
    trace_powers(&spec, cfg.tmax)
}

#[derive(Clone)]
struct Partial {
    raw: MomentAccumulator,
    smoothed: Option<MomentAccumulator>,
}

impl Partial {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let raw = MomentAccumulator::new(cfg.tmax, &cfg.moments)?;
        let smoothed = (!cfg.smoothing.is_identity()).then(|| raw.clone());
        Ok(Self { raw, smoothed })
    }

    fn add(mut self, cfg: &ExperimentConfig, index: u64) -> Result<Self> {
        let traces = realization_traces(cfg, index)?;
        self.raw.accumulate(&traces)?;
        if let Some(s) = self.smoothed.as_mut() {
            s.accumulate_smoothed(&traces, &cfg.smoothing)?;
        }
        Ok(self)
    }

    fn merge(mut self, other: Self) -> Result<Self> {
        self.raw.merge(&other.raw)?;
        if let (Some(a), Some(b)) = (self.smoothed.as_mut(), other.smoothed.as_ref()) {
            a.merge(b)?;
        }
        Ok(self)
    }
}

/// Runs `cfg.realizations` independent realizations on `cfg.workers`
/// threads. Realization `i` draws from stream `i` of the master seed and the
/// accumulators merge exactly, so the result does not depend on the number
/// of workers or on scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultBundle> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| SffError::Config(format!("cannot start worker pool: {e}")))?;
    let empty = Partial::new(cfg)?;
    let total = pool.install(|| {
        (0..cfg.realizations)
            .into_par_iter()
            .try_fold(|| empty.clone(), |acc, i| acc.add(cfg, i))
            .try_reduce(|| empty.clone(), Partial::merge)
    })?;
    let raw = total.raw.finalize()?;
    let smoothed = match &total.smoothed {
        Some(s) => s.finalize()?,
        None => raw.clone(),
    };
    Ok(assemble(cfg, raw, smoothed))
}

fn assemble(cfg: &ExperimentConfig, raw: SffCurve, smoothed: SffCurve) -> ResultBundle {
    let model = coupling_model(cfg);
    let orders = raw.orders.clone();
    let rescaled = rescale(&smoothed, cfg.n, cfg.l);
    let theory_exact = TheoryCurve::exact(&model, cfg.tmax, &orders, &cfg.smoothing);
    let theory_perturbative = cfg
        .perturbative
        .then(|| TheoryCurve::perturbative(&model, cfg.tmax, &orders, &cfg.smoothing));
    ResultBundle {
        config: cfg.clone(),
        raw,
        smoothed,
        rescaled,
        theory_exact,
        theory_perturbative,
        scales: derived_scales(cfg),
        library_version: env!("CARGO_PKG_VERSION").to_string(),
    }
}
