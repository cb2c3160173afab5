//! Synthetic fixed-effects logit panels and existence-failure frequencies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::detector::{detect_panel_separation, detect_pooled_separation, DetectOptions};
use crate::error::{Error, Result};
use crate::panel::{IndividualSlice, PanelDataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub periods: usize,
    pub dim: usize,
    pub beta0: Vec<f64>,
    /// Standard deviation of the individual effects.
    pub effect_scale: f64,
    pub replications: usize,
    pub seed: u64,
}

impl SimConfig {
    /// A `p`-dimensional config with every true coefficient equal to `beta`.
    pub fn new(n: usize, periods: usize, dim: usize, beta: f64) -> Self {
        SimConfig {
            n,
            periods,
            dim,
            beta0: vec![beta; dim],
            effect_scale: 1.0,
            replications: 1,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.periods == 0 || self.dim == 0 {
            return Err(Error::contract("n, T and p must all be at least 1"));
        }
        if self.replications == 0 {
            return Err(Error::contract("replications must be at least 1"));
        }
        if self.beta0.len() != self.dim {
            return Err(Error::contract(format!(
                "beta0 has {} entries, expected p = {}",
                self.beta0.len(),
                self.dim
            )));
        }
        if !self.effect_scale.is_finite() || self.effect_scale < 0.0 {
            return Err(Error::contract("effect scale must be a finite nonnegative number"));
        }
        if self.beta0.iter().any(|b| !b.is_finite()) {
            return Err(Error::contract("beta0 must be finite"));
        }
        Ok(())
    }
}

/// Replication `rep` reads its own ChaCha stream, so replications are
/// independent of each other and of evaluation order.
fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// `y_it = 1{x_it'β0 + α_i + ε_it > 0}` with standard normal covariates,
/// `α_i ~ N(0, effect_scale²)` and standard logistic `ε_it`.
pub fn generate_panel(config: &SimConfig, rep: u64) -> Result<PanelDataset> {
    config.validate()?;
    let mut rng = replication_rng(config.seed, rep);
    let individuals = (0..config.n)
        .map(|i| {
            let z: f64 = StandardNormal.sample(&mut rng);
            let alpha = config.effect_scale * z;
            let mut xs = Vec::with_capacity(config.periods);
            let mut ys = Vec::with_capacity(config.periods);
            for _ in 0..config.periods {
                let x: Vec<f64> = (0..config.dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                let index: f64 = x.iter().zip(&config.beta0).map(|(a, b)| a * b).sum::<f64>() + alpha;
                ys.push(u8::from(index + standard_logistic(&mut rng) > 0.0));
                xs.push(x);
            }
            IndividualSlice::new(i as i64 + 1, xs, ys)
        })
        .collect::<Result<Vec<_>>>()?;
    PanelDataset::from_individuals(individuals)
}

fn standard_logistic(rng: &mut impl Rng) -> f64 {
    // inverse CDF on the open unit interval
    let u: f64 = loop {
        let u = rng.random::<f64>();
        if u > 0.0 {
            break u;
        }
    };
    (u / (1.0 - u)).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub rep: u64,
    /// A finite unique conditional MLE exists.
    pub panel_exists: bool,
    /// A finite pooled logit MLE exists.
    pub pooled_exists: bool,
    /// `None` when the panel had no informative individual.
    pub panel_qp_min: Option<f64>,
    pub pooled_qp_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyReport {
    pub config: SimConfig,
    pub panel_existence: f64,
    pub pooled_existence: f64,
    pub mean_panel_qp_min: Option<f64>,
    pub mean_pooled_qp_min: f64,
    pub replications: Vec<Replication>,
}

/// Runs both detectors on each replication and tallies how often the
/// estimate exists. Replications without informative individuals count as
/// non-existence for the conditional estimator.
pub fn existence_rate(config: &SimConfig, opts: &DetectOptions) -> Result<FrequencyReport> {
    config.validate()?;
    let mut reps = Vec::with_capacity(config.replications);
    for rep in 0..config.replications as u64 {
        let data = generate_panel(config, rep)?;
        let (panel_exists, panel_qp_min) = match detect_panel_separation(&data, opts) {
            Ok(r) => (r.exists(), Some(r.qp_min)),
            Err(Error::NoInformative) => (false, None),
            Err(e) => return Err(e),
        };
        let pooled = detect_pooled_separation(&data, opts)?;
        reps.push(Replication {
            rep,
            panel_exists,
            pooled_exists: pooled.exists(),
            panel_qp_min,
            pooled_qp_min: pooled.qp_min,
        });
    }
    let count = reps.len() as f64;
    let frac = |f: fn(&Replication) -> bool| reps.iter().filter(|r| f(r)).count() as f64 / count;
    let panel_mins: Vec<f64> = reps.iter().filter_map(|r| r.panel_qp_min).collect();
    Ok(FrequencyReport {
        config: config.clone(),
        panel_existence: frac(|r| r.panel_exists),
        pooled_existence: frac(|r| r.pooled_exists),
        mean_panel_qp_min: (!panel_mins.is_empty())
            .then(|| panel_mins.iter().sum::<f64>() / panel_mins.len() as f64),
        mean_pooled_qp_min: reps.iter().map(|r| r.pooled_qp_min).sum::<f64>() / count,
        replications: reps,
    })
}
