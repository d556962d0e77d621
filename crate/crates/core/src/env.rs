//! Seeded synthetic data generators: regression streams and stationary or
//! drifting linear-bandit worlds.
//!
//! Reproducibility contract: every replicate owns a ChaCha8 keystream
//! derived from its seed, and round `t` draws from stream `t`, so rounds
//! are randomly accessible — `round(t)` is a pure function of
//! `(spec, seed, t)` — and produce identical bytes on every platform.
//! Stream 0 is reserved for materializing the replicate's fixed randomness:
//! first the target parameter, then any fixed arm set. Draw order inside a
//! round is part of the contract: features (or arms) first, then the noise
//! increment.
//!
//! Replicate seeds come from [`derive_replicate_seed`], an injective mix of
//! the master seed and the replicate index, so replicates are mutually
//! independent and insensitive to how work is scheduled across threads.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Feature distribution of a regression stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureDist {
    /// Entries i.i.d. uniform on `[0, 1)`; norms at most `sqrt(d)`.
    UnitCube,
    /// Uniform in the Euclidean unit ball.
    UnitBall,
    /// Explicit vectors replayed in order, cycling past the end.
    FixedList(Vec<Vec<f64>>),
}

/// How the true parameter is chosen at replicate start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaSpec {
    /// Drawn uniformly in the unit ball, fresh per replicate.
    UnitBall,
    /// An explicit vector shared by all replicates.
    Fixed(Vec<f64>),
}

/// How a bandit round's action set is produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmGeneration {
    /// `count` arms drawn once per replicate, uniform in the radius-
    /// `max_norm` ball, then reused every round.
    FixedBall { count: usize },
    /// Explicit arms reused every round.
    FixedSet(Vec<Vec<f64>>),
    /// `count` arms redrawn each round, uniform on the radius-`max_norm`
    /// sphere.
    ResampledSphere { count: usize },
}

/// Trajectory of the bandit's true parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaPath {
    /// Stationary target.
    Constant(ThetaSpec),
    /// Planar piecewise-constant target with three jumps:
    /// `(1,0)` for `t < 1000`, `(-1,0)` for `1000 <= t <= 2000`,
    /// `(0,1)` for `2000 < t <= 3000`, `(0,-1)` afterwards. (The segment
    /// boundaries leave `t = 3000` to a convention; it extends the third
    /// segment here.)
    Abrupt,
    /// Planar target rotating counter-clockwise from `(1,0)` at `t = 0` to
    /// `(0,1)` at `t = 3000` in equal angular steps, constant afterwards.
    SlowRotation,
}

/// Stochastic linear regression stream `y = x^T theta_star + sigma eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionEnvSpec {
    pub dim: usize,
    pub horizon: u64,
    /// Gaussian noise scale (standard deviation).
    pub sigma: f64,
    pub feature_dist: FeatureDist,
    pub theta_star: ThetaSpec,
}

/// Linear bandit world: per-round action sets, a (possibly drifting) true
/// parameter, and Gaussian reward noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditEnvSpec {
    pub dim: usize,
    pub horizon: u64,
    /// Gaussian noise scale (standard deviation).
    pub sigma: f64,
    /// Cap on action norms; generated arms respect it by construction and
    /// explicit arms are validated against it.
    pub max_norm: f64,
    pub arms: ArmGeneration,
    pub theta_path: ThetaPath,
}

fn check_common(dim: usize, horizon: u64, sigma: f64) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidSize {
            name: "dim",
            value: 0,
            requirement: "must be at least 1",
        });
    }
    if horizon == 0 {
        return Err(Error::InvalidSize {
            name: "horizon",
            value: 0,
            requirement: "must be at least 1",
        });
    }
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::bad_param("sigma", sigma, "finite and >= 0"));
    }
    Ok(())
}

fn check_vectors(list: &[Vec<f64>], dim: usize, what: &'static str) -> Result<()> {
    if list.is_empty() {
        return Err(Error::Empty { what });
    }
    for v in list {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
        if let Some(bad) = v.iter().find(|c| !c.is_finite()) {
            return Err(Error::bad_param("vector entry", *bad, "finite"));
        }
    }
    Ok(())
}

fn check_theta(theta: &ThetaSpec, dim: usize) -> Result<()> {
    if let ThetaSpec::Fixed(v) = theta {
        check_vectors(std::slice::from_ref(v), dim, "theta_star")?;
    }
    Ok(())
}

impl RegressionEnvSpec {
    pub fn validate(&self) -> Result<()> {
        check_common(self.dim, self.horizon, self.sigma)?;
        if let FeatureDist::FixedList(list) = &self.feature_dist {
            check_vectors(list, self.dim, "feature list")?;
        }
        check_theta(&self.theta_star, self.dim)
    }

    /// A-priori bound on the feature norms the stream can produce.
    pub fn x_bound(&self) -> f64 {
        match &self.feature_dist {
            FeatureDist::UnitCube => (self.dim as f64).sqrt(),
            FeatureDist::UnitBall => 1.0,
            FeatureDist::FixedList(list) => list
                .iter()
                .map(|v| DVector::from_column_slice(v).norm())
                .fold(0.0, f64::max),
        }
    }
}

impl BanditEnvSpec {
    pub fn validate(&self) -> Result<()> {
        check_common(self.dim, self.horizon, self.sigma)?;
        if !self.max_norm.is_finite() || self.max_norm <= 0.0 {
            return Err(Error::bad_param(
                "max_norm",
                self.max_norm,
                "finite and > 0",
            ));
        }
        match &self.arms {
            ArmGeneration::FixedBall { count } | ArmGeneration::ResampledSphere { count } => {
                if *count == 0 {
                    return Err(Error::InvalidSize {
                        name: "arm count",
                        value: 0,
                        requirement: "must be at least 1",
                    });
                }
            }
            ArmGeneration::FixedSet(list) => {
                check_vectors(list, self.dim, "arm set")?;
                for v in list {
                    let norm = DVector::from_column_slice(v).norm();
                    if norm > self.max_norm * (1.0 + 1e-12) {
                        return Err(Error::bad_param(
                            "arm norm",
                            norm,
                            "within the max_norm cap",
                        ));
                    }
                }
            }
        }
        match &self.theta_path {
            ThetaPath::Constant(theta) => check_theta(theta, self.dim)?,
            ThetaPath::Abrupt | ThetaPath::SlowRotation => {
                if self.dim != 2 {
                    return Err(Error::InvalidSize {
                        name: "dim",
                        value: self.dim,
                        requirement: "drift schedules are planar (dim = 2)",
                    });
                }
            }
        }
        Ok(())
    }

    /// A-priori bound on action norms.
    pub fn x_bound(&self) -> f64 {
        match &self.arms {
            ArmGeneration::FixedSet(list) => list
                .iter()
                .map(|v| DVector::from_column_slice(v).norm())
                .fold(0.0, f64::max),
            _ => self.max_norm,
        }
    }

    pub fn num_arms(&self) -> usize {
        match &self.arms {
            ArmGeneration::FixedBall { count } | ArmGeneration::ResampledSphere { count } => *count,
            ArmGeneration::FixedSet(list) => list.len(),
        }
    }
}

/// Injective 64-bit mix of a master seed and a replicate index
/// (multiplicative spread by an odd constant, then a bijective splitmix64
/// finalizer), so replicate streams never collide and are stable across
/// platforms and runs.
pub fn derive_replicate_seed(master_seed: u64, replicate_index: u64) -> u64 {
    let mut z = master_seed ^ replicate_index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn check_round(t: u64, horizon: u64) -> Result<()> {
    if t == 0 || t > horizon {
        return Err(Error::InvalidSize {
            name: "t",
            value: t as usize,
            requirement: "rounds are 1-based and bounded by the horizon",
        });
    }
    Ok(())
}

/// Uniform direction on the unit sphere (normalized Gaussian).
fn sphere_point(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        if n > 1e-12 {
            return v * (radius / n);
        }
    }
}

/// Uniform point in the radius-`radius` ball: uniform direction scaled by
/// `U^{1/d}`.
fn ball_point(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> DVector<f64> {
    let dir = sphere_point(rng, dim, 1.0);
    let r: f64 = rng.random();
    dir * (radius * r.powf(1.0 / dim as f64))
}

fn cube_point(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.random::<f64>())
}

fn materialize_theta(theta: &ThetaSpec, dim: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    match theta {
        ThetaSpec::UnitBall => ball_point(rng, dim, 1.0),
        ThetaSpec::Fixed(v) => DVector::from_column_slice(v),
    }
}

/// One step of a regression stream.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionRound {
    pub x: DVector<f64>,
    pub y: f64,
    /// The standard-normal increment behind `y` (before scaling by sigma).
    pub noise: f64,
}

/// A materialized regression stream: spec, replicate seed, and the
/// replicate's concrete target parameter.
#[derive(Debug, Clone)]
pub struct RegressionEnv {
    spec: RegressionEnvSpec,
    seed: u64,
    theta_star: DVector<f64>,
    fixed_features: Vec<DVector<f64>>,
}

impl RegressionEnv {
    pub fn new(spec: RegressionEnvSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = stream_rng(seed, 0);
        let theta_star = materialize_theta(&spec.theta_star, spec.dim, &mut rng);
        let fixed_features = match &spec.feature_dist {
            FeatureDist::FixedList(list) => {
                list.iter().map(|v| DVector::from_column_slice(v)).collect()
            }
            _ => Vec::new(),
        };
        Ok(Self {
            spec,
            seed,
            theta_star,
            fixed_features,
        })
    }

    pub fn spec(&self) -> &RegressionEnvSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn theta_star(&self) -> &DVector<f64> {
        &self.theta_star
    }

    /// Generate round `t` (1-based, at most the horizon).
    pub fn round(&self, t: u64) -> Result<RegressionRound> {
        check_round(t, self.spec.horizon)?;
        let mut rng = stream_rng(self.seed, t);
        let x = match &self.spec.feature_dist {
            FeatureDist::UnitCube => cube_point(&mut rng, self.spec.dim),
            FeatureDist::UnitBall => ball_point(&mut rng, self.spec.dim, 1.0),
            FeatureDist::FixedList(_) => {
                self.fixed_features[(t - 1) as usize % self.fixed_features.len()].clone()
            }
        };
        let noise: f64 = rng.sample(StandardNormal);
        let y = x.dot(&self.theta_star) + self.spec.sigma * noise;
        Ok(RegressionRound { x, y, noise })
    }
}

/// One bandit round: the action set on offer, the true parameter in force,
/// and the round's standard-normal reward increment (shared by all arms, so
/// the noise is independent of the agent's choice).
#[derive(Debug, Clone, PartialEq)]
pub struct BanditRound {
    pub arms: Vec<DVector<f64>>,
    pub theta: DVector<f64>,
    pub noise: f64,
}

/// A materialized bandit world.
#[derive(Debug, Clone)]
pub struct BanditEnv {
    spec: BanditEnvSpec,
    seed: u64,
    /// Target under a constant path; drift paths ignore it.
    theta_star: DVector<f64>,
    fixed_arms: Vec<DVector<f64>>,
}

impl BanditEnv {
    pub fn new(spec: BanditEnvSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = stream_rng(seed, 0);
        // Stream-0 order: target first, fixed arms second.
        let theta_star = match &spec.theta_path {
            ThetaPath::Constant(theta) => materialize_theta(theta, spec.dim, &mut rng),
            ThetaPath::Abrupt | ThetaPath::SlowRotation => drift_theta(&spec.theta_path, 0),
        };
        let fixed_arms = match &spec.arms {
            ArmGeneration::FixedBall { count } => (0..*count)
                .map(|_| ball_point(&mut rng, spec.dim, spec.max_norm))
                .collect(),
            ArmGeneration::FixedSet(list) => {
                list.iter().map(|v| DVector::from_column_slice(v)).collect()
            }
            ArmGeneration::ResampledSphere { .. } => Vec::new(),
        };
        Ok(Self {
            spec,
            seed,
            theta_star,
            fixed_arms,
        })
    }

    pub fn spec(&self) -> &BanditEnvSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// True parameter in force at round `t` (`t = 0` is the pre-run state).
    pub fn theta_at(&self, t: u64) -> DVector<f64> {
        match &self.spec.theta_path {
            ThetaPath::Constant(_) => self.theta_star.clone(),
            path => drift_theta(path, t),
        }
    }

    /// Total variation of the target over the horizon:
    /// `sum_t ||theta(t+1) - theta(t)||` for `t = 1..horizon-1`.
    pub fn path_length(&self) -> f64 {
        let mut total = 0.0;
        let mut prev = self.theta_at(1);
        for t in 2..=self.spec.horizon {
            let cur = self.theta_at(t);
            total += (&cur - &prev).norm();
            prev = cur;
        }
        total
    }

    /// Generate round `t` (1-based, at most the horizon).
    pub fn round(&self, t: u64) -> Result<BanditRound> {
        check_round(t, self.spec.horizon)?;
        let mut rng = stream_rng(self.seed, t);
        let arms = match &self.spec.arms {
            ArmGeneration::ResampledSphere { count } => (0..*count)
                .map(|_| sphere_point(&mut rng, self.spec.dim, self.spec.max_norm))
                .collect(),
            _ => self.fixed_arms.clone(),
        };
        let noise: f64 = rng.sample(StandardNormal);
        Ok(BanditRound {
            arms,
            theta: self.theta_at(t),
            noise,
        })
    }

    /// Reward of playing `round.arms[chosen]`.
    pub fn reward(&self, round: &BanditRound, chosen: usize) -> Result<f64> {
        let arm = round.arms.get(chosen).ok_or(Error::InvalidSize {
            name: "chosen",
            value: chosen,
            requirement: "must index into the arm set",
        })?;
        Ok(arm.dot(&round.theta) + self.spec.sigma * round.noise)
    }
}

fn drift_theta(path: &ThetaPath, t: u64) -> DVector<f64> {
    match path {
        ThetaPath::Abrupt => {
            let (a, b) = if t < 1000 {
                (1.0, 0.0)
            } else if t <= 2000 {
                (-1.0, 0.0)
            } else if t <= 3000 {
                (0.0, 1.0)
            } else {
                (0.0, -1.0)
            };
            DVector::from_vec(vec![a, b])
        }
        ThetaPath::SlowRotation => {
            let phi = std::f64::consts::FRAC_PI_2 * (t.min(3000) as f64) / 3000.0;
            DVector::from_vec(vec![phi.cos(), phi.sin()])
        }
        ThetaPath::Constant(_) => unreachable!("constant paths resolve at materialization"),
    }
}
