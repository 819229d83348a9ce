//! Experiment configuration: scenarios, algorithm names, and the JSON
//! config file format consumed by `gen` and `bench`.

use serde::{Deserialize, Serialize};

use hardshrink::{Error, Result};

/// Which quantity the sweep varies. The grid list is interpreted per
/// scenario (noise levels, dimensions, sparsity levels, oversampling
/// factors, projection sizes, sample sizes).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    NoiseSweep,
    DimensionSweep,
    SparsitySweep,
    OversamplingSweep,
    ConditionSweep,
    SampleSizeSweep,
    MatrixRecovery,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::NoiseSweep => "noise_sweep",
            Scenario::DimensionSweep => "dimension_sweep",
            Scenario::SparsitySweep => "sparsity_sweep",
            Scenario::OversamplingSweep => "oversampling_sweep",
            Scenario::ConditionSweep => "condition_sweep",
            Scenario::SampleSizeSweep => "sample_size_sweep",
            Scenario::MatrixRecovery => "matrix_recovery",
        }
    }

    /// Name of the grid parameter in emitted rows.
    pub fn grid_param(&self) -> &'static str {
        match self {
            Scenario::NoiseSweep | Scenario::MatrixRecovery => "sigma",
            Scenario::DimensionSweep => "p",
            Scenario::SparsitySweep => "s_star",
            Scenario::OversamplingSweep => "f_o",
            Scenario::ConditionSweep => "s",
            Scenario::SampleSizeSweep => "n",
        }
    }
}

/// A named solver preset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Algorithm {
    Iht,
    Htp,
    Grades,
    Cosamp,
    Sp,
    Ompr,
    Pht { level: usize },
    IstaLasso,
    Foba,
}

impl Algorithm {
    pub fn parse(name: &str) -> Result<Self> {
        let trimmed = name.trim();
        Ok(match trimmed {
            "iht" => Algorithm::Iht,
            "htp" => Algorithm::Htp,
            "grades" => Algorithm::Grades,
            "cosamp" => Algorithm::Cosamp,
            "sp" => Algorithm::Sp,
            "ompr" => Algorithm::Ompr,
            "ista_lasso" => Algorithm::IstaLasso,
            "foba" => Algorithm::Foba,
            other => {
                if let Some(inner) = other.strip_prefix("pht(").and_then(|s| s.strip_suffix(')')) {
                    let level: usize = inner.trim().parse().map_err(|_| {
                        Error::invalid_argument(format!("bad pht level in algorithm name {other:?}"))
                    })?;
                    if level == 0 {
                        return Err(Error::invalid_argument("pht level must be ≥ 1"));
                    }
                    Algorithm::Pht { level }
                } else {
                    return Err(Error::invalid_argument(format!(
                        "unknown algorithm {other:?}"
                    )));
                }
            }
        })
    }

    pub fn name(&self) -> String {
        match self {
            Algorithm::Iht => "iht".into(),
            Algorithm::Htp => "htp".into(),
            Algorithm::Grades => "grades".into(),
            Algorithm::Cosamp => "cosamp".into(),
            Algorithm::Sp => "sp".into(),
            Algorithm::Ompr => "ompr".into(),
            Algorithm::Pht { level } => format!("pht({level})"),
            Algorithm::IstaLasso => "ista_lasso".into(),
            Algorithm::Foba => "foba".into(),
        }
    }
}

impl TryFrom<String> for Algorithm {
    type Error = Error;
    fn try_from(value: String) -> Result<Self> {
        Algorithm::parse(&value)
    }
}

impl From<Algorithm> for String {
    fn from(a: Algorithm) -> String {
        a.name()
    }
}

/// Problem-scale defaults a sweep starts from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseConfig {
    pub p: usize,
    pub s_star: usize,
    pub sigma: f64,
    pub f_o: f64,
    pub kappa_target: f64,
}

impl Default for BaseConfig {
    fn default() -> Self {
        BaseConfig {
            p: 2000,
            s_star: 20,
            sigma: 0.1,
            f_o: 2.0,
            kappa_target: 50.0,
        }
    }
}

fn default_max_iters() -> usize {
    1000
}

/// One sweep: a scenario, the grid values it varies over, the algorithms
/// to run, and how many independent trials per grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub algorithms: Vec<Algorithm>,
    pub grid: Vec<f64>,
    pub trials_per_cell: usize,
    #[serde(default)]
    pub base: BaseConfig,
    pub seed: u64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| Error::invalid_argument(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::invalid_argument("config: empty grid"));
        }
        if self.grid.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
            return Err(Error::invalid_argument(
                "config: grid values must be finite and non-negative",
            ));
        }
        let integer_grid = matches!(
            self.scenario,
            Scenario::DimensionSweep
                | Scenario::SparsitySweep
                | Scenario::ConditionSweep
                | Scenario::SampleSizeSweep
        );
        if integer_grid
            && self
                .grid
                .iter()
                .any(|&v| v <= 0.0 || v.fract() != 0.0 || v > usize::MAX as f64)
        {
            return Err(Error::invalid_argument(format!(
                "config: {} grid values must be positive integers",
                self.scenario.grid_param()
            )));
        }
        if self.trials_per_cell == 0 {
            return Err(Error::invalid_argument("config: trials_per_cell must be ≥ 1"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::invalid_argument("config: no algorithms listed"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid_argument("config: max_iters must be ≥ 1"));
        }
        if self.scenario == Scenario::MatrixRecovery
            && self.algorithms.iter().any(|a| *a != Algorithm::Iht)
        {
            return Err(Error::invalid_argument(
                "config: matrix_recovery supports only the iht algorithm",
            ));
        }
        if self.base.p == 0 || self.base.s_star == 0 {
            return Err(Error::invalid_argument("config: base.p and base.s_star must be ≥ 1"));
        }
        let sane = self.base.sigma >= 0.0 && self.base.f_o > 0.0 && self.base.kappa_target > 1.0;
        if !sane {
            return Err(Error::invalid_argument(
                "config: base requires sigma ≥ 0, f_o > 0, kappa_target > 1",
            ));
        }
        Ok(())
    }
}
