use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{Activation, InitRule, MlpOracle, MlpSpec};
use crate::objectives::{
    inject_label_noise, make_two_moons, Classifier, Dataset, GradientOracle, LogisticOracle, QuadraticOracle,
    QuadraticSpec, TwoWellOracle, TwoWellSpec,
};
use crate::optim::{LearningRate, OptimizerConfig};
use crate::rng::{stream_rng, Stream};
use crate::scheduler::ScheduleParams;
use crate::tensor::ParamVector;

/// Everything that determines a run. Two runs with equal configs produce
/// identical telemetry (apart from wall-clock time unless `logical_clock`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Master seed: data, initialisation, shuffling and sampling streams
    /// derive from it.
    pub seed: u64,
    pub iterations: u64,
    pub batch_size: usize,
    pub objective: ObjectiveConfig,
    pub optimizer: OptimizerConfig,
    pub schedule: ScheduleParams,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            iterations: 4000,
            batch_size: 64,
            objective: ObjectiveConfig::default(),
            optimizer: OptimizerConfig {
                lr: LearningRate::Constant(0.02),
                ..OptimizerConfig::default()
            },
            schedule: ScheduleParams::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveConfig {
    Mlp {
        #[serde(default)]
        data: DataConfig,
        #[serde(default = "default_hidden")]
        hidden: Vec<usize>,
        #[serde(default)]
        activation: Activation,
        #[serde(default)]
        init_scale_rule: InitRule,
    },
    Logistic {
        #[serde(default)]
        data: DataConfig,
        #[serde(default)]
        l2_lambda: f64,
    },
    Quadratic {
        spec: QuadraticSpec,
        /// Starting point; drawn from N(0, 1) when absent.
        #[serde(default)]
        init: Option<Vec<f64>>,
    },
    TwoWell {
        #[serde(default = "TwoWellSpec::reference")]
        spec: TwoWellSpec,
        init: f64,
    },
}

fn default_hidden() -> Vec<usize> {
    vec![32, 32]
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        ObjectiveConfig::Mlp {
            data: DataConfig::default(),
            hidden: default_hidden(),
            activation: Activation::Relu,
            init_scale_rule: InitRule::HeUniform,
        }
    }
}

/// Two-moons train/test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub n_train: usize,
    pub n_test: usize,
    pub noise_std: f64,
    /// Symmetric label-noise rate applied to the training split only.
    pub label_noise: f64,
    /// Defaults derive from the master seed.
    pub train_seed: Option<u64>,
    pub test_seed: Option<u64>,
    /// Load the training split from a CSV instead of generating it.
    pub train_csv: Option<PathBuf>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            n_train: 1000,
            n_test: 1000,
            noise_std: 0.2,
            label_noise: 0.0,
            train_seed: None,
            test_seed: None,
            train_csv: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub telemetry_csv: Option<PathBuf>,
    pub summary_json: Option<PathBuf>,
    /// Where the last good parameters go if a run aborts (MLP objectives).
    pub checkpoint: Option<PathBuf>,
    /// Record cumulative gradient evaluations instead of nanoseconds in the
    /// `wall_ns` column, making telemetry byte-for-byte reproducible.
    pub logical_clock: bool,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml_str(&text)?;
        // Relative output and data paths resolve against the config file.
        if let Some(dir) = path.parent() {
            let fix = |p: &mut Option<PathBuf>| {
                if let Some(p) = p {
                    if p.is_relative() {
                        *p = dir.join(&*p);
                    }
                }
            };
            fix(&mut cfg.output.telemetry_csv);
            fix(&mut cfg.output.summary_json);
            fix(&mut cfg.output.checkpoint);
            if let ObjectiveConfig::Mlp { data, .. } | ObjectiveConfig::Logistic { data, .. } = &mut cfg.objective {
                fix(&mut data.train_csv);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        self.optimizer.validate()?;
        self.schedule.validate()?;
        match &self.objective {
            ObjectiveConfig::Mlp { data, hidden, .. } => {
                data.validate(self.batch_size)?;
                if hidden.contains(&0) {
                    return Err(Error::Config("hidden widths must be positive".into()));
                }
            }
            ObjectiveConfig::Logistic { data, l2_lambda } => {
                data.validate(self.batch_size)?;
                if l2_lambda.is_nan() || *l2_lambda < 0.0 {
                    return Err(Error::Config("l2_lambda must be >= 0".into()));
                }
            }
            ObjectiveConfig::Quadratic { spec, init } => {
                if let Some(init) = init {
                    if init.len() != spec.dimension() {
                        return Err(Error::Config(format!(
                            "quadratic init has {} entries for dimension {}",
                            init.len(),
                            spec.dimension()
                        )));
                    }
                }
            }
            ObjectiveConfig::TwoWell { spec, init } => {
                spec.validate()?;
                if !init.is_finite() {
                    return Err(Error::Config("two-well init must be finite".into()));
                }
            }
        }
        Ok(())
    }
}

impl DataConfig {
    fn validate(&self, batch_size: usize) -> Result<()> {
        if self.train_csv.is_none() && batch_size > self.n_train {
            return Err(Error::Config(format!(
                "batch_size {batch_size} exceeds the {} training samples",
                self.n_train
            )));
        }
        if self.n_test == 0 {
            return Err(Error::Config("n_test must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.label_noise) {
            return Err(Error::Config(format!("label_noise {} outside [0, 1]", self.label_noise)));
        }
        Ok(())
    }

    /// `(train, clean test)`.
    fn build(&self, seed: u64) -> Result<(Dataset, Dataset)> {
        let train_seed = self.train_seed.unwrap_or(seed);
        let test_seed = self.test_seed.unwrap_or(seed.wrapping_add(0x5EED_7E57));
        let train = match &self.train_csv {
            Some(path) => Dataset::load_csv(path, 2)?,
            None => make_two_moons(self.n_train, self.noise_std, train_seed)?,
        };
        let train = if self.label_noise > 0.0 {
            inject_label_noise(&train, self.label_noise, train_seed)?
        } else {
            train
        };
        let test = make_two_moons(self.n_test, self.noise_std, test_seed)?;
        Ok((train, test))
    }
}

/// A constructed objective with its starting point and evaluation data.
pub(crate) struct Built {
    pub oracle: Arc<dyn GradientOracle>,
    pub classifier: Option<Arc<dyn Classifier + Send + Sync>>,
    pub mlp: Option<MlpSpec>,
    pub train: Option<Arc<Dataset>>,
    pub test: Option<Dataset>,
    pub init: ParamVector,
}

impl ObjectiveConfig {
    pub(crate) fn build(&self, seed: u64) -> Result<Built> {
        match self {
            ObjectiveConfig::Mlp {
                data,
                hidden,
                activation,
                init_scale_rule,
            } => {
                let (train, test) = data.build(seed)?;
                let train = Arc::new(train);
                let mut widths = vec![train.dim()];
                widths.extend(hidden);
                widths.push(train.num_classes());
                let spec = MlpSpec {
                    layer_widths: widths,
                    activation: *activation,
                    init_seed: seed,
                    init_scale_rule: *init_scale_rule,
                };
                let oracle = Arc::new(MlpOracle::new(spec.clone(), Arc::clone(&train))?);
                let init = oracle.init_params()?;
                Ok(Built {
                    classifier: Some(oracle.clone()),
                    oracle,
                    mlp: Some(spec),
                    train: Some(train),
                    test: Some(test),
                    init,
                })
            }
            ObjectiveConfig::Logistic { data, l2_lambda } => {
                let (train, test) = data.build(seed)?;
                let train = Arc::new(train);
                let oracle = Arc::new(LogisticOracle::new(Arc::clone(&train), *l2_lambda)?);
                let init = ParamVector::zeros(Arc::clone(oracle.layout()));
                Ok(Built {
                    classifier: Some(oracle.clone()),
                    oracle,
                    mlp: None,
                    train: Some(train),
                    test: Some(test),
                    init,
                })
            }
            ObjectiveConfig::Quadratic { spec, init } => {
                let oracle = Arc::new(QuadraticOracle::new(spec.clone())?);
                let values = match init {
                    Some(v) => v.clone(),
                    None => {
                        use rand_distr::{Distribution, StandardNormal};
                        let mut rng = stream_rng(seed, Stream::Init);
                        (0..spec.dimension()).map(|_| StandardNormal.sample(&mut rng)).collect()
                    }
                };
                let init = ParamVector::from_values(Arc::clone(oracle.layout()), values)?;
                Ok(Built {
                    oracle,
                    classifier: None,
                    mlp: None,
                    train: None,
                    test: None,
                    init,
                })
            }
            ObjectiveConfig::TwoWell { spec, init } => {
                let oracle = Arc::new(TwoWellOracle::new(*spec)?);
                let init = oracle.point(*init);
                Ok(Built {
                    oracle,
                    classifier: None,
                    mlp: None,
                    train: None,
                    test: None,
                    init,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::Variant;

    #[test]
    fn parses_a_full_config() {
        let cfg = RunConfig::from_toml_str(
            r#"
            seed = 3
            iterations = 200
            batch_size = 32

            [objective]
            kind = "mlp"
            hidden = [16]
            activation = "tanh"
            [objective.data]
            n_train = 200
            label_noise = 0.2

            [optimizer]
            variant = "arsam"
            lr = 0.05
            rho = 0.1
            reuse_window = 2

            [schedule]
            segment_len = 20
            alpha = 0.3

            [output]
            telemetry_csv = "t.csv"
            logical_clock = true
            "#,
        )
        .unwrap();
        assert_eq!(cfg.optimizer.variant, Variant::Arsam);
        assert_eq!(cfg.optimizer.reuse_window, Some(2));
        assert_eq!(cfg.schedule.warmup(), 20);
        match &cfg.objective {
            ObjectiveConfig::Mlp { data, hidden, activation, .. } => {
                assert_eq!(hidden, &[16]);
                assert_eq!(*activation, Activation::Tanh);
                assert_eq!(data.n_train, 200);
                assert_eq!(data.n_test, 1000);
            }
            other => panic!("wrong objective {other:?}"),
        }
    }

    #[test]
    fn analytic_objectives_parse() {
        let cfg = RunConfig::from_toml_str(
            r#"
            [objective]
            kind = "quadratic"
            spec = { eigenvalues = [1.0, 4.0] }
            init = [2.0, 1.0]
            "#,
        )
        .unwrap();
        assert!(matches!(cfg.objective, ObjectiveConfig::Quadratic { .. }));
        let cfg = RunConfig::from_toml_str(
            r#"
            [objective]
            kind = "two_well"
            init = -1.5
            "#,
        )
        .unwrap();
        assert!(matches!(cfg.objective, ObjectiveConfig::TwoWell { init, .. } if init == -1.5));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(RunConfig::from_toml_str("iterationz = 5").is_err());
        assert!(RunConfig::from_toml_str("batch_size = 5000").is_err());
        assert!(RunConfig::from_toml_str("[optimizer]\nvariant = \"adam\"").is_err());
        assert!(RunConfig::from_toml_str("[objective]\nkind = \"quadratic\"\nspec = { eigenvalues = [1.0] }\ninit = [1.0, 2.0]").is_err());
    }

    #[test]
    fn toml_echo_round_trips() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), cfg);
    }
}
