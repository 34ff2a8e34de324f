use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::NormSelector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Variant {
    Sgd,
    Sam,
    /// SAM every `k`-th iteration, SGD otherwise.
    SamK(u64),
    Arsam,
    /// ARSAM without reuse: non-sampled iterations are plain SGD.
    ArsamA,
}

impl Variant {
    pub fn is_adaptive(self) -> bool {
        matches!(self, Variant::Arsam | Variant::ArsamA)
    }

    pub fn uses_perturbation(self) -> bool {
        !matches!(self, Variant::Sgd)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::Sgd => f.write_str("sgd"),
            Variant::Sam => f.write_str("sam"),
            Variant::SamK(k) => write!(f, "sam_k({k})"),
            Variant::Arsam => f.write_str("arsam"),
            Variant::ArsamA => f.write_str("arsam_a"),
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let k = s
            .strip_prefix("sam_k(")
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| s.strip_prefix("sam-"));
        if let Some(k) = k {
            let k: u64 = k
                .parse()
                .map_err(|_| Error::Config(format!("bad SAM period in {s:?}")))?;
            if k == 0 {
                return Err(Error::Config("SAM period must be at least 1".into()));
            }
            return Ok(Variant::SamK(k));
        }
        match s.as_str() {
            "sgd" => Ok(Variant::Sgd),
            "sam" => Ok(Variant::Sam),
            "arsam" => Ok(Variant::Arsam),
            "arsam_a" | "arsam-a" => Ok(Variant::ArsamA),
            _ => Err(Error::Config(format!(
                "unknown optimizer {s:?} (expected sgd, sam, sam_k(K), arsam, arsam_a)"
            ))),
        }
    }
}

impl TryFrom<String> for Variant {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Variant> for String {
    fn from(v: Variant) -> String {
        v.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LearningRate {
    Constant(f64),
    /// Half-cosine decay from `base` to `min` over `total_iters`, then `min`.
    Cosine { base: f64, min: f64, total_iters: u64 },
}

impl LearningRate {
    /// Step size at 1-based iteration `i`.
    pub fn at(&self, i: u64) -> f64 {
        match *self {
            LearningRate::Constant(eta) => eta,
            LearningRate::Cosine { base, min, total_iters } => {
                if total_iters == 0 || i > total_iters {
                    return min;
                }
                let t = (i.saturating_sub(1)) as f64 / total_iters as f64;
                min + 0.5 * (base - min) * (1.0 + (std::f64::consts::PI * t).cos())
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            LearningRate::Constant(eta) => eta >= 0.0 && eta.is_finite(),
            LearningRate::Cosine { base, min, .. } => {
                base.is_finite() && min.is_finite() && min >= 0.0 && base >= min
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid learning rate {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub variant: Variant,
    pub lr: LearningRate,
    pub momentum: f64,
    /// λ of the `λ‖w‖²` penalty; enters the update as `2λw`.
    pub weight_decay: f64,
    pub rho: f64,
    /// Maximum lag since the last computed PSF for reuse; absent means unlimited.
    pub reuse_window: Option<u64>,
    pub norm_selector: NormSelector,
    /// Include `2λw` in the gradient that defines the perturbation.
    pub decay_in_perturbation: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            variant: Variant::Arsam,
            lr: LearningRate::Constant(0.1),
            momentum: 0.9,
            weight_decay: 0.0,
            rho: 0.05,
            reuse_window: None,
            norm_selector: NormSelector::Full,
            decay_in_perturbation: false,
        }
    }
}

impl OptimizerConfig {
    pub fn with_variant(variant: Variant) -> Self {
        OptimizerConfig {
            variant,
            ..OptimizerConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.lr.validate()?;
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum {} outside [0, 1)", self.momentum)));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Config(format!("weight decay {} must be >= 0", self.weight_decay)));
        }
        // ρ = 0 is accepted as the degenerate radius at which SAM equals SGD.
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(Error::Config(format!("rho {} must be >= 0", self.rho)));
        }
        if let NormSelector::LastLayers(0) = self.norm_selector {
            return Err(Error::Config("norm selector needs at least one layer".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_strings() {
        for v in [Variant::Sgd, Variant::Sam, Variant::SamK(5), Variant::Arsam, Variant::ArsamA] {
            assert_eq!(v.to_string().parse::<Variant>().unwrap(), v);
        }
        assert_eq!("sam-5".parse::<Variant>().unwrap(), Variant::SamK(5));
        assert!("sam_k(0)".parse::<Variant>().is_err());
        assert!("adam".parse::<Variant>().is_err());
    }

    #[test]
    fn cosine_schedule_endpoints() {
        let lr = LearningRate::Cosine { base: 0.1, min: 0.0, total_iters: 100 };
        assert_eq!(lr.at(1), 0.1);
        assert!((lr.at(51) - 0.05).abs() < 1e-15);
        assert!(lr.at(100) < 1e-3);
        assert_eq!(lr.at(101), 0.0);
    }

    #[test]
    fn config_toml() {
        let cfg: OptimizerConfig = toml::from_str(
            r#"
            variant = "sam_k(5)"
            lr = { base = 0.2, min = 0.0, total_iters = 10 }
            rho = 0.1
            norm_selector = { last_layers = 2 }
            "#,
        )
        .unwrap();
        assert_eq!(cfg.variant, Variant::SamK(5));
        assert_eq!(cfg.norm_selector, NormSelector::LastLayers(2));
        assert_eq!(cfg.momentum, 0.9);
        assert!(cfg.validate().is_ok());

        let bad = OptimizerConfig { momentum: 1.0, ..OptimizerConfig::default() };
        assert!(bad.validate().is_err());
        let bad = OptimizerConfig { rho: -0.1, ..OptimizerConfig::default() };
        assert!(bad.validate().is_err());
    }
}
