//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bounds::{DEFAULT_SMALLNESS, DEFAULT_TOLERANCE};
use crate::ensemble::InitialCondition;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub dimension: usize,
    pub particles: usize,
    pub dt: f64,
    pub horizon: f64,
    #[serde(default = "default_stride")]
    pub sample_stride: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_stride() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
pub enum InteractionSection {
    None,
    Cosine {
        amplitude: f64,
    },
    CosineProduct {
        amplitude: f64,
    },
    Poisson {
        grid: usize,
        #[serde(default)]
        mollification: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
pub enum MagneticSection {
    Uniform {
        omega: f64,
    },
    /// `b(x) = offset + amplitude · sin(2π x1)`.
    Sine {
        amplitude: f64,
        #[serde(default)]
        offset: f64,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SecondEnsemble {
    /// The first ensemble moved by `shift_x`, `shift_v`.
    #[default]
    Shift,
    /// An independent draw from the same family, then shifted.
    Independent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub family: String,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub shift_x: Vec<f64>,
    #[serde(default)]
    pub shift_v: Vec<f64>,
    #[serde(default)]
    pub second: SecondEnsemble,
}

fn default_sigma() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "method")]
pub enum DistanceSection {
    Exact,
    Entropic {
        epsilon: f64,
        #[serde(default = "default_iterations")]
        max_iterations: usize,
    },
}

fn default_iterations() -> usize {
    20_000
}

impl Default for DistanceSection {
    fn default() -> Self {
        Self::Exact
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Dobrushin,
    Magnetized,
    Velocity,
    Loglinear,
    Sqrtlog,
}

impl BoundKind {
    pub fn file_stem(self) -> &'static str {
        match self {
            Self::Dobrushin => "dobrushin",
            Self::Magnetized => "magnetized",
            Self::Velocity => "velocity",
            Self::Loglinear => "loglinear",
            Self::Sqrtlog => "sqrtlog",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    #[serde(default = "default_bounds")]
    pub evaluate: Vec<BoundKind>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "one")]
    pub c_d: f64,
    #[serde(default = "one", rename = "C_d")]
    pub c_upper: f64,
    #[serde(default = "default_c0")]
    pub c0: f64,
    #[serde(default = "default_alpha")]
    pub holder_exponent: f64,
}

fn default_bounds() -> Vec<BoundKind> {
    vec![
        BoundKind::Dobrushin,
        BoundKind::Magnetized,
        BoundKind::Velocity,
    ]
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

fn one() -> f64 {
    1.0
}

fn default_c0() -> f64 {
    DEFAULT_SMALLNESS
}

fn default_alpha() -> f64 {
    0.5
}

impl Default for BoundsSection {
    fn default() -> Self {
        Self {
            evaluate: default_bounds(),
            tolerance: DEFAULT_TOLERANCE,
            c_d: 1.0,
            c_upper: 1.0,
            c0: DEFAULT_SMALLNESS,
            holder_exponent: 0.5,
        }
    }
}

/// A two-solution stability experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: RunSection,
    pub interaction: InteractionSection,
    pub magnetic: MagneticSection,
    pub initial: InitialSection,
    #[serde(default)]
    pub distance: DistanceSection,
    #[serde(default)]
    pub bounds: BoundsSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of the canonical serialization, so formatting does not matter.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Number of integration steps, `T / dt` rounded.
    pub fn steps(&self) -> usize {
        (self.run.horizon / self.run.dt).round() as usize
    }

    pub fn initial_condition(&self) -> Result<InitialCondition> {
        InitialCondition::from_name(&self.initial.family, self.initial.sigma, self.initial.alpha)
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.run;
        let bad = |m: String| Err(Error::Config(m));
        if r.dimension != 2 && r.dimension != 3 {
            return bad(format!("dimension must be 2 or 3, got {}", r.dimension));
        }
        if r.particles < 2 {
            return bad(format!("need at least 2 particles, got {}", r.particles));
        }
        if !(r.dt > 0.0) || !r.dt.is_finite() {
            return bad(format!("dt must be positive, got {}", r.dt));
        }
        if !(r.horizon >= r.dt) || !r.horizon.is_finite() {
            return bad(format!("horizon {} must be at least dt", r.horizon));
        }
        let steps = r.horizon / r.dt;
        if (steps - steps.round()).abs() > 1e-6 * steps {
            return bad(format!(
                "horizon {} is not a whole number of steps {}",
                r.horizon, r.dt
            ));
        }
        if r.sample_stride == 0 {
            return bad("sample_stride must be at least 1".into());
        }
        match self.interaction {
            InteractionSection::Poisson {
                grid,
                mollification,
            } => {
                if grid < 4 || !(mollification >= 0.0) {
                    return bad("poisson needs grid >= 4 and mollification >= 0".into());
                }
            }
            InteractionSection::Cosine { amplitude }
            | InteractionSection::CosineProduct { amplitude } => {
                if !amplitude.is_finite() {
                    return bad("kernel amplitude must be finite".into());
                }
            }
            InteractionSection::None => {}
        }
        match self.magnetic {
            MagneticSection::Uniform { omega } if !(omega >= 0.0) || !omega.is_finite() => {
                return bad(format!("omega must be finite and >= 0, got {omega}"));
            }
            MagneticSection::Sine { amplitude, offset }
                if !amplitude.is_finite() || !offset.is_finite() =>
            {
                return bad("sine field parameters must be finite".into());
            }
            _ => {}
        }
        self.initial_condition()?;
        for (name, shift) in [
            ("shift_x", &self.initial.shift_x),
            ("shift_v", &self.initial.shift_v),
        ] {
            if !shift.is_empty() && shift.len() != r.dimension {
                return bad(format!(
                    "{name} has {} components, expected {}",
                    shift.len(),
                    r.dimension
                ));
            }
            if shift.iter().any(|c| !c.is_finite()) {
                return bad(format!("{name} must be finite"));
            }
        }
        if let DistanceSection::Entropic {
            epsilon,
            max_iterations,
        } = self.distance
        {
            if !(epsilon > 0.0) || max_iterations == 0 {
                return bad("entropic distance needs epsilon > 0 and max_iterations >= 1".into());
            }
        }
        let b = &self.bounds;
        if !(b.tolerance >= 0.0) || !(b.c_d > 0.0) || !(b.c_upper > 0.0) || !(b.c0 > 0.0) {
            return bad("tolerance must be >= 0 and c_d, C_d, c0 positive".into());
        }
        if !(b.holder_exponent > 0.0 && b.holder_exponent < 1.0) {
            return bad(format!(
                "holder_exponent must lie in (0, 1), got {}",
                b.holder_exponent
            ));
        }
        Ok(())
    }
}
