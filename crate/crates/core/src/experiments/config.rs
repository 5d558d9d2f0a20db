//! TOML experiment configuration. Unknown keys are rejected everywhere.

use serde::{Deserialize, Serialize};

use crate::disorder::DisorderLaw;
use crate::langevin::{Integrator, LangevinConfig};
use crate::potential::{Potential, PotentialSpec};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Free-form name written to the `experiment` column.
    pub name: String,
    pub dimension: usize,
    pub scales: Vec<usize>,
    pub lambda: f64,
    pub potential: PotentialSpec,
    #[serde(default = "default_law")]
    pub disorder: DisorderLaw,
    pub master_seed: u64,
    pub seeds: usize,
    #[serde(default)]
    pub dynamics: DynamicsSection,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub coupling: CouplingSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub dlr: DlrSection,
    #[serde(default)]
    pub validation: ValidationSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_law() -> DisorderLaw {
    DisorderLaw::Rademacher
}

/// Dynamics parameters. Unset times fall back to per-experiment defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    /// Defaults to the stability bound `1/(4d·c₊)`.
    pub dt: Option<f64>,
    pub total_time: Option<f64>,
    pub burn_in: Option<f64>,
    #[serde(default = "one")]
    pub stride: usize,
    #[serde(default)]
    pub integrator: Integrator,
}

fn one() -> usize {
    1
}

impl Default for DynamicsSection {
    fn default() -> Self {
        Self { dt: None, total_time: None, burn_in: None, stride: 1, integrator: Integrator::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub solver: f64,
    pub oracle: f64,
    pub green: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { solver: 1e-10, oracle: 1e-10, green: 1e-10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CouplingSection {
    /// Radius of the second box (and of the dyadic outer box) in units of `L`.
    pub outer_factor: usize,
    /// Coupled time; `L²` when unset.
    pub coupled_time: Option<f64>,
    pub environment_stride: usize,
    /// Use one stream for both pre-equilibrations (identical boxes then stay identical).
    pub shared_preparation: bool,
    /// Wall-clock budget per scale in seconds.
    pub budget_per_scale_s: Option<f64>,
}

impl Default for CouplingSection {
    fn default() -> Self {
        Self {
            outer_factor: 2,
            coupled_time: None,
            environment_stride: 8,
            shared_preparation: false,
            budget_per_scale_s: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    /// Radii `r` of the points `r·e₁` used for the decorrelation series (on the largest scale).
    pub decorrelation_radii: Vec<usize>,
    /// Radii `ℓ` of the averaging boxes of the spatial-average study (on the largest scale).
    pub average_radii: Vec<usize>,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self { decorrelation_radii: vec![1, 2, 3, 4], average_radii: vec![0, 1, 2] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DlrSection {
    pub big_radius: usize,
    pub inner_radius: usize,
    /// Site whose height is the observable.
    pub site: Option<Vec<i64>>,
    pub snapshots: usize,
    pub inner_burn_in: f64,
    pub inner_time: f64,
}

impl Default for DlrSection {
    fn default() -> Self {
        Self { big_radius: 8, inner_radius: 2, site: None, snapshots: 40, inner_burn_in: 5.0, inner_time: 200.0 }
    }
}

/// Parameters of the oracle-backed validation checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidationSection {
    pub langevin_dimension: usize,
    pub langevin_radius: usize,
    pub green_radius: usize,
    pub green_fields: usize,
    pub shift: Vec<i64>,
}

impl Default for ValidationSection {
    fn default() -> Self {
        Self { langevin_dimension: 2, langevin_radius: 4, green_radius: 4, green_fields: 100, shift: vec![1, 0] }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: Option<String>,
    /// Write measured wall-clock times into `walltime_s` (otherwise 0, keeping output bytes
    /// reproducible).
    pub record_walltime: bool,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.name.is_empty() || self.name.contains([',', '\n', '"']) {
            return bad(format!("experiment name {:?} must be nonempty and CSV-safe", self.name));
        }
        if self.dimension == 0 {
            return bad("dimension must be at least 1".into());
        }
        if self.scales.is_empty() || !self.scales.windows(2).all(|w| w[0] < w[1]) {
            return bad("scales must be a nonempty strictly increasing list".into());
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return bad(format!("lambda must be a finite nonnegative number, got {}", self.lambda));
        }
        if self.seeds == 0 {
            return bad("seed count must be positive".into());
        }
        for (k, t) in [("solver", self.tolerances.solver), ("oracle", self.tolerances.oracle), ("green", self.tolerances.green)] {
            if !(t > 0.0) {
                return bad(format!("tolerance {k} must be positive"));
            }
        }
        if self.dynamics.stride == 0 {
            return bad("stride must be at least 1".into());
        }
        if self.coupling.outer_factor == 0 || self.coupling.environment_stride == 0 {
            return bad("coupling factors must be positive".into());
        }
        self.potential()?;
        if let Some(dt) = self.dynamics.dt {
            if !(dt > 0.0) {
                return bad(format!("dt must be positive, got {dt}"));
            }
        }
        if let (Some(t), Some(b)) = (self.dynamics.total_time, self.dynamics.burn_in) {
            if !(b < t) {
                return bad(format!("burn-in {b} must be below total time {t}"));
            }
        }
        Ok(())
    }

    pub fn potential(&self) -> Result<Potential> {
        Potential::from_spec(&self.potential)
    }

    /// Seeds of the disorder samples: `master_seed + offset + k`.
    pub fn seed_table(&self, offset: u64) -> Vec<u64> {
        (0..self.seeds as u64).map(|k| self.master_seed.wrapping_add(offset).wrapping_add(k)).collect()
    }

    /// Dynamics for dimension `dim`, with default times when unset.
    pub fn langevin(&self, dim: usize, default_total: f64, default_burn_in: f64) -> Result<LangevinConfig> {
        let potential = self.potential()?;
        let dt = self.dynamics.dt.unwrap_or_else(|| LangevinConfig::max_dt(dim, &potential));
        let mut cfg = LangevinConfig::new(
            dt,
            self.dynamics.total_time.unwrap_or(default_total),
            self.dynamics.burn_in.unwrap_or(default_burn_in),
            self.lambda,
            potential,
        );
        cfg.stride = self.dynamics.stride;
        cfg.integrator = self.dynamics.integrator;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "gs"
dimension = 2
scales = [2, 4]
lambda = 1.0
master_seed = 7
seeds = 3
[potential]
family = "quadratic"
"#;

    #[test]
    fn minimal_config_parses() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.seed_table(10), vec![17, 18, 19]);
        assert_eq!(c.dynamics.stride, 1);
        assert_eq!(c.tolerances, Tolerances::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = format!("{MINIMAL}\nbogus = 1\n");
        assert!(matches!(ExperimentConfig::from_toml(&text), Err(Error::Config(_))));
        let nested = MINIMAL.replace("family = \"quadratic\"", "family = \"quadratic\"\nkappa = 0.5");
        assert!(ExperimentConfig::from_toml(&nested).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(ExperimentConfig::from_toml(&MINIMAL.replace("[2, 4]", "[4, 2]")).is_err());
        assert!(ExperimentConfig::from_toml(&MINIMAL.replace("seeds = 3", "seeds = 0")).is_err());
        assert!(ExperimentConfig::from_toml(&MINIMAL.replace("lambda = 1.0", "lambda = -1.0")).is_err());
    }
}
