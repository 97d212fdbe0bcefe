use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use daha_core::rootdata::{Family, LatticeChoice};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RootSystemCfg {
    pub family: Family,
    pub rank: usize,
    #[serde(default = "default_lattice")]
    pub lattice: LatticeChoice,
}

fn default_lattice() -> LatticeChoice {
    LatticeChoice::P
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Task {
    ComputeE,
    ComputeP,
    ComputeBar,
    VerifyRelations,
    VerifyMacdonald,
    VerifyGauss,
    VerifyShintani,
    VerifyToda,
    VerifyJackson,
    VerifyAsymptotics,
    VerifyAll,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericCfg {
    pub q: f64,
    /// `k_sht` and optionally `k_lng`; a single value is used for both.
    pub k: Vec<f64>,
    /// Complex coordinates `[re, im]` in the fundamental-weight basis.
    pub x: Vec<[f64; 2]>,
    #[serde(default)]
    pub lambda: Vec<[f64; 2]>,
    /// Tolerance of the limit checks.
    #[serde(default = "default_precision")]
    pub precision: f64,
    #[serde(default = "default_n_max")]
    pub n_max: u32,
    /// Parameter of the theta functional equation.
    #[serde(default = "default_u")]
    pub u: f64,
}

fn default_precision() -> f64 {
    1e-6
}
fn default_n_max() -> u32 {
    40
}
fn default_u() -> f64 {
    0.7
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
    Text,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputCfg {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub root_system: RootSystemCfg,
    pub task: Task,
    #[serde(default = "default_box")]
    pub sweep_box: i32,
    /// Order in `v = q^{1/(2m̃)}`; defaults to `q⁴`.
    #[serde(default)]
    pub cutoff: Option<i32>,
    #[serde(default)]
    pub numeric: Option<NumericCfg>,
    #[serde(default)]
    pub output: OutputCfg,
    /// Worker threads; all available cores when absent.
    #[serde(default)]
    pub parallelism: Option<usize>,
    /// Adds wall-clock times to the report, which then differs between runs.
    #[serde(default)]
    pub record_timing: bool,
}

fn default_box() -> i32 {
    2
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweep_box < 0 {
            bail!("sweep_box must be nonnegative");
        }
        if matches!(self.cutoff, Some(c) if c < 0) {
            bail!("cutoff must be nonnegative");
        }
        if self.root_system.rank == 0 {
            bail!("rank must be positive");
        }
        if let Some(n) = &self.numeric {
            if !(n.q > 0.0 && n.q < 1.0) {
                bail!("numeric.q must lie in (0, 1)");
            }
            if n.k.is_empty() || n.k.len() > 2 {
                bail!("numeric.k takes one or two values");
            }
            if n.x.len() != self.root_system.rank {
                bail!("numeric.x needs {} coordinates", self.root_system.rank);
            }
            if !n.lambda.is_empty() && n.lambda.len() != self.root_system.rank {
                bail!("numeric.lambda needs {} coordinates", self.root_system.rank);
            }
        } else if matches!(self.task, Task::VerifyAsymptotics) {
            bail!("verify_asymptotics needs a numeric block");
        }
        Ok(())
    }
}
