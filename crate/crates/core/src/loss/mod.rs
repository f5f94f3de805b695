//! Training objectives: mirror-point consistency, Chamfer similarity
//! regularization, their total, and the two baseline objectives used for
//! ablation.

mod baseline;
mod consistency;

pub use baseline::{baseline_emd_loss, baseline_noise_loss, emd_term};
pub use consistency::{mirror_triples, mpc_loss, sr_loss, total_loss, LossBreakdown, MirrorTriple};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// Training objective selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    /// Mirror-point consistency plus Chamfer similarity regularization.
    Simpc,
    /// Chamfer similarity regularization only.
    SrCdOnly,
    /// Earth mover's matching between variants only.
    SrEmdOnly,
    /// Regress the inverse of injected noise.
    NoiseBaseline,
}

impl LossMode {
    pub const ALL: [LossMode; 4] = [LossMode::Simpc, LossMode::SrCdOnly, LossMode::SrEmdOnly, LossMode::NoiseBaseline];

    pub fn name(self) -> &'static str {
        match self {
            LossMode::Simpc => "simpc",
            LossMode::SrCdOnly => "sr_cd_only",
            LossMode::SrEmdOnly => "sr_emd_only",
            LossMode::NoiseBaseline => "noise_baseline",
        }
    }

    pub fn needs_mirror(self) -> bool {
        self == LossMode::Simpc
    }
}

impl fmt::Display for LossMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        LossMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown loss mode '{s}'")))
    }
}
