//! Scenario descriptions, as read from JSON files and built by the presets.

use std::fmt;
use std::path::Path;

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ExperimentError;
use crate::channel::CovarianceSpec;
use crate::energy::EnergyParams;
use crate::fabric::ArchitectureKind;
use crate::rates::TrainingMode;
use crate::scalar::{real, Real};

pub const DEFAULT_TRIALS: usize = 2000;
pub const DEFAULT_SEED: u64 = 20_170_501;

/// How the `M` antennas are chosen, or no selection at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SelectionMode {
    PowerFf,
    PowerPc,
    CsiFf,
    CsiPc,
    /// `M` antennas, all of them active: `N = M` and no fabric.
    FullMimo,
}

impl SelectionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::PowerFf => "POWER_FF",
            Self::PowerPc => "POWER_PC",
            Self::CsiFf => "CSI_FF",
            Self::CsiPc => "CSI_PC",
            Self::FullMimo => "FULL_MIMO",
        }
    }

    pub fn is_partial(self) -> bool {
        matches!(self, Self::PowerPc | Self::CsiPc)
    }

    pub fn training(self) -> TrainingMode {
        match self {
            Self::CsiFf | Self::CsiPc | Self::FullMimo => TrainingMode::Instantaneous,
            Self::PowerFf | Self::PowerPc => TrainingMode::PowerBased,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Precoder {
    /// Sum capacity with optimised user powers.
    DpcEq2,
    /// Zero forcing with equal user powers.
    Zf,
}

impl Precoder {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::DpcEq2 => "DPC_EQ2",
            Self::Zf => "ZF",
        }
    }
}

/// What the fabric's insertion loss does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LossMode {
    /// Lossless fabric.
    Ignore,
    /// The PA output is fixed, so the radiated SNR drops to `ρ / L`.
    DivideRho,
    /// The PAs raise their output by `L`: full SNR, more PA power.
    PaCompensate,
}

impl LossMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ignore => "IGNORE",
            Self::DivideRho => "DIVIDE_RHO",
            Self::PaCompensate => "PA_COMPENSATE",
        }
    }
}

/// What a scenario produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ScenarioKind {
    /// Monte Carlo sum rate (plus power and efficiency rows if `energy`).
    #[default]
    Simulate,
    /// Analytical approximation with one averaged power scaling.
    ApproxSingle,
    /// Analytical approximation averaged over the selected rank sets.
    ApproxMixture,
    /// Power consumption only.
    Power,
    /// Fabric loss and stage sizes only.
    Loss,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Simulate => "SIMULATE",
            Self::ApproxSingle => "APPROX_SINGLE",
            Self::ApproxMixture => "APPROX_MIXTURE",
            Self::Power => "POWER",
            Self::Loss => "LOSS",
        }
    }

    pub fn is_approx(self) -> bool {
        matches!(self, Self::ApproxSingle | Self::ApproxMixture)
    }
}

macro_rules! from_str_via_as_str {
    ($($ty:ty => [$($v:expr),+]),+ $(,)?) => {$(
        impl std::str::FromStr for $ty {
            type Err = ExperimentError;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let wanted = s.trim().to_ascii_uppercase().replace('-', "_");
                [$($v),+]
                    .into_iter()
                    .find(|v: &$ty| v.as_str() == wanted)
                    .ok_or_else(|| ExperimentError::InvalidConfig(format!("unknown {} '{s}'", stringify!($ty))))
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    )+};
}

from_str_via_as_str! {
    SelectionMode => [SelectionMode::PowerFf, SelectionMode::PowerPc, SelectionMode::CsiFf, SelectionMode::CsiPc, SelectionMode::FullMimo],
    Precoder => [Precoder::DpcEq2, Precoder::Zf],
    LossMode => [LossMode::Ignore, LossMode::DivideRho, LossMode::PaCompensate],
    ScenarioKind => [ScenarioKind::Simulate, ScenarioKind::ApproxSingle, ScenarioKind::ApproxMixture, ScenarioKind::Power, ScenarioKind::Loss],
}

/// User-side channel covariance.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CovarianceConfig {
    #[default]
    Identity,
    Diagonal { powers: Vec<f64> },
    /// Row-major real and imaginary parts of a K x K Hermitian matrix.
    Matrix { re: Vec<Vec<f64>>, im: Vec<Vec<f64>> },
}

impl CovarianceConfig {
    pub fn to_spec<T: Real>(&self, k: usize) -> Result<CovarianceSpec<T>, ExperimentError> {
        match self {
            Self::Identity => Ok(CovarianceSpec::Identity),
            Self::Diagonal { powers } if powers.len() == k => Ok(CovarianceSpec::diagonal(powers)),
            Self::Diagonal { powers } => Err(ExperimentError::InvalidConfig(format!("{} covariance powers for K = {k}", powers.len()))),
            Self::Matrix { re, im } => {
                let square = |m: &Vec<Vec<f64>>| m.len() == k && m.iter().all(|r| r.len() == k);
                if !square(re) || !square(im) {
                    return Err(ExperimentError::InvalidConfig(format!("covariance matrix must be {k} x {k}")));
                }
                Ok(CovarianceSpec::Matrix(DMatrix::from_fn(k, k, |i, j| Complex::new(real(re[i][j]), real(im[i][j])))))
            }
        }
    }
}

/// Coherence-block inputs. Without `overhead` every symbol is downlink data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrameInputs {
    pub overhead: bool,
    /// Swept when it has more than one entry.
    pub eta_coh: Vec<usize>,
    pub dl_fraction: f64,
}

impl Default for FrameInputs {
    fn default() -> Self {
        Self { overhead: false, eta_coh: vec![200], dl_fraction: 0.7 }
    }
}

/// One curve: a fixed system swept over `m` (and `frame.eta_coh`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub series: String,
    pub kind: ScenarioKind,
    pub n: usize,
    pub m: Vec<usize>,
    pub k: usize,
    pub rho_db: f64,
    pub architecture: ArchitectureKind,
    pub selection_mode: SelectionMode,
    pub precoder: Precoder,
    pub loss_mode: LossMode,
    pub frame: FrameInputs,
    /// Channel draws per point (`G` draws for the approximations).
    pub trials: usize,
    /// Overrides the experiment seed.
    pub seed: Option<u64>,
    pub covariance: CovarianceConfig,
    /// Add power and efficiency rows to simulated points.
    pub energy: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            series: "scenario".into(),
            kind: ScenarioKind::Simulate,
            n: 8,
            m: vec![4],
            k: 2,
            rho_db: 10.0,
            architecture: ArchitectureKind::FfMinLoss,
            selection_mode: SelectionMode::PowerFf,
            precoder: Precoder::DpcEq2,
            loss_mode: LossMode::Ignore,
            frame: FrameInputs::default(),
            trials: DEFAULT_TRIALS,
            seed: None,
            covariance: CovarianceConfig::Identity,
            energy: false,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let fail = |msg: String| Err(ExperimentError::InvalidConfig(format!("series '{}': {msg}", self.series)));
        if self.n == 0 || self.k == 0 {
            return fail("N and K must be positive".into());
        }
        if self.m.is_empty() {
            return fail("no M values".into());
        }
        let full = self.selection_mode == SelectionMode::FullMimo;
        if let Some(&m) = self.m.iter().find(|&&m| m == 0 || (!full && m > self.n)) {
            return fail(format!("M = {m} outside 1..={}", self.n));
        }
        if self.selection_mode.is_partial() && self.architecture != ArchitectureKind::Partial {
            return fail(format!("{} needs the PARTIAL architecture", self.selection_mode));
        }
        let selects = self.kind != ScenarioKind::Loss && !full;
        if selects && !self.selection_mode.is_partial() && self.architecture == ArchitectureKind::Partial {
            return fail(format!("{} cannot run on the PARTIAL architecture", self.selection_mode));
        }
        if !self.rho_db.is_finite() {
            return fail("rho_db must be finite".into());
        }
        if self.frame.eta_coh.is_empty() || self.frame.eta_coh.contains(&0) {
            return fail("eta_coh values must be positive".into());
        }
        if !(self.frame.dl_fraction > 0.0 && self.frame.dl_fraction <= 1.0) {
            return fail(format!("dl_fraction {} outside (0, 1]", self.frame.dl_fraction));
        }
        let needs_trials = matches!(self.kind, ScenarioKind::Simulate) || self.kind.is_approx();
        if needs_trials && self.trials == 0 {
            return fail("trials must be positive".into());
        }
        if self.kind.is_approx() && !matches!(self.selection_mode, SelectionMode::PowerFf | SelectionMode::PowerPc) {
            return fail("approximations model power-based selection only".into());
        }
        if self.kind.is_approx() && self.covariance != CovarianceConfig::Identity {
            return fail("approximations assume uncorrelated users".into());
        }
        self.covariance.to_spec::<f64>(self.k)?.sqrt(self.k)?;
        Ok(())
    }

    /// Antennas in the array at a sweep point.
    pub fn antennas(&self, m: usize) -> usize {
        if self.selection_mode == SelectionMode::FullMimo {
            m
        } else {
            self.n
        }
    }
}

/// A named set of curves sharing a seed and energy constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub id: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub scenarios: Vec<ScenarioConfig>,
    #[serde(default)]
    pub energy: EnergyParams,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

/// Command-line overrides, applied to every scenario.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub n: Option<usize>,
    pub m: Option<Vec<usize>>,
    pub k: Option<usize>,
    pub rho_db: Option<f64>,
    pub eta_coh: Option<Vec<usize>>,
    pub architecture: Option<ArchitectureKind>,
    pub selection_mode: Option<SelectionMode>,
    pub precoder: Option<Precoder>,
    pub loss_mode: Option<LossMode>,
    pub overhead: Option<bool>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.scenarios.is_empty() {
            return Err(ExperimentError::InvalidConfig(format!("experiment '{}' has no scenarios", self.id)));
        }
        self.energy.validate()?;
        self.scenarios.iter().try_for_each(ScenarioConfig::validate)
    }

    pub fn from_json_str(json: &str) -> Result<Self, ExperimentError> {
        let cfg: Self = serde_json::from_str(json)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io { path: path.display().to_string(), source })?;
        Self::from_json_str(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
            self.scenarios.iter_mut().for_each(|s| s.seed = None);
        }
        for s in &mut self.scenarios {
            if let Some(v) = o.trials {
                s.trials = v;
            }
            if let Some(v) = o.n {
                s.n = v;
            }
            if let Some(v) = &o.m {
                s.m = v.clone();
            }
            if let Some(v) = o.k {
                s.k = v;
            }
            if let Some(v) = o.rho_db {
                s.rho_db = v;
            }
            if let Some(v) = &o.eta_coh {
                s.frame.eta_coh = v.clone();
            }
            if let Some(v) = o.architecture {
                s.architecture = v;
            }
            if let Some(v) = o.selection_mode {
                s.selection_mode = v;
            }
            if let Some(v) = o.precoder {
                s.precoder = v;
            }
            if let Some(v) = o.loss_mode {
                s.loss_mode = v;
            }
            if let Some(v) = o.overhead {
                s.frame.overhead = v;
            }
        }
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).unwrap_or_default();
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_selection_needs_partial_fabric() {
        let s = ScenarioConfig { selection_mode: SelectionMode::PowerPc, ..Default::default() };
        assert!(s.validate().is_err());
        let s = ScenarioConfig { architecture: ArchitectureKind::Partial, ..s };
        assert!(s.validate().is_ok());
    }

    #[test]
    fn enums_parse_loosely() {
        assert_eq!("power-pc".parse::<SelectionMode>().unwrap(), SelectionMode::PowerPc);
        assert_eq!("dpc_eq2".parse::<Precoder>().unwrap(), Precoder::DpcEq2);
        assert!("bogus".parse::<LossMode>().is_err());
    }

    #[test]
    fn json_defaults_fill_in() {
        let cfg = ExperimentConfig::from_json_str(r#"{"id": "x", "scenarios": [{"series": "a", "m": [2, 3]}]}"#).unwrap();
        assert_eq!(cfg.seed, DEFAULT_SEED);
        assert_eq!(cfg.scenarios[0].trials, DEFAULT_TRIALS);
        assert_eq!(cfg.scenarios[0].m, vec![2, 3]);
    }

    #[test]
    fn hash_tracks_content() {
        let cfg = ExperimentConfig { id: "a".into(), seed: 1, scenarios: vec![ScenarioConfig::default()], energy: EnergyParams::default() };
        let mut other = cfg.clone();
        assert_eq!(cfg.config_hash(), other.config_hash());
        other.apply(&Overrides { trials: Some(10), ..Default::default() });
        assert_ne!(cfg.config_hash(), other.config_hash());
        assert_eq!(cfg.config_hash().len(), 64);
    }

    #[test]
    fn covariance_shapes_are_checked() {
        let s = ScenarioConfig { covariance: CovarianceConfig::Diagonal { powers: vec![1.0] }, ..Default::default() };
        assert!(s.validate().is_err());
        let s = ScenarioConfig { covariance: CovarianceConfig::Diagonal { powers: vec![1.0, 0.5] }, ..Default::default() };
        assert!(s.validate().is_ok());
    }
}
