//! Named experiment configurations.
//!
//! | preset      | system                                   | sweep      |
//! |-------------|------------------------------------------|------------|
//! | `fig4`      | N=8, K=2, 10 dB, lossless, no overhead   | M = 2..8   |
//! | `fig5`      | N=128, K=16, 15 dB, η_coh=200, lossless  | M          |
//! | `fig6`      | N=64, K=8, 20 dB, ρ/L, no overhead       | M          |
//! | `coherence` | N=64, M=K=8, 20 dB, ρ/L, overheads       | η_coh      |
//! | `fig7`      | N=128 fabric losses                      | M = 1..128 |
//! | `fig8`      | N=128, K=16 power, η_tr=K, η_coh=200     | M          |
//! | `fig9`      | fig8 system, ZF, 15 dB, energy efficiency | M         |
//! | `tableII`   | N=128, M=76 fabric stages and losses     | —          |

use crate::energy::EnergyParams;
use crate::fabric::ArchitectureKind;

use super::config::{
    ExperimentConfig, FrameInputs, LossMode, Precoder, ScenarioConfig, ScenarioKind, SelectionMode, DEFAULT_SEED,
};
use super::ExperimentError;

pub const PRESET_NAMES: [&str; 8] = ["fig4", "fig5", "fig6", "coherence", "fig7", "fig8", "fig9", "tableII"];

/// The configuration behind a preset name (case-insensitive).
pub fn preset(name: &str) -> Result<ExperimentConfig, ExperimentError> {
    let scenarios = match name.to_ascii_lowercase().as_str() {
        "fig4" => fig4(),
        "fig5" => fig5(),
        "fig6" => fig6(),
        "coherence" => coherence(),
        "fig7" => fig7(),
        "fig8" => fig8(),
        "fig9" => fig9(),
        "tableii" | "table2" => table2(),
        _ => return Err(ExperimentError::UnknownPreset(name.into())),
    };
    let id = PRESET_NAMES.iter().find(|p| p.eq_ignore_ascii_case(name)).map_or("tableII", |p| p);
    Ok(ExperimentConfig { id: id.into(), seed: DEFAULT_SEED, scenarios, energy: EnergyParams::default() })
}

fn series(
    name: &str,
    kind: ScenarioKind,
    mode: SelectionMode,
    architecture: ArchitectureKind,
    base: &ScenarioConfig,
) -> ScenarioConfig {
    ScenarioConfig { series: name.into(), kind, selection_mode: mode, architecture, ..base.clone() }
}

fn fig4() -> Vec<ScenarioConfig> {
    use ArchitectureKind::{FfMinLoss, Partial};
    use ScenarioKind::{ApproxMixture, ApproxSingle, Simulate};
    use SelectionMode::*;
    let base = ScenarioConfig { n: 8, m: (2..=8).collect(), k: 2, rho_db: 10.0, ..Default::default() };
    vec![
        series("full_mimo", Simulate, FullMimo, FfMinLoss, &base),
        series("csi_ff", Simulate, CsiFf, FfMinLoss, &base),
        series("power_ff", Simulate, PowerFf, FfMinLoss, &base),
        series("power_pc", Simulate, PowerPc, Partial, &base),
        series("approx_ff", ApproxSingle, PowerFf, FfMinLoss, &base),
        series("approx_pc_single", ApproxSingle, PowerPc, Partial, &base),
        series("approx_pc_mixture", ApproxMixture, PowerPc, Partial, &base),
    ]
}

/// M values of the CSI-cost sweep, including both sides of every jump of
/// `⌈N/M⌉`.
pub const FIG5_M: [usize; 15] = [16, 24, 32, 40, 42, 43, 48, 56, 63, 64, 80, 96, 112, 127, 128];

fn fig5() -> Vec<ScenarioConfig> {
    use ArchitectureKind::FfMinLoss;
    use ScenarioKind::Simulate;
    use SelectionMode::*;
    let base = ScenarioConfig {
        n: 128,
        m: FIG5_M.to_vec(),
        k: 16,
        rho_db: 15.0,
        frame: FrameInputs { overhead: true, eta_coh: vec![200], dl_fraction: 0.7 },
        ..Default::default()
    };
    let mut out = Vec::new();
    for (precoder, tag) in [(Precoder::DpcEq2, "dpc"), (Precoder::Zf, "zf")] {
        let base = ScenarioConfig { precoder, ..base.clone() };
        out.push(series(&format!("power_{tag}"), Simulate, PowerFf, FfMinLoss, &base));
        out.push(series(&format!("csi_{tag}"), Simulate, CsiFf, FfMinLoss, &base));
        out.push(series(&format!("full_mimo_{tag}"), Simulate, FullMimo, FfMinLoss, &base));
    }
    out
}

fn rho_over_loss_64() -> ScenarioConfig {
    ScenarioConfig { n: 64, k: 8, rho_db: 20.0, loss_mode: LossMode::DivideRho, ..Default::default() }
}

fn fig6() -> Vec<ScenarioConfig> {
    use ArchitectureKind::{FfMinLoss, Partial};
    use ScenarioKind::Simulate;
    use SelectionMode::*;
    let base = ScenarioConfig { m: (8..=64).step_by(4).collect(), ..rho_over_loss_64() };
    vec![
        series("power_pc", Simulate, PowerPc, Partial, &base),
        series("power_ff_min_loss", Simulate, PowerFf, FfMinLoss, &base),
        series("csi_pc", Simulate, CsiPc, Partial, &base),
        series("csi_ff_min_loss", Simulate, CsiFf, FfMinLoss, &base),
        series("full_mimo", Simulate, FullMimo, FfMinLoss, &base),
    ]
}

fn coherence() -> Vec<ScenarioConfig> {
    use ArchitectureKind::{FfMinLoss, Partial};
    use ScenarioKind::Simulate;
    use SelectionMode::*;
    let eta_coh = vec![80, 100, 150, 200, 300, 400, 500, 750, 1000, 1250, 1500, 1750, 2000];
    let base = ScenarioConfig {
        m: vec![8],
        frame: FrameInputs { overhead: true, eta_coh, dl_fraction: 0.7 },
        ..rho_over_loss_64()
    };
    vec![
        series("power_pc", Simulate, PowerPc, Partial, &base),
        series("power_ff_min_loss", Simulate, PowerFf, FfMinLoss, &base),
        series("csi_pc", Simulate, CsiPc, Partial, &base),
        series("csi_ff_min_loss", Simulate, CsiFf, FfMinLoss, &base),
        series("full_mimo", Simulate, FullMimo, FfMinLoss, &base),
    ]
}

fn fig7() -> Vec<ScenarioConfig> {
    let base = ScenarioConfig { kind: ScenarioKind::Loss, n: 128, m: (1..=128).collect(), ..Default::default() };
    ArchitectureKind::ALL
        .iter()
        .map(|&a| ScenarioConfig { series: a.as_str().to_ascii_lowercase(), architecture: a, ..base.clone() })
        .collect()
}

fn fig8_base() -> ScenarioConfig {
    ScenarioConfig {
        n: 128,
        m: (16..=128).step_by(4).collect(),
        k: 16,
        rho_db: 15.0,
        loss_mode: LossMode::PaCompensate,
        frame: FrameInputs { overhead: true, eta_coh: vec![200], dl_fraction: 0.7 },
        ..Default::default()
    }
}

/// Power-based selection on every architecture.
fn power_based_architectures(kind: ScenarioKind, base: &ScenarioConfig, prefix: &str) -> Vec<ScenarioConfig> {
    ArchitectureKind::ALL
        .iter()
        .map(|&a| {
            let mode = if a == ArchitectureKind::Partial { SelectionMode::PowerPc } else { SelectionMode::PowerFf };
            series(&format!("{prefix}{}", a.as_str().to_ascii_lowercase()), kind, mode, a, base)
        })
        .collect()
}

fn fig8() -> Vec<ScenarioConfig> {
    power_based_architectures(ScenarioKind::Power, &fig8_base(), "")
}

pub const FIG9_M: [usize; 14] = [16, 20, 24, 28, 32, 36, 40, 48, 56, 64, 80, 96, 112, 128];

fn fig9() -> Vec<ScenarioConfig> {
    let base = ScenarioConfig { m: FIG9_M.to_vec(), precoder: Precoder::Zf, energy: true, ..fig8_base() };
    let mut out = power_based_architectures(ScenarioKind::Simulate, &base, "power_");
    out.push(series("csi_partial", ScenarioKind::Simulate, SelectionMode::CsiPc, ArchitectureKind::Partial, &base));
    out.push(series("csi_ff_min_loss", ScenarioKind::Simulate, SelectionMode::CsiFf, ArchitectureKind::FfMinLoss, &base));
    out
}

fn table2() -> Vec<ScenarioConfig> {
    let base = ScenarioConfig { kind: ScenarioKind::Loss, n: 128, m: vec![76], ..Default::default() };
    ArchitectureKind::ALL
        .iter()
        .map(|&a| ScenarioConfig { series: a.as_str().to_ascii_lowercase(), architecture: a, ..base.clone() })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates() {
        for name in PRESET_NAMES {
            let cfg = preset(name).unwrap();
            cfg.validate().unwrap();
            assert_eq!(cfg.id, name);
        }
        assert!(preset("fig99").is_err());
    }

    #[test]
    fn fig4_series() {
        let cfg = preset("fig4").unwrap();
        let names: Vec<&str> = cfg.scenarios.iter().map(|s| s.series.as_str()).collect();
        assert_eq!(names, ["full_mimo", "csi_ff", "power_ff", "power_pc", "approx_ff", "approx_pc_single", "approx_pc_mixture"]);
        assert!(cfg.scenarios.iter().all(|s| s.trials == 2000 && s.n == 8 && s.k == 2));
    }
}
