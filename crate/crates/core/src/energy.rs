//! Power consumption and energy efficiency of a selection configuration.
//!
//! The switching network sits after the power amplifiers, so the PAs must
//! raise their output by the fabric's insertion loss. Converters and their
//! data interfaces only burn power while they are active: the ADC side
//! during training, the DAC side (and the PAs) during downlink data.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rates::FrameConfig;
use crate::scalar::{db_to_linear, dbm_to_watts};

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("invalid energy parameter: {0}")]
    InvalidParam(&'static str),
    #[error("total power must be positive, got {0} W")]
    NonPositivePower(f64),
    #[error("rate must be non-negative, got {0}")]
    NegativeRate(f64),
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// How a resource block is charged for the base-station power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RbAccounting {
    /// Transmit power split uniformly over the band (`P_t · B_RB / B`);
    /// every other term charged in full to the resource block.
    #[default]
    TransmitOnly,
    /// Whole band: rate over `B`, no apportioning. Equivalent to scaling
    /// every power term by `B_RB / B`.
    FullBand,
}

/// Hardware and system constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnergyParams {
    /// W per dual-channel ADC.
    pub p_adc: f64,
    /// W per dual-channel DAC.
    pub p_dac: f64,
    /// W per Gbps of DSP interface traffic.
    pub p_int_per_gbps: f64,
    /// W of analog circuitry per RF chain.
    pub p_cir: f64,
    /// W of the local oscillator.
    pub p_lo: f64,
    /// Baseband efficiency, flops/s per mW.
    pub inv_pc_flops_per_mw: f64,
    /// PA efficiency.
    pub kappa: f64,
    pub p_t_dbm: f64,
    pub b_adc: f64,
    pub b_dac: f64,
    /// Sampling rate per port in GSPS.
    pub s_adc: f64,
    pub s_dac: f64,
    /// Coherence blocks (subcarriers) per second.
    pub n_coh: f64,
    pub bandwidth_hz: f64,
    pub rb_hz: f64,
    pub rb_accounting: RbAccounting,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            p_adc: 0.233,
            p_dac: 0.232,
            p_int_per_gbps: 0.025,
            p_cir: 1.0,
            p_lo: 2.0,
            inv_pc_flops_per_mw: 12.8e6,
            kappa: 0.39,
            p_t_dbm: 46.0,
            b_adc: 12.0,
            b_dac: 14.0,
            s_adc: 0.125,
            s_dac: 0.125,
            n_coh: 1200.0,
            bandwidth_hz: 20e6,
            rb_hz: 180e3,
            rb_accounting: RbAccounting::TransmitOnly,
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<(), EnergyError> {
        let positive = [
            (self.p_adc, "p_adc"),
            (self.p_dac, "p_dac"),
            (self.p_int_per_gbps, "p_int_per_gbps"),
            (self.p_cir, "p_cir"),
            (self.p_lo, "p_lo"),
            (self.inv_pc_flops_per_mw, "inv_pc_flops_per_mw"),
            (self.kappa, "kappa"),
            (self.b_adc, "b_adc"),
            (self.b_dac, "b_dac"),
            (self.s_adc, "s_adc"),
            (self.s_dac, "s_dac"),
            (self.n_coh, "n_coh"),
            (self.bandwidth_hz, "bandwidth_hz"),
            (self.rb_hz, "rb_hz"),
        ];
        if let Some((_, name)) = positive.iter().find(|(v, _)| !(*v > 0.0 && v.is_finite())) {
            return Err(EnergyError::InvalidParam(name));
        }
        if self.kappa > 1.0 {
            return Err(EnergyError::InvalidParam("kappa"));
        }
        if !self.p_t_dbm.is_finite() {
            return Err(EnergyError::InvalidParam("p_t_dbm"));
        }
        Ok(())
    }

    pub fn from_json_str(json: &str) -> Result<Self, EnergyError> {
        let p: Self = serde_json::from_str(json)?;
        p.validate()?;
        Ok(p)
    }

    /// Defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Self, EnergyError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| EnergyError::Io { path: p.display().to_string(), source })?;
                Self::from_json_str(&text)
            }
        }
    }

    /// Bandwidth the sum rate is counted over.
    pub fn rate_bandwidth_hz(&self) -> f64 {
        match self.rb_accounting {
            RbAccounting::TransmitOnly => self.rb_hz,
            RbAccounting::FullBand => self.bandwidth_hz,
        }
    }

    /// Share of the transmit power attributed to the accounted band.
    pub fn transmit_share(&self) -> f64 {
        match self.rb_accounting {
            RbAccounting::TransmitOnly => self.rb_hz / self.bandwidth_hz,
            RbAccounting::FullBand => 1.0,
        }
    }
}

/// `(ADC side, DAC side)` interface power per RF chain when always active.
pub fn interface_power_split(params: &EnergyParams) -> (f64, f64) {
    (
        params.p_int_per_gbps * 2.0 * params.s_adc * params.b_adc,
        params.p_int_per_gbps * 2.0 * params.s_dac * params.b_dac,
    )
}

/// DSP interface power per RF chain, `p_int (2 S_ADC b_ADC + 2 S_DAC b_DAC)`.
pub fn interface_power(params: &EnergyParams) -> f64 {
    let (a, d) = interface_power_split(params);
    a + d
}

/// `(C_corr, C_data)` in flops/s: pilot correlation and precoding.
pub fn baseband_flops(n_coh: f64, eta_tr: usize, eta_dl: usize, m: usize, k: usize) -> (f64, f64) {
    let (m, k) = (m as f64, k as f64);
    let c_corr = 8.0 * n_coh * eta_tr as f64 * m * k;
    let c_data = n_coh * (4.0 * k * k * m + eta_dl as f64 * 8.0 * k * m);
    (c_corr, c_data)
}

/// Power breakdown in W and the resulting efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub m: usize,
    pub p_pa: f64,
    pub p_rf: f64,
    /// Duty-cycled ADC power per chain.
    pub p_adc: f64,
    /// Duty-cycled DAC power per chain.
    pub p_dac: f64,
    /// Duty-cycled interface power per chain.
    pub p_int: f64,
    pub p_bb: f64,
    pub total: f64,
    /// Sum rate over the accounted bandwidth, bits/s.
    pub r_sum_bps: f64,
    /// Bits per Joule.
    pub xi: f64,
}

impl EnergyReport {
    /// Converter and interface power of all chains.
    pub fn p_conv(&self) -> f64 {
        self.m as f64 * (self.p_adc + self.p_dac + self.p_int)
    }
}

/// Power drawn by `m` active chains behind a fabric of `loss_db`.
pub fn total_power(m: usize, k: usize, loss_db: f64, frame: &FrameConfig, params: &EnergyParams) -> EnergyReport {
    let coh = frame.eta_coh as f64;
    let tr_duty = frame.eta_tr as f64 / coh;
    let dl_duty = frame.eta_dl as f64 / coh;
    let p_t = dbm_to_watts(params.p_t_dbm) * params.transmit_share();
    let p_pa = p_t * db_to_linear(loss_db) / params.kappa * dl_duty;
    let p_rf = m as f64 * params.p_cir + params.p_lo;
    let (int_adc, int_dac) = interface_power_split(params);
    let p_adc = params.p_adc * tr_duty;
    let p_dac = params.p_dac * dl_duty;
    let p_int = int_adc * tr_duty + int_dac * dl_duty;
    let (c_corr, c_data) = baseband_flops(params.n_coh, frame.eta_tr, frame.eta_dl, m, k);
    let p_bb = (c_corr + c_data) / (params.inv_pc_flops_per_mw * 1e3);
    let total = p_pa + p_rf + m as f64 * (p_adc + p_dac + p_int) + p_bb;
    EnergyReport { m, p_pa, p_rf, p_adc, p_dac, p_int, p_bb, total, r_sum_bps: 0.0, xi: 0.0 }
}

/// Fills in the rate and `ξ = R_sum / P_total` for a spectral efficiency
/// (bits/s/Hz, overheads included) over the accounted bandwidth.
pub fn energy_efficiency(spectral_efficiency: f64, params: &EnergyParams, report: &EnergyReport) -> Result<EnergyReport, EnergyError> {
    if spectral_efficiency < 0.0 {
        return Err(EnergyError::NegativeRate(spectral_efficiency));
    }
    if !(report.total > 0.0) {
        return Err(EnergyError::NonPositivePower(report.total));
    }
    let r_sum_bps = spectral_efficiency * params.rate_bandwidth_hz();
    Ok(EnergyReport { r_sum_bps, xi: r_sum_bps / report.total, ..*report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::frame_split;

    fn full_band() -> EnergyParams {
        EnergyParams { rb_accounting: RbAccounting::FullBand, ..EnergyParams::default() }
    }

    fn always_on() -> FrameConfig {
        FrameConfig { eta_coh: 1, eta_tr: 0, eta_ul: 0, eta_dl: 1, dl_fraction: 1.0 }
    }

    #[test]
    fn interface_examples() {
        let p = EnergyParams::default();
        assert!((interface_power(&p) - 0.1625).abs() < 1e-12);
        let zero = EnergyParams { s_adc: 0.0, s_dac: 0.0, ..p };
        assert_eq!(interface_power(&zero), 0.0);
        let doubled = EnergyParams { b_adc: 24.0, b_dac: 28.0, ..p };
        assert!((interface_power(&doubled) - 0.325).abs() < 1e-12);
    }

    #[test]
    fn flops_examples() {
        let (corr, data) = baseband_flops(1200.0, 16, 129, 32, 16);
        assert_eq!(corr, 78_643_200.0);
        assert_eq!(baseband_flops(1200.0, 0, 129, 32, 16).0, 0.0);
        let (_, d2) = baseband_flops(1200.0, 16, 258, 32, 16);
        let (_, d0) = baseband_flops(1200.0, 16, 0, 32, 16);
        assert!(((d2 - d0) - 2.0 * (data - d0)).abs() < 1e-6);
    }

    #[test]
    fn pa_power_examples() {
        let r = total_power(16, 16, 0.0, &always_on(), &full_band());
        assert!((r.p_pa - 102.079).abs() < 0.01, "{}", r.p_pa);
        let r = total_power(16, 16, 0.5, &always_on(), &full_band());
        assert!((r.p_pa - 114.54).abs() < 0.01, "{}", r.p_pa);
    }

    #[test]
    fn m_terms_are_linear() {
        let frame = frame_split(200, 16, 0.7).unwrap();
        let p = EnergyParams::default();
        let a = total_power(16, 16, 0.5, &frame, &p);
        let b = total_power(32, 16, 0.5, &frame, &p);
        assert!((b.p_conv() - 2.0 * a.p_conv()).abs() < 1e-12);
        assert!(((b.p_rf - p.p_lo) - 2.0 * (a.p_rf - p.p_lo)).abs() < 1e-12);
        assert!((b.p_bb - 2.0 * a.p_bb).abs() < 1e-12);
        assert!(b.total > a.total);
    }

    #[test]
    fn report_total_is_sum_of_parts() {
        let frame = frame_split(200, 16, 0.7).unwrap();
        let r = total_power(40, 16, 0.45, &frame, &EnergyParams::default());
        let sum = r.p_pa + r.p_rf + r.p_conv() + r.p_bb;
        assert!((r.total - sum).abs() < 1e-12);
    }

    #[test]
    fn efficiency_examples() {
        let p = EnergyParams::default();
        let frame = frame_split(200, 16, 0.7).unwrap();
        let r = total_power(32, 16, 0.45, &frame, &p);
        assert_eq!(energy_efficiency(0.0, &p, &r).unwrap().xi, 0.0);
        let x1 = energy_efficiency(10.0, &p, &r).unwrap().xi;
        let x2 = energy_efficiency(20.0, &p, &r).unwrap().xi;
        assert!((x2 - 2.0 * x1).abs() < 1e-9 * x2);
        let lossy = total_power(32, 16, 1.0, &frame, &p);
        assert!(energy_efficiency(10.0, &p, &lossy).unwrap().xi < x1);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let p = EnergyParams::from_json_str(r#"{"kappa": 0.5}"#).unwrap();
        assert_eq!(p.kappa, 0.5);
        assert_eq!(p.p_adc, 0.233);
        assert!(EnergyParams::from_json_str(r#"{"kappa": 1.5}"#).is_err());
        assert!(EnergyParams::from_json_str(r#"{"p_lo": -1}"#).is_err());
        let text = serde_json::to_string(&EnergyParams::default()).unwrap();
        assert_eq!(EnergyParams::from_json_str(&text).unwrap(), EnergyParams::default());
    }
}
