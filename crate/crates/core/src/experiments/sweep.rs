//! Runs every point of every scenario and collects the rows.

use crate::analysis::{
    approx_capacity, power_scaling_ff, power_scaling_pc, rank_set_distribution, ApproxMode, OrderStatSpec, OrderStatistics,
    RankSetOptions,
};
use crate::channel::{draw_channel, CovarianceSqrt, RngStream};
use crate::connectivity::{build_connectivity, ConnectivityMap};
use crate::energy::{energy_efficiency, total_power, EnergyParams};
use crate::fabric::{design_fabric, FabricDesign, SwitchCatalog};
use crate::linalg::CMatrix;
use crate::rates::{ergodic_mean, frame_split, rho_after_loss, sum_capacity, training_overhead, zf_sum_rate, FrameConfig};
use crate::scalar::{db_to_linear, MeanStderr};
use crate::selection::{select_csi, select_power_ff, select_power_pc, waterfill_users, SelectionMask};

use super::config::{ExperimentConfig, LossMode, Precoder, ScenarioConfig, ScenarioKind, SelectionMode};
use super::output::{ResultRow, ResultTable};
use super::ExperimentError;

/// Stream labels keeping the analytical draws apart from the channel draws.
const APPROX_STREAM: u64 = 0xA770;
const RANK_SET_STREAM: u64 = 0x4A4B;

/// One point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepPoint {
    pub m: usize,
    pub eta_coh: usize,
}

/// Points of a scenario: `eta_coh` outer, `M` inner.
pub fn sweep_points(sc: &ScenarioConfig) -> Vec<SweepPoint> {
    sc.frame.eta_coh.iter().flat_map(|&eta_coh| sc.m.iter().map(move |&m| SweepPoint { m, eta_coh })).collect()
}

/// Runs all scenarios. Invalid configurations fail up front; failures at
/// individual points become error rows and the run continues.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable, ExperimentError> {
    cfg.validate()?;
    let mut table = ResultTable::new(cfg.id.clone(), cfg.config_hash(), cfg.seed);
    for sc in &cfg.scenarios {
        for row in run_sweep(cfg, sc) {
            table.push(row);
        }
    }
    Ok(table)
}

/// Rows of one scenario, in point order.
pub fn run_sweep(cfg: &ExperimentConfig, sc: &ScenarioConfig) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    for point in sweep_points(sc) {
        let ctx = PointContext { cfg, sc, point };
        match ctx.run() {
            Ok(r) => rows.extend(r),
            Err(e) => rows.push(ctx.error_row(&e)),
        }
    }
    rows
}

struct PointContext<'a> {
    cfg: &'a ExperimentConfig,
    sc: &'a ScenarioConfig,
    point: SweepPoint,
}

impl PointContext<'_> {
    fn antennas(&self) -> usize {
        self.sc.antennas(self.point.m)
    }

    fn seed(&self) -> u64 {
        self.sc.seed.unwrap_or(self.cfg.seed)
    }

    fn primary_metric(&self) -> &'static str {
        match self.sc.kind {
            ScenarioKind::Simulate | ScenarioKind::ApproxSingle | ScenarioKind::ApproxMixture => "sum_rate",
            ScenarioKind::Power => "total_power_w",
            ScenarioKind::Loss => "loss_db",
        }
    }

    fn row(&self, metric: &str, value: f64, stderr: f64, trials: usize, loss_db: f64, prelog: f64) -> ResultRow {
        ResultRow {
            scenario_id: self.cfg.id.clone(),
            series: self.sc.series.clone(),
            kind: self.sc.kind.as_str().into(),
            metric: metric.into(),
            m: self.point.m,
            n: self.antennas(),
            k: self.sc.k,
            eta_coh: self.point.eta_coh,
            mode: self.sc.selection_mode.as_str().into(),
            architecture: self.architecture_label().into(),
            precoder: self.sc.precoder.as_str().into(),
            loss_mode: self.sc.loss_mode.as_str().into(),
            mean_rate: value,
            stderr,
            trials,
            loss_db,
            prelog,
            error: String::new(),
        }
    }

    fn architecture_label(&self) -> &'static str {
        if self.sc.selection_mode == SelectionMode::FullMimo && self.sc.kind != ScenarioKind::Loss {
            "NONE"
        } else {
            self.sc.architecture.as_str()
        }
    }

    fn error_row(&self, e: &ExperimentError) -> ResultRow {
        ResultRow { error: e.to_string(), ..self.row(self.primary_metric(), f64::NAN, f64::NAN, 0, f64::NAN, f64::NAN) }
    }

    fn fabric(&self) -> Result<Option<FabricDesign<f64>>, ExperimentError> {
        if self.sc.selection_mode == SelectionMode::FullMimo && self.sc.kind != ScenarioKind::Loss {
            return Ok(None);
        }
        let catalog = SwitchCatalog::<f64>::standard();
        Ok(Some(design_fabric(self.antennas(), self.point.m, self.sc.architecture, &catalog)?))
    }

    fn loss_db(&self) -> Result<f64, ExperimentError> {
        Ok(self.fabric()?.map_or(0.0, |d| d.loss_db_f64()))
    }

    fn connectivity(&self) -> Result<Option<ConnectivityMap>, ExperimentError> {
        if self.sc.selection_mode.is_partial() {
            Ok(Some(build_connectivity(self.antennas(), self.point.m)?))
        } else {
            Ok(None)
        }
    }

    fn frame(&self) -> Result<FrameConfig, ExperimentError> {
        if !self.sc.frame.overhead {
            return Ok(FrameConfig::no_overhead());
        }
        let n = self.antennas();
        let eta_tr = training_overhead(n, self.point.m.min(n), self.sc.k, self.sc.selection_mode.training());
        Ok(frame_split(self.point.eta_coh, eta_tr, self.sc.frame.dl_fraction)?)
    }

    /// SNR reaching the users.
    fn rho_eff(&self, loss_db: f64) -> f64 {
        let rho = db_to_linear(self.sc.rho_db);
        match self.sc.loss_mode {
            LossMode::DivideRho => rho_after_loss(rho, loss_db),
            LossMode::Ignore | LossMode::PaCompensate => rho,
        }
    }

    /// Loss the PAs make up for.
    fn pa_loss_db(&self, loss_db: f64) -> f64 {
        if self.sc.loss_mode == LossMode::PaCompensate {
            loss_db
        } else {
            0.0
        }
    }

    fn run(&self) -> Result<Vec<ResultRow>, ExperimentError> {
        match self.sc.kind {
            ScenarioKind::Simulate => self.simulate(),
            ScenarioKind::ApproxSingle => self.approximate(ApproxMode::Single),
            ScenarioKind::ApproxMixture => self.approximate(ApproxMode::Mixture),
            ScenarioKind::Power => self.power(),
            ScenarioKind::Loss => self.loss(),
        }
    }

    fn simulate(&self) -> Result<Vec<ResultRow>, ExperimentError> {
        let sc = self.sc;
        let (n, m) = (self.antennas(), self.point.m);
        let loss_db = self.loss_db()?;
        let map = self.connectivity()?;
        let frame = self.frame()?;
        let rho = self.rho_eff(loss_db);
        let cov = sc.covariance.to_spec::<f64>(sc.k)?.sqrt(sc.k)?;
        let stream = RngStream::new(self.seed());
        let prelog = frame.prelog();
        let est = ergodic_mean(sc.trials, |t| simulate_trial(sc, n, m, map.as_ref(), &cov, &stream, t, rho, prelog))?;
        let mut rows = vec![self.row("sum_rate", est.mean, est.stderr, est.count, loss_db, prelog)];
        if sc.energy {
            rows.extend(self.energy_rows(&frame, loss_db, Some(est))?);
        }
        Ok(rows)
    }

    fn approximate(&self, mode: ApproxMode) -> Result<Vec<ResultRow>, ExperimentError> {
        let sc = self.sc;
        let (n, m) = (self.antennas(), self.point.m);
        let loss_db = self.loss_db()?;
        let frame = self.frame()?;
        let stats = OrderStatistics::<f64>::new(OrderStatSpec::new(n, sc.k))?;
        let base = RngStream::new(self.seed());
        let ps = match self.connectivity()? {
            Some(map) => {
                let options = RankSetOptions { stream: base.derive(RANK_SET_STREAM), ..RankSetOptions::default() };
                power_scaling_pc(&rank_set_distribution(&map, &options)?, &stats)?
            }
            None => power_scaling_ff(m, &stats)?,
        };
        // same G draws for both modes at a given M
        let stream = base.derive(APPROX_STREAM).derive(m as u64);
        let est = approx_capacity(&ps, sc.k, m, self.rho_eff(loss_db), mode, sc.trials, &stream)?;
        let prelog = frame.prelog();
        Ok(vec![self.row("sum_rate", est.mean * prelog, est.stderr * prelog, est.count, loss_db, prelog)])
    }

    fn power(&self) -> Result<Vec<ResultRow>, ExperimentError> {
        let loss_db = self.loss_db()?;
        self.energy_rows(&self.frame()?, loss_db, None)
    }

    fn energy_rows(&self, frame: &FrameConfig, loss_db: f64, rate: Option<MeanStderr>) -> Result<Vec<ResultRow>, ExperimentError> {
        let params: &EnergyParams = &self.cfg.energy;
        let report = total_power(self.point.m, self.sc.k, self.pa_loss_db(loss_db), frame, params);
        let prelog = frame.prelog();
        let trials = rate.map_or(0, |r| r.count);
        let mut rows: Vec<ResultRow> = [
            ("total_power_w", report.total),
            ("p_pa_w", report.p_pa),
            ("p_rf_w", report.p_rf),
            ("p_conv_w", report.p_conv()),
            ("p_bb_w", report.p_bb),
        ]
        .into_iter()
        .map(|(metric, v)| self.row(metric, v, 0.0, trials, loss_db, prelog))
        .collect();
        if let Some(rate) = rate {
            let report = energy_efficiency(rate.mean, params, &report)?;
            let stderr = rate.stderr * params.rate_bandwidth_hz() / report.total;
            rows.push(self.row("xi_bits_per_joule", report.xi, stderr, trials, loss_db, prelog));
        }
        Ok(rows)
    }

    fn loss(&self) -> Result<Vec<ResultRow>, ExperimentError> {
        let design = self.fabric()?.ok_or_else(|| ExperimentError::InvalidConfig("no fabric to report".into()))?;
        let loss_db = design.loss_db_f64();
        Ok(vec![
            self.row("loss_db", loss_db, 0.0, 0, loss_db, f64::NAN),
            self.row("t_rf", design.t_rf as f64, 0.0, 0, loss_db, f64::NAN),
            self.row("t_an", design.t_an as f64, 0.0, 0, loss_db, f64::NAN),
        ])
    }
}

/// Draw, select, allocate and rate one channel realisation.
#[allow(clippy::too_many_arguments)]
fn simulate_trial(
    sc: &ScenarioConfig,
    n: usize,
    m: usize,
    map: Option<&ConnectivityMap>,
    cov: &CovarianceSqrt<f64>,
    stream: &RngStream,
    trial: u64,
    rho: f64,
    prelog: f64,
) -> Result<f64, ExperimentError> {
    let h = draw_channel::<f64>(sc.k, n, cov, stream, trial)?;
    let mask = match sc.selection_mode {
        SelectionMode::FullMimo => SelectionMask::all(n),
        SelectionMode::PowerFf => select_power_ff(h.column_powers().as_slice(), m)?,
        SelectionMode::PowerPc => {
            let map = map.ok_or_else(|| ExperimentError::InvalidConfig("partial selection without a map".into()))?;
            select_power_pc(h.column_powers().as_slice(), map)?
        }
        SelectionMode::CsiFf => select_csi(h.matrix(), m, None, rho)?.mask,
        SelectionMode::CsiPc => select_csi(h.matrix(), m, map, rho)?.mask,
    };
    let h_sel: CMatrix<f64> = h.select_columns(mask.indices());
    let rate = match sc.precoder {
        Precoder::DpcEq2 => sum_capacity(&h_sel, &waterfill_users(&h_sel, rho)?, rho, prelog)?,
        Precoder::Zf => zf_sum_rate(&h_sel, rho, prelog).sum_rate,
    };
    Ok(rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fabric::ArchitectureKind;

    fn experiment(scenarios: Vec<ScenarioConfig>) -> ExperimentConfig {
        ExperimentConfig { id: "unit".into(), seed: 3, scenarios, energy: EnergyParams::default() }
    }

    #[test]
    fn one_point_one_trial_gives_one_row() {
        let cfg = experiment(vec![ScenarioConfig { m: vec![2], trials: 1, ..Default::default() }]);
        let t = run_experiment(&cfg).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].trials, 1);
        assert!(t.rows[0].mean_rate > 0.0);
    }

    #[test]
    fn reruns_are_byte_identical() {
        let sc = ScenarioConfig { m: vec![2, 3, 5], trials: 50, selection_mode: SelectionMode::CsiFf, ..Default::default() };
        let cfg = experiment(vec![sc]);
        let a = run_experiment(&cfg).unwrap().to_csv_string();
        let b = run_experiment(&cfg).unwrap().to_csv_string();
        assert_eq!(a, b);
    }

    #[test]
    fn infeasible_point_is_recorded_and_run_continues() {
        let mut sc = ScenarioConfig { m: vec![2, 4], trials: 5, selection_mode: SelectionMode::CsiFf, ..Default::default() };
        sc.frame.overhead = true;
        // CSI training at M = 2 needs 2 * 4 = 8 symbols
        sc.frame.eta_coh = vec![8];
        let t = run_experiment(&experiment(vec![sc])).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert!(t.rows[0].is_error());
        assert!(!t.rows[1].is_error());
    }

    #[test]
    fn full_mimo_uses_m_antennas_without_loss() {
        let sc = ScenarioConfig {
            m: vec![3],
            trials: 2,
            selection_mode: SelectionMode::FullMimo,
            loss_mode: LossMode::DivideRho,
            ..Default::default()
        };
        let t = run_experiment(&experiment(vec![sc])).unwrap();
        assert_eq!((t.rows[0].n, t.rows[0].loss_db), (3, 0.0));
    }

    #[test]
    fn energy_rows_follow_rate() {
        let sc = ScenarioConfig {
            n: 16,
            m: vec![8],
            k: 4,
            trials: 20,
            architecture: ArchitectureKind::Partial,
            selection_mode: SelectionMode::PowerPc,
            loss_mode: LossMode::PaCompensate,
            precoder: Precoder::Zf,
            energy: true,
            ..Default::default()
        };
        let t = run_experiment(&experiment(vec![sc])).unwrap();
        let metrics: Vec<&str> = t.rows.iter().map(|r| r.metric.as_str()).collect();
        assert_eq!(metrics, ["sum_rate", "total_power_w", "p_pa_w", "p_rf_w", "p_conv_w", "p_bb_w", "xi_bits_per_joule"]);
        let xi = t.rows[6].mean_rate;
        let expected = t.rows[0].mean_rate * EnergyParams::default().rate_bandwidth_hz() / t.rows[1].mean_rate;
        assert!((xi / expected - 1.0).abs() < 1e-12);
    }

    #[test]
    fn loss_rows_need_no_trials() {
        let sc = ScenarioConfig { kind: ScenarioKind::Loss, n: 128, m: vec![64], architecture: ArchitectureKind::Partial, ..Default::default() };
        let t = run_experiment(&experiment(vec![sc])).unwrap();
        assert_eq!(t.rows[0].mean_rate, 0.25);
        assert_eq!((t.rows[1].mean_rate, t.rows[2].mean_rate), (2.0, 1.0));
    }
}
