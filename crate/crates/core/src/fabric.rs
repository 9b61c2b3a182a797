//! RF switching-fabric synthesis and critical-path insertion loss.
//!
//! A fabric has two stages: the RF-chain stage, where each chain fans out to
//! `t_rf` throws, and the antenna stage, where each antenna port gathers
//! `t_an` throws. Each stage is built by cascading basic SPXT switches from a
//! [`SwitchCatalog`]; the loss of a design is the sum of the losses of every
//! basic switch crossed along the worst input-output path.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::LossScalar;

#[derive(Debug, Error)]
pub enum FabricError {
    #[error("invalid dimensions: need 1 <= M <= N, got N={n}, M={m}")]
    InvalidDimensions { n: usize, m: usize },
    #[error("invalid switch catalog: {0}")]
    InvalidCatalog(String),
    #[error("no throw count >= {0} factors into the catalog switches")]
    Unfactorizable(u64),
    #[error("reading catalog {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing catalog: {0}")]
    Json(#[from] serde_json::Error),
}

/// The four switching architectures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ArchitectureKind {
    /// Fully flexible, every RF chain wired to every antenna port.
    FfFull,
    /// Fully flexible with the fewest internal connections.
    FfMinConn,
    /// Fully flexible with stage sizes chosen to minimise insertion loss.
    FfMinLoss,
    /// Partially connected: each chain reaches an interleaved antenna subset.
    Partial,
}

impl ArchitectureKind {
    pub const ALL: [ArchitectureKind; 4] = [Self::FfFull, Self::FfMinConn, Self::FfMinLoss, Self::Partial];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::FfFull => "FF_FULL",
            Self::FfMinConn => "FF_MIN_CONN",
            Self::FfMinLoss => "FF_MIN_LOSS",
            Self::Partial => "PARTIAL",
        }
    }

    pub fn is_fully_flexible(self) -> bool {
        !matches!(self, Self::Partial)
    }
}

impl fmt::Display for ArchitectureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ArchitectureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "FF_FULL" => Ok(Self::FfFull),
            "FF_MIN_CONN" => Ok(Self::FfMinConn),
            "FF_MIN_LOSS" => Ok(Self::FfMinLoss),
            "PARTIAL" => Ok(Self::Partial),
            other => Err(format!("unknown architecture `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchEntry<L> {
    pub throws: u32,
    pub loss_db: L,
}

#[derive(Deserialize)]
struct RawEntry {
    throws: u32,
    loss_db: f64,
}

/// Basic-switch inventory ordered by strictly decreasing throw count.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchCatalog<L> {
    entries: Vec<SwitchEntry<L>>,
}

impl<L: LossScalar> SwitchCatalog<L> {
    /// Builds a catalog, sorting entries by decreasing throws.
    pub fn new(mut entries: Vec<SwitchEntry<L>>) -> Result<Self, FabricError> {
        if entries.is_empty() {
            return Err(FabricError::InvalidCatalog("catalog is empty".into()));
        }
        entries.sort_by_key(|e| std::cmp::Reverse(e.throws));
        for pair in entries.windows(2) {
            if pair[0].throws == pair[1].throws {
                return Err(FabricError::InvalidCatalog(format!("duplicate SP{}T entry", pair[0].throws)));
            }
        }
        if let Some(e) = entries.iter().find(|e| e.throws < 2) {
            return Err(FabricError::InvalidCatalog(format!("switch with {} throws", e.throws)));
        }
        if let Some(e) = entries.iter().find(|e| e.loss_db < L::zero()) {
            return Err(FabricError::InvalidCatalog(format!("negative loss on SP{}T", e.throws)));
        }
        Ok(Self { entries })
    }

    /// SP4T 0.45 dB, SP3T 0.45 dB, SP2T 0.25 dB.
    pub fn standard() -> Self {
        let entry = |throws, db| SwitchEntry { throws, loss_db: L::from_db(db).expect("finite default loss") };
        Self { entries: vec![entry(4, 0.45), entry(3, 0.45), entry(2, 0.25)] }
    }

    /// Parses `[{"throws": 4, "loss_db": 0.45}, ...]`.
    pub fn from_json_str(json: &str) -> Result<Self, FabricError> {
        let raw: Vec<RawEntry> = serde_json::from_str(json)?;
        let entries = raw
            .into_iter()
            .map(|r| {
                L::from_db(r.loss_db)
                    .map(|loss_db| SwitchEntry { throws: r.throws, loss_db })
                    .ok_or_else(|| FabricError::InvalidCatalog(format!("unrepresentable loss {}", r.loss_db)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(entries)
    }

    /// Loads a catalog file, or the standard catalog when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Self, FabricError> {
        match path {
            None => Ok(Self::standard()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|source| FabricError::Io { path: p.display().to_string(), source })?;
                Self::from_json_str(&text)
            }
        }
    }

    pub fn entries(&self) -> &[SwitchEntry<L>] {
        &self.entries
    }

    pub fn throws(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(|e| u64::from(e.throws))
    }

    fn greedy(&self, t: u64) -> Greedy {
        let mut q = t;
        let mut q_trace = Vec::with_capacity(self.entries.len());
        let mut counts = Vec::with_capacity(self.entries.len());
        for b in self.throws() {
            q_trace.push(q);
            let mut s = 0;
            while q.is_multiple_of(b) {
                q /= b;
                s += 1;
            }
            counts.push(s);
        }
        Greedy { q_trace, counts, residual: q }
    }

    fn is_factorizable(&self, t: u64) -> bool {
        self.greedy(t).residual == 1
    }

    /// Loss of a single stage.
    pub fn stage_loss(&self, stage: &StageDecomposition) -> L {
        self.entries
            .iter()
            .zip(&stage.switch_counts)
            .fold(L::zero(), |acc, (e, &s)| acc + L::from_count(s) * e.loss_db)
    }
}

impl<L: LossScalar> Default for SwitchCatalog<L> {
    fn default() -> Self {
        Self::standard()
    }
}

struct Greedy {
    q_trace: Vec<u64>,
    counts: Vec<u32>,
    residual: u64,
}

/// Smallest throw count `>= t` that the catalog realises, `1` meaning no
/// switch at all.
///
/// Realisable means the largest-throw-first division leaves no residual, so
/// the result always decomposes cleanly with [`decompose_stage`].
pub fn round_up_factorizable<L: LossScalar>(t: u64, catalog: &SwitchCatalog<L>) -> Result<u64, FabricError> {
    let t = t.max(1);
    let smallest = catalog.throws().min().unwrap_or(2);
    let mut power = 1u64;
    while power < t {
        power = power.saturating_mul(smallest);
    }
    let limit = power.max(t.saturating_mul(64));
    (t..=limit).find(|&c| catalog.is_factorizable(c)).ok_or(FabricError::Unfactorizable(t))
}

/// Per-stage switch cascade.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageDecomposition {
    pub requested_throws: u64,
    /// Throws still to be realised when each catalog entry is reached.
    pub q_trace: Vec<u64>,
    /// Number of cascaded switches of each catalog entry.
    pub switch_counts: Vec<u32>,
    pub realized_throws: u64,
}

impl StageDecomposition {
    /// `q_trace` in the tabulated convention, where a stage that is already
    /// fully realised (remaining throws 1) is listed as 0.
    pub fn tabulated_q(&self) -> Vec<u64> {
        self.q_trace.iter().map(|&q| if q == 1 { 0 } else { q }).collect()
    }
}

/// Greedy largest-throw-first decomposition of a stage needing `t` throws.
pub fn decompose_stage<L: LossScalar>(t: u64, catalog: &SwitchCatalog<L>) -> Result<StageDecomposition, FabricError> {
    let realized = round_up_factorizable(t, catalog)?;
    let g = catalog.greedy(realized);
    debug_assert_eq!(g.residual, 1);
    Ok(StageDecomposition { requested_throws: t, q_trace: g.q_trace, switch_counts: g.counts, realized_throws: realized })
}

/// A synthesised switching network.
#[derive(Debug, Clone, PartialEq)]
pub struct FabricDesign<L> {
    pub kind: ArchitectureKind,
    pub n_antennas: usize,
    pub n_chains: usize,
    pub t_rf: u64,
    pub t_an: u64,
    pub rf_stage: StageDecomposition,
    pub an_stage: StageDecomposition,
    pub total_loss_db: L,
}

impl<L: LossScalar> FabricDesign<L> {
    /// Switch counts of both stages added per catalog entry.
    pub fn total_switch_counts(&self) -> Vec<u32> {
        self.rf_stage.switch_counts.iter().zip(&self.an_stage.switch_counts).map(|(a, b)| a + b).collect()
    }

    pub fn loss_db_f64(&self) -> f64 {
        self.total_loss_db.to_db()
    }

    /// Stage sizes, tabulated Q vectors, switch counts and loss.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "architecture": self.kind.as_str(),
            "N": self.n_antennas,
            "M": self.n_chains,
            "t_rf": self.t_rf,
            "t_an": self.t_an,
            "q_rf": self.rf_stage.tabulated_q(),
            "q_an": self.an_stage.tabulated_q(),
            "s_rf": self.rf_stage.switch_counts,
            "s_an": self.an_stage.switch_counts,
            "switch_counts": self.total_switch_counts(),
            "loss_db": self.loss_db_f64(),
        })
    }
}

/// Critical-path loss: every switch in both stages, weighted by its loss.
pub fn critical_path_loss<L: LossScalar>(design: &FabricDesign<L>, catalog: &SwitchCatalog<L>) -> L {
    catalog.stage_loss(&design.rf_stage) + catalog.stage_loss(&design.an_stage)
}

fn assemble<L: LossScalar>(
    kind: ArchitectureKind,
    n: usize,
    m: usize,
    rf_stage: StageDecomposition,
    an_stage: StageDecomposition,
    catalog: &SwitchCatalog<L>,
) -> FabricDesign<L> {
    let total_loss_db = catalog.stage_loss(&rf_stage) + catalog.stage_loss(&an_stage);
    FabricDesign {
        kind,
        n_antennas: n,
        n_chains: m,
        t_rf: rf_stage.realized_throws,
        t_an: an_stage.realized_throws,
        rf_stage,
        an_stage,
        total_loss_db,
    }
}

/// Lowest-loss stage among realisable throw counts in `[lo, 4 lo]`, smallest
/// throw count winning ties.
fn min_loss_stage<L: LossScalar>(lo: u64, catalog: &SwitchCatalog<L>) -> Result<(StageDecomposition, L), FabricError> {
    let mut best: Option<(StageDecomposition, L)> = None;
    for t in lo..=lo.saturating_mul(4) {
        if !catalog.is_factorizable(t) {
            continue;
        }
        let stage = decompose_stage(t, catalog)?;
        let loss = catalog.stage_loss(&stage);
        if best.as_ref().is_none_or(|(_, b)| loss < *b - L::tie_tolerance()) {
            best = Some((stage, loss));
        }
    }
    best.ok_or(FabricError::Unfactorizable(lo))
}

fn min_loss_design<L: LossScalar>(
    kind: ArchitectureKind,
    n: usize,
    m: usize,
    catalog: &SwitchCatalog<L>,
) -> Result<FabricDesign<L>, FabricError> {
    let (nn, mm) = (n as u64, m as u64);
    let lb = nn - mm + 1;
    let mut best: Option<(StageDecomposition, StageDecomposition, L)> = None;
    for t_rf in lb..=lb.saturating_mul(4) {
        if !catalog.is_factorizable(t_rf) {
            continue;
        }
        let rf = decompose_stage(t_rf, catalog)?;
        let (an, an_loss) = min_loss_stage(mm.min(t_rf), catalog)?;
        let loss = catalog.stage_loss(&rf) + an_loss;
        // Candidates arrive in increasing (t_rf, t_an), so strict
        // improvement keeps the lexicographically smallest optimum.
        if best.as_ref().is_none_or(|(_, _, b)| loss < *b - L::tie_tolerance()) {
            best = Some((rf, an, loss));
        }
    }
    let (rf, an, _) = best.ok_or(FabricError::Unfactorizable(lb))?;
    Ok(assemble(kind, n, m, rf, an, catalog))
}

/// Synthesises the fabric of `kind` for `n` antennas and `m` RF chains.
pub fn design_fabric<L: LossScalar>(
    n: usize,
    m: usize,
    kind: ArchitectureKind,
    catalog: &SwitchCatalog<L>,
) -> Result<FabricDesign<L>, FabricError> {
    if m < 1 || m > n {
        return Err(FabricError::InvalidDimensions { n, m });
    }
    let (nn, mm) = (n as u64, m as u64);
    let design = match kind {
        ArchitectureKind::FfFull => {
            let rf = decompose_stage(nn, catalog)?;
            let an = decompose_stage(mm, catalog)?;
            assemble(kind, n, m, rf, an, catalog)
        }
        ArchitectureKind::FfMinConn => {
            let rf = decompose_stage(nn - mm + 1, catalog)?;
            let an = decompose_stage(mm.min(rf.realized_throws), catalog)?;
            assemble(kind, n, m, rf, an, catalog)
        }
        ArchitectureKind::FfMinLoss => min_loss_design(kind, n, m, catalog)?,
        // A single chain that must reach every antenna is a fully flexible
        // fan-out, so it takes the cheapest realisable one.
        ArchitectureKind::Partial if m == 1 && n > 1 => min_loss_design(kind, n, m, catalog)?,
        ArchitectureKind::Partial => {
            let (t_rf, t_an) = partial_stage_throws(n, m);
            let rf = decompose_stage(t_rf, catalog)?;
            let an = decompose_stage(t_an, catalog)?;
            assemble(kind, n, m, rf, an, catalog)
        }
    };
    Ok(design)
}

/// Requested `(t_rf, t_an)` of the partially connected fabric.
///
/// With `m == n` every chain is wired straight to its own antenna.
pub fn partial_stage_throws(n: usize, m: usize) -> (u64, u64) {
    if m == n {
        return (1, 1);
    }
    let t_rf = n.div_ceil(m) as u64;
    let t_an = if n / m >= 2 { 1 } else { 2 };
    (t_rf, t_an)
}
