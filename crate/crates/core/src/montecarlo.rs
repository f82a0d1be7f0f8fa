//! Trial campaigns over a grid of code sizes, error rates and cycle counts.
//!
//! Every grid point gets its own master seed mixed from the campaign seed and
//! the point coordinates, and trial `t` always draws from stream `t`, so
//! results do not depend on the worker count or on how trials are batched.
//! Early stopping is decided on the in-order prefix of outcomes.

use crate::bp_osd::DecoderError;
use crate::matching::MatchingConfig;
use crate::noise::NoiseModel;
use crate::product_code::{BuiltinCode, CodeError, ProductCode, SCHEMA_VERSION};
use crate::single_shot::{BpOsdSettings, FailureCause, ProtocolConfig, ProtocolError, Strategy, TrialRunner};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

/// The paper-style stopping rule: at least this many failures per point.
pub const DEFAULT_MIN_FAILURES: u64 = 25;

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("invalid campaign: {0}")]
    Invalid(String),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("conflicting metadata: {0}")]
    Conflict(String),
    #[error("csv line {line}: {msg}")]
    Csv { line: usize, msg: String },
}

impl From<DecoderError> for CampaignError {
    fn from(e: DecoderError) -> Self {
        Self::Protocol(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QRule {
    /// `q = p`
    EqualP,
    Fixed { value: f64 },
    Zero,
}

impl QRule {
    pub fn q_for(self, p: f64) -> f64 {
        match self {
            Self::EqualP => p,
            Self::Fixed { value } => value,
            Self::Zero => 0.0,
        }
    }
}

/// Decoder settings shared by every grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecoderSpec {
    pub stage1: BpOsdSettings,
    pub stage2: BpOsdSettings,
    pub matching: MatchingConfig,
    pub failure_subroutine: bool,
    pub fixed_priors: bool,
}

impl Default for DecoderSpec {
    fn default() -> Self {
        Self {
            stage1: BpOsdSettings::default(),
            stage2: BpOsdSettings::default(),
            matching: MatchingConfig::default(),
            failure_subroutine: true,
            fixed_priors: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSpec {
    #[serde(default = "schema")]
    pub schema_version: u32,
    /// Builtin codes to sweep; ignored when codes are supplied directly.
    #[serde(default)]
    pub codes: Vec<BuiltinCode>,
    pub p: Vec<f64>,
    pub q_rule: QRule,
    pub cycles: Vec<usize>,
    pub strategy: Strategy,
    /// Trial budget per point.
    pub max_trials: u64,
    /// Stop a point once this many failures are seen; `null` runs the full
    /// budget.
    #[serde(default = "default_min_failures")]
    pub min_failures: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    /// Index of the first trial, for splitting a run across invocations.
    #[serde(default)]
    pub trial_offset: u64,
    #[serde(default)]
    pub decoder: DecoderSpec,
}

fn schema() -> u32 {
    SCHEMA_VERSION
}

fn default_min_failures() -> Option<u64> {
    Some(DEFAULT_MIN_FAILURES)
}

impl CampaignSpec {
    pub fn validate(&self) -> Result<(), CampaignError> {
        let bad = |m: String| Err(CampaignError::Invalid(m));
        if self.max_trials == 0 {
            return bad("max_trials must be at least 1".into());
        }
        if self.p.is_empty() || self.cycles.is_empty() {
            return bad("p and cycles must be nonempty".into());
        }
        for &p in &self.p {
            let q = self.q_rule.q_for(p);
            if let Err(e) = NoiseModel::new(p, q) {
                return bad(e.to_string());
            }
        }
        if self.min_failures == Some(0) {
            return bad("min_failures must be positive or null".into());
        }
        Ok(())
    }

    fn protocol(&self, p: f64, n: usize) -> ProtocolConfig {
        let noise = NoiseModel { p, q: self.q_rule.q_for(p) };
        let d = self.decoder;
        ProtocolConfig {
            cycles: n,
            strategy: self.strategy,
            noise,
            stage1: d.stage1,
            stage2: d.stage2,
            matching: d.matching,
            failure_subroutine: d.failure_subroutine,
            fixed_priors: d.fixed_priors,
        }
        .normalised()
    }

    pub fn metadata(&self) -> CampaignMeta {
        CampaignMeta {
            strategy: self.strategy,
            q_rule: self.q_rule,
            cycles: self.cycles.clone(),
            seed: self.seed,
            decoder: self.decoder,
        }
    }
}

/// What must agree for two datasets to be merged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignMeta {
    pub strategy: Strategy,
    pub q_rule: QRule,
    pub cycles: Vec<usize>,
    pub seed: u64,
    pub decoder: DecoderSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    #[serde(rename = "L")]
    pub l: usize,
    pub p: f64,
    pub q: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub trials: u64,
    pub failures: u64,
    pub p_fail: f64,
    pub ci95: f64,
    pub cause_logical: u64,
    pub cause_metacode: u64,
    pub cause_unmatchable: u64,
}

/// Half-width of the normal-approximation 95% interval.
pub fn ci95(p_fail: f64, trials: u64) -> f64 {
    1.96 * (p_fail * (1.0 - p_fail) / trials as f64).sqrt()
}

impl Record {
    fn key(&self) -> (usize, u64, u64, usize) {
        (self.l, self.p.to_bits(), self.q.to_bits(), self.n)
    }

    fn refresh(&mut self) {
        self.p_fail = self.failures as f64 / self.trials as f64;
        self.ci95 = ci95(self.p_fail, self.trials);
    }
}

pub const CSV_HEADER: &str = "L,p,q,N,trials,failures,p_fail,ci95,cause_logical,cause_metacode,cause_unmatchable";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdDataset {
    pub schema_version: u32,
    pub metadata: CampaignMeta,
    pub records: Vec<Record>,
}

impl ThresholdDataset {
    pub fn empty(metadata: CampaignMeta) -> Self {
        Self { schema_version: SCHEMA_VERSION, metadata, records: Vec::new() }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.l,
                r.p,
                r.q,
                r.n,
                r.trials,
                r.failures,
                r.p_fail,
                r.ci95,
                r.cause_logical,
                r.cause_metacode,
                r.cause_unmatchable
            )
            .expect("writing to a string");
        }
        out
    }
}

/// Parses the CSV written by [`ThresholdDataset::to_csv`].
pub fn records_from_csv(text: &str) -> Result<Vec<Record>, CampaignError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(CampaignError::Csv { line: 1, msg: "empty file".into() })?;
    if header.trim() != CSV_HEADER {
        return Err(CampaignError::Csv { line: 1, msg: format!("unexpected header '{header}'") });
    }
    lines
        .map(|(i, line)| {
            let line_no = i + 1;
            let err = |msg: String| CampaignError::Csv { line: line_no, msg };
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 11 {
                return Err(err(format!("expected 11 fields, found {}", f.len())));
            }
            let int = |j: usize| f[j].parse::<u64>().map_err(|_| err(format!("bad integer '{}'", f[j])));
            let float = |j: usize| f[j].parse::<f64>().map_err(|_| err(format!("bad number '{}'", f[j])));
            let mut r = Record {
                l: int(0)? as usize,
                p: float(1)?,
                q: float(2)?,
                n: int(3)? as usize,
                trials: int(4)?,
                failures: int(5)?,
                p_fail: 0.0,
                ci95: 0.0,
                cause_logical: int(8)?,
                cause_metacode: int(9)?,
                cause_unmatchable: int(10)?,
            };
            if r.trials == 0 || r.failures > r.trials {
                return Err(err("need 0 <= failures <= trials and trials >= 1".into()));
            }
            r.refresh();
            Ok(r)
        })
        .collect()
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Master seed of one grid point.
pub fn point_seed(seed: u64, l: usize, p: f64, q: f64, n: usize) -> u64 {
    [l as u64, p.to_bits(), q.to_bits(), n as u64].into_iter().fold(splitmix(seed), |h, v| splitmix(h ^ v))
}

/// Trials are run in batches of this many per worker between stop checks.
const BATCH_PER_THREAD: u64 = 32;

fn run_point(
    code: &ProductCode,
    cfg: ProtocolConfig,
    master: u64,
    offset: u64,
    max_trials: u64,
    min_failures: Option<u64>,
) -> Result<(u64, [u64; 3]), CampaignError> {
    // fail early on bad settings instead of inside the pool
    TrialRunner::new(code, cfg)?;
    let batch = BATCH_PER_THREAD * rayon::current_num_threads() as u64;
    let mut done = 0u64;
    let mut causes = [0u64; 3];
    let mut failures = 0u64;
    while done < max_trials {
        let end = (done + batch).min(max_trials);
        let outcomes: Vec<Option<FailureCause>> = (0..(end - done) as usize)
            .into_par_iter()
            .with_min_len(8)
            .map_init(
                || TrialRunner::new(code, cfg).expect("validated above"),
                |runner, i| runner.run(master, offset + done + i as u64).cause,
            )
            .collect();
        for cause in outcomes {
            done += 1;
            if let Some(c) = cause {
                failures += 1;
                causes[c as usize] += 1;
            }
            if min_failures.is_some_and(|m| failures >= m) {
                return Ok((done, causes));
            }
        }
    }
    Ok((done, causes))
}

/// Runs every grid point on the supplied `(size label, code)` pairs.
pub fn run_campaign_on(
    spec: &CampaignSpec,
    codes: &[(usize, ProductCode)],
    threads: Option<usize>,
) -> Result<ThresholdDataset, CampaignError> {
    spec.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t.max(1));
    }
    let pool = builder.build().map_err(|e| CampaignError::Invalid(e.to_string()))?;
    let mut dataset = ThresholdDataset::empty(spec.metadata());
    for (l, code) in codes {
        for &n in &spec.cycles {
            for &p in &spec.p {
                let cfg = spec.protocol(p, n);
                let q = cfg.noise.q;
                let master = point_seed(spec.seed, *l, p, q, cfg.cycles);
                let (trials, causes) = pool.install(|| {
                    run_point(code, cfg, master, spec.trial_offset, spec.max_trials, spec.min_failures)
                })?;
                let mut rec = Record {
                    l: *l,
                    p,
                    q,
                    n: cfg.cycles,
                    trials,
                    failures: causes.iter().sum(),
                    p_fail: 0.0,
                    ci95: 0.0,
                    cause_logical: causes[FailureCause::Logical as usize],
                    cause_metacode: causes[FailureCause::Metacode as usize],
                    cause_unmatchable: causes[FailureCause::Unmatchable as usize],
                };
                rec.refresh();
                dataset.records.push(rec);
            }
        }
    }
    Ok(dataset)
}

/// Builds the spec's builtin codes and runs the campaign.
pub fn run_campaign(spec: &CampaignSpec, threads: Option<usize>) -> Result<ThresholdDataset, CampaignError> {
    if spec.codes.is_empty() {
        return Err(CampaignError::Invalid("no codes given".into()));
    }
    let codes = spec
        .codes
        .iter()
        .map(|c| Ok((c.size(), c.build()?)))
        .collect::<Result<Vec<_>, CampaignError>>()?;
    run_campaign_on(spec, &codes, threads)
}

/// Sums trial and failure counts of matching grid points. Points present in
/// only one input are kept as they are.
pub fn merge_datasets(a: &ThresholdDataset, b: &ThresholdDataset) -> Result<ThresholdDataset, CampaignError> {
    if a.metadata != b.metadata {
        return Err(CampaignError::Conflict(format!("{:?} vs {:?}", a.metadata, b.metadata)));
    }
    let mut out = a.clone();
    for rb in &b.records {
        match out.records.iter_mut().find(|r| r.key() == rb.key()) {
            Some(r) => {
                r.trials += rb.trials;
                r.failures += rb.failures;
                r.cause_logical += rb.cause_logical;
                r.cause_metacode += rb.cause_metacode;
                r.cause_unmatchable += rb.cause_unmatchable;
                r.refresh();
            }
            None => out.records.push(rb.clone()),
        }
    }
    Ok(out)
}
