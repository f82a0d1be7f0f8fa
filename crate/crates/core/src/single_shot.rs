//! The two-stage single-shot protocol.
//!
//! Each of `N` cycles adds fresh phase-flip noise, measures a noisy syndrome,
//! repairs it with decoder 1 against the metachecks (stage 1), and corrects
//! the qubits with decoder 2 (stage 2). A repaired syndrome that passes the
//! metachecks but is not a valid syndrome triggers the failure-mode
//! subroutine, which redoes stage 1 against `M' = (M; L_M)`. A final
//! noiseless round follows, and the trial succeeds iff the leftover error is
//! a stabiliser.

use crate::bp_osd::{BpConfig, BpOsdDecoder, DecoderError, OsdConfig};
use crate::gf2::{BitVector, SparseBitMatrix};
use crate::matching::{MatchingConfig, MatchingError, MwpmRepair};
use crate::noise::{sample_qubit_error, sample_syndrome_error, NoiseModel, Phase, RngStream};
use crate::product_code::ProductCode;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Matching for stage 1, BP+OSD for stage 2.
    MwpmBposd,
    /// BP+OSD for both stages.
    BposdX2,
    /// Perfect measurements and no noisy cycles: one decode of an exact
    /// syndrome.
    CodeCapacity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BpOsdSettings {
    pub bp: BpConfig,
    pub osd: OsdConfig,
}

impl Default for BpOsdSettings {
    fn default() -> Self {
        Self { bp: BpConfig::default(), osd: OsdConfig::default() }
    }
}

/// Smallest prior handed to BP; a zero-rate channel would give infinite LLRs.
pub const MIN_PRIOR: f64 = 1e-6;

fn prior_for(rate: f64) -> f64 {
    rate.clamp(MIN_PRIOR, 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub cycles: usize,
    pub strategy: Strategy,
    pub noise: NoiseModel,
    #[serde(default)]
    pub stage1: BpOsdSettings,
    #[serde(default)]
    pub stage2: BpOsdSettings,
    #[serde(default)]
    pub matching: MatchingConfig,
    #[serde(default = "default_true")]
    pub failure_subroutine: bool,
    /// Use the configured BP priors as given instead of the noise rates.
    #[serde(default)]
    pub fixed_priors: bool,
}

fn default_true() -> bool {
    true
}

impl ProtocolConfig {
    pub fn new(strategy: Strategy, cycles: usize, noise: NoiseModel) -> Self {
        Self {
            cycles,
            strategy,
            noise,
            stage1: BpOsdSettings::default(),
            stage2: BpOsdSettings::default(),
            matching: MatchingConfig::default(),
            failure_subroutine: true,
            fixed_priors: false,
        }
    }

    /// Code capacity forces `q = 0` and no noisy cycles.
    pub fn normalised(mut self) -> Self {
        if self.strategy == Strategy::CodeCapacity {
            self.cycles = 0;
            self.noise.q = 0.0;
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCause {
    /// Residual error is a nontrivial logical operator.
    Logical,
    /// Stage 1 left an invalid syndrome that could not be decoded.
    Metacode,
    /// Matching could not pair the defects.
    Unmatchable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub success: bool,
    pub cause: Option<FailureCause>,
    pub invalid_syndrome_events: usize,
    pub stage1_fallbacks: usize,
    /// `|e_Z|` after each noisy cycle's correction.
    pub residual_weight_trace: Vec<usize>,
}

/// Working vectors of one cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleState {
    pub e_z: BitVector,
    pub s_x: BitVector,
    pub m: BitVector,
    pub cycle_index: usize,
}

impl CycleState {
    pub fn new(code: &ProductCode) -> Self {
        Self {
            e_z: BitVector::zeros(code.n()),
            s_x: BitVector::zeros(code.hx().rows()),
            m: BitVector::zeros(code.meta().rows()),
            cycle_index: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Decoder(#[from] DecoderError),
    #[error(transparent)]
    Matching(#[from] MatchingError),
}

enum Stage1 {
    Matching(MwpmRepair),
    BpOsd(BpOsdDecoder),
}

/// Decoders for one code and configuration. Holds scratch buffers, so each
/// worker thread owns its own runner.
pub struct TrialRunner<'a> {
    code: &'a ProductCode,
    cfg: ProtocolConfig,
    stage1: Option<Stage1>,
    // built only when stage 1 falls back from matching
    stage1_bp: Option<BpOsdDecoder>,
    subroutine: Option<BpOsdDecoder>,
    stage2: BpOsdDecoder,
}

/// `M' = (M; L_M)`.
pub fn extended_metachecks(code: &ProductCode) -> SparseBitMatrix {
    SparseBitMatrix::stack_rows(&[code.meta(), &code.lm]).expect("same column count")
}

impl<'a> TrialRunner<'a> {
    pub fn new(code: &'a ProductCode, cfg: ProtocolConfig) -> Result<Self, ProtocolError> {
        let cfg = cfg.normalised();
        let stage_bp = |settings: BpOsdSettings, rate: f64| BpConfig {
            prior: if cfg.fixed_priors { settings.bp.prior } else { prior_for(rate) },
            ..settings.bp
        };
        let bp1 = stage_bp(cfg.stage1, cfg.noise.q);
        let bp2 = stage_bp(cfg.stage2, cfg.noise.p);
        let stage2 = BpOsdDecoder::new(code.hx().clone(), bp2, cfg.stage2.osd)?;
        let (stage1, stage1_bp) = match cfg.strategy {
            Strategy::CodeCapacity => (None, None),
            Strategy::BposdX2 => {
                (Some(Stage1::BpOsd(BpOsdDecoder::new(code.meta().clone(), bp1, cfg.stage1.osd)?)), None)
            }
            Strategy::MwpmBposd => match MwpmRepair::new(code.meta(), cfg.matching) {
                Ok(m) => (Some(Stage1::Matching(m)), None),
                Err(MatchingError::Inapplicable { .. }) => {
                    (None, Some(BpOsdDecoder::new(code.meta().clone(), bp1, cfg.stage1.osd)?))
                }
                Err(e) => return Err(e.into()),
            },
        };
        let subroutine = if cfg.failure_subroutine && code.km() > 0 && cfg.strategy != Strategy::CodeCapacity {
            Some(BpOsdDecoder::new(extended_metachecks(code), bp1, cfg.stage1.osd)?)
        } else {
            None
        };
        Ok(Self { code, cfg, stage1, stage1_bp, subroutine, stage2 })
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.cfg
    }

    /// Stage 1 on metasyndrome `m`; returns `r_M` with `M r_M = m`.
    /// The flag reports a fallback from matching to BP+OSD.
    fn stage1_repair(&mut self, m: &BitVector) -> Result<(BitVector, bool), ProtocolError> {
        if m.is_zero() {
            return Ok((BitVector::zeros(self.code.meta().cols()), false));
        }
        match (&mut self.stage1, &mut self.stage1_bp) {
            (Some(Stage1::Matching(mw)), _) => Ok((mw.repair(m)?, false)),
            (Some(Stage1::BpOsd(dec)), _) => Ok((dec.decode(m)?.correction, false)),
            (None, Some(dec)) => Ok((dec.decode(m)?.correction, true)),
            (None, None) => unreachable!("stage 1 requested in code-capacity mode"),
        }
    }

    /// Redoes stage 1 on the noisy syndrome `s_noisy` against `M'`.
    pub fn failure_mode_repair(&mut self, s_noisy: &BitVector, m: &BitVector) -> Result<BitVector, ProtocolError> {
        let dec = self.subroutine.as_mut().expect("subroutine decoder built");
        let lm_s = self.code.lm.mat_vec(s_noisy).expect("lengths match");
        let target = m.concat(&lm_s);
        Ok(dec.decode(&target)?.correction)
    }

    /// Algorithm 1 for one trial.
    pub fn run(&mut self, master_seed: u64, trial: u64) -> TrialOutcome {
        let code = self.code;
        let n = code.n();
        let mut st = CycleState::new(code);
        let mut out = TrialOutcome {
            success: false,
            cause: None,
            invalid_syndrome_events: 0,
            stage1_fallbacks: 0,
            residual_weight_trace: Vec::with_capacity(self.cfg.cycles),
        };
        let fail = |mut out: TrialOutcome, cause| {
            out.cause = Some(cause);
            out
        };
        let stream = |cycle: usize, phase| RngStream::new(master_seed, trial, cycle as u64, phase);
        let NoiseModel { p, q } = self.cfg.noise;

        for j in 0..self.cfg.cycles {
            st.cycle_index = j;
            st.e_z.xor_assign(&sample_qubit_error(n, p, &stream(j, Phase::QubitError)));
            st.s_x = code.hx().mat_vec(&st.e_z).expect("lengths match");
            st.s_x.xor_assign(&sample_syndrome_error(st.s_x.len(), q, &stream(j, Phase::SyndromeError)));
            st.m = code.meta().mat_vec(&st.s_x).expect("lengths match");

            let r_m = match self.stage1_repair(&st.m) {
                Ok((r, fell_back)) => {
                    out.stage1_fallbacks += fell_back as usize;
                    r
                }
                Err(ProtocolError::Matching(MatchingError::Unmatchable { .. })) => {
                    return fail(out, FailureCause::Unmatchable)
                }
                Err(_) => return fail(out, FailureCause::Metacode),
            };
            st.s_x.xor_assign(&r_m);

            if code.is_invalid_syndrome(&st.s_x) {
                out.invalid_syndrome_events += 1;
                if self.subroutine.is_some() {
                    st.s_x.xor_assign(&r_m);
                    if matches!(self.stage1, Some(Stage1::Matching(_))) {
                        out.stage1_fallbacks += 1;
                    }
                    match self.failure_mode_repair(&st.s_x, &st.m) {
                        Ok(r) => st.s_x.xor_assign(&r),
                        Err(_) => return fail(out, FailureCause::Metacode),
                    }
                    let meta_ok = code.meta().mat_vec(&st.s_x).expect("lengths match").is_zero();
                    if !meta_ok || code.is_invalid_syndrome(&st.s_x) {
                        return fail(out, FailureCause::Metacode);
                    }
                }
            }

            match self.stage2.decode(&st.s_x) {
                Ok(d) => st.e_z.xor_assign(&d.correction),
                Err(_) => return fail(out, FailureCause::Metacode),
            }
            out.residual_weight_trace.push(st.e_z.weight());
        }

        let last = self.cfg.cycles;
        st.cycle_index = last;
        st.e_z.xor_assign(&sample_qubit_error(n, p, &stream(last, Phase::QubitError)));
        st.s_x = code.hx().mat_vec(&st.e_z).expect("lengths match");
        match self.stage2.decode(&st.s_x) {
            Ok(d) => st.e_z.xor_assign(&d.correction),
            Err(_) => return fail(out, FailureCause::Metacode),
        }
        if code.is_stabiliser(&st.e_z) {
            out.success = true;
            out
        } else {
            fail(out, FailureCause::Logical)
        }
    }
}

/// One trial with freshly built decoders.
pub fn run_trial(code: &ProductCode, cfg: &ProtocolConfig, master_seed: u64, trial: u64) -> Result<TrialOutcome, ProtocolError> {
    Ok(TrialRunner::new(code, *cfg)?.run(master_seed, trial))
}

/// True iff `lm · s ≠ 0`.
pub fn is_invalid_syndrome(code: &ProductCode, s: &BitVector) -> bool {
    code.is_invalid_syndrome(s)
}
