//! Belief propagation with ordered-statistics post-processing.
//!
//! BP passes log-likelihood ratios along the Tanner graph of `H`. When it
//! fails to find a vector matching the syndrome, OSD ranks the bits by their
//! posterior LLR (most likely flipped first, ties by index), takes the
//! first independent columns of `H` in that order and solves on them.
//!
//! The elimination is incremental: columns enter an [`EchelonBasis`] one at a
//! time while the syndrome is reduced alongside, and the scan stops as soon
//! as the reduced syndrome vanishes. The result equals the textbook OSD-0
//! answer because the solution on an independent set is unique.

use crate::gf2::{BitVector, EchelonBasis, Reduction, SparseBitMatrix};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// LLR magnitude cap applied to messages and to the ranking values.
pub const LLR_CLAMP: f64 = 30.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecoderError {
    #[error("syndrome length {found} does not match {expected} checks")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unsatisfiable syndrome: not in the column space of the check matrix")]
    Unsatisfiable,
    #[error("invalid decoder configuration: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BpVariant {
    SumProduct,
    MinSum { scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    Parallel,
    Serial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BpConfig {
    pub max_iters: usize,
    pub variant: BpVariant,
    pub schedule: Schedule,
    /// Channel error probability used as the prior of every bit.
    pub prior: f64,
}

impl Default for BpConfig {
    fn default() -> Self {
        Self {
            max_iters: 30,
            variant: BpVariant::MinSum { scale: 0.625 },
            schedule: Schedule::Parallel,
            prior: 0.05,
        }
    }
}

impl BpConfig {
    pub fn validate(&self) -> Result<(), DecoderError> {
        if self.max_iters == 0 {
            return Err(DecoderError::BadConfig("max_iters must be at least 1".into()));
        }
        if let BpVariant::MinSum { scale } = self.variant {
            if !(scale > 0.0 && scale <= 1.0) {
                return Err(DecoderError::BadConfig(format!("min-sum scale {scale} outside (0, 1]")));
            }
        }
        if !(self.prior > 0.0 && self.prior < 1.0) {
            return Err(DecoderError::BadConfig(format!("prior {} outside (0, 1)", self.prior)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "w")]
pub enum OsdOrder {
    Osd0,
    Exhaustive(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct OsdConfig {
    pub order: OsdOrder,
    /// Largest accepted exhaustive order.
    pub cap: usize,
}

impl Default for OsdConfig {
    fn default() -> Self {
        Self { order: OsdOrder::Osd0, cap: 6 }
    }
}

impl OsdConfig {
    pub fn validate(&self) -> Result<(), DecoderError> {
        match self.order {
            OsdOrder::Exhaustive(w) if w > self.cap => {
                Err(DecoderError::BadConfig(format!("OSD order {w} above cap {}", self.cap)))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BpOutput {
    pub soft: Vec<f64>,
    pub hard: BitVector,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub correction: BitVector,
    pub bp_converged: bool,
}

/// BP+OSD decoder for one check matrix with reusable message buffers.
#[derive(Debug, Clone)]
pub struct BpOsdDecoder {
    h: SparseBitMatrix,
    bp: BpConfig,
    osd: OsdConfig,
    // edges are grouped by check; var_edges lists each variable's edges
    edge_check: Vec<usize>,
    check_start: Vec<usize>,
    var_edges: Vec<Vec<usize>>,
    to_check: Vec<f64>,
    to_var: Vec<f64>,
    posterior: Vec<f64>,
    syndrome_scratch: BitVector,
}

impl BpOsdDecoder {
    pub fn new(h: SparseBitMatrix, bp: BpConfig, osd: OsdConfig) -> Result<Self, DecoderError> {
        bp.validate()?;
        osd.validate()?;
        let mut edge_check = Vec::with_capacity(h.nnz());
        let mut check_start = Vec::with_capacity(h.rows() + 1);
        let mut var_edges = vec![Vec::new(); h.cols()];
        for c in 0..h.rows() {
            check_start.push(edge_check.len());
            for &v in h.row(c) {
                var_edges[v].push(edge_check.len());
                edge_check.push(c);
            }
        }
        check_start.push(edge_check.len());
        let e = edge_check.len();
        Ok(Self {
            syndrome_scratch: BitVector::zeros(h.rows()),
            posterior: vec![0.0; h.cols()],
            to_check: vec![0.0; e],
            to_var: vec![0.0; e],
            edge_check,
            check_start,
            var_edges,
            h,
            bp,
            osd,
        })
    }

    pub fn matrix(&self) -> &SparseBitMatrix {
        &self.h
    }

    pub fn bp_config(&self) -> &BpConfig {
        &self.bp
    }

    pub fn set_prior(&mut self, prior: f64) -> Result<(), DecoderError> {
        let cfg = BpConfig { prior, ..self.bp };
        cfg.validate()?;
        self.bp = cfg;
        Ok(())
    }

    fn check_len(&self, s: &BitVector) -> Result<(), DecoderError> {
        if s.len() != self.h.rows() {
            return Err(DecoderError::DimensionMismatch { expected: self.h.rows(), found: s.len() });
        }
        Ok(())
    }

    fn satisfies(&mut self, x: &BitVector, s: &BitVector) -> bool {
        self.h.mat_vec_into(x, &mut self.syndrome_scratch);
        &self.syndrome_scratch == s
    }

    /// Runs at most `max_iters` BP iterations.
    pub fn bp_decode(&mut self, s: &BitVector) -> Result<BpOutput, DecoderError> {
        self.check_len(s)?;
        let n = self.h.cols();
        let prior = ((1.0 - self.bp.prior) / self.bp.prior).ln().clamp(-LLR_CLAMP, LLR_CLAMP);
        // hard decision of the prior alone
        let mut hard = if prior < 0.0 { BitVector::ones(n) } else { BitVector::zeros(n) };
        if self.satisfies(&hard, s) {
            return Ok(BpOutput { soft: vec![prior; n], hard, converged: true, iterations: 0 });
        }
        self.to_check.iter_mut().for_each(|m| *m = prior);
        self.to_var.iter_mut().for_each(|m| *m = 0.0);
        let mut iterations = 0;
        let mut converged = false;
        while iterations < self.bp.max_iters {
            iterations += 1;
            match self.bp.schedule {
                Schedule::Parallel => {
                    for c in 0..self.h.rows() {
                        self.update_check(c, s.get(c));
                    }
                    for v in 0..n {
                        self.update_var(v, prior);
                    }
                }
                Schedule::Serial => {
                    for v in 0..n {
                        for i in 0..self.var_edges[v].len() {
                            let e = self.var_edges[v][i];
                            let c = self.edge_check[e];
                            self.to_var[e] = self.check_message(c, e, s.get(c));
                        }
                        self.update_var(v, prior);
                    }
                }
            }
            hard.clear();
            for v in 0..n {
                if self.posterior[v] < 0.0 {
                    hard.set(v, true);
                }
            }
            if self.satisfies(&hard, s) {
                converged = true;
                break;
            }
        }
        let soft = self.posterior.iter().map(|l| l.clamp(-LLR_CLAMP, LLR_CLAMP)).collect();
        Ok(BpOutput { soft, hard, converged, iterations })
    }

    fn update_var(&mut self, v: usize, prior: f64) {
        let total: f64 = prior + self.var_edges[v].iter().map(|&e| self.to_var[e]).sum::<f64>();
        self.posterior[v] = total;
        for &e in &self.var_edges[v] {
            self.to_check[e] = (total - self.to_var[e]).clamp(-LLR_CLAMP, LLR_CLAMP);
        }
    }

    /// Message from check `c` along edge `skip`, from the current inputs.
    fn check_message(&self, c: usize, skip: usize, syndrome_bit: bool) -> f64 {
        let edges = self.check_start[c]..self.check_start[c + 1];
        let sign0 = if syndrome_bit { -1.0 } else { 1.0 };
        match self.bp.variant {
            BpVariant::MinSum { scale } => {
                let mut sign = sign0;
                let mut min = f64::INFINITY;
                for e in edges.filter(|&e| e != skip) {
                    let m = self.to_check[e];
                    if m < 0.0 {
                        sign = -sign;
                    }
                    min = min.min(m.abs());
                }
                if min.is_infinite() {
                    0.0
                } else {
                    sign * scale * min
                }
            }
            BpVariant::SumProduct => {
                let prod: f64 = edges
                    .filter(|&e| e != skip)
                    .map(|e| (self.to_check[e] / 2.0).tanh())
                    .product();
                (sign0 * 2.0 * prod.clamp(-0.999_999_999_999, 0.999_999_999_999).atanh())
                    .clamp(-LLR_CLAMP, LLR_CLAMP)
            }
        }
    }

    fn update_check(&mut self, c: usize, syndrome_bit: bool) {
        let (lo, hi) = (self.check_start[c], self.check_start[c + 1]);
        let sign0 = if syndrome_bit { -1.0 } else { 1.0 };
        match self.bp.variant {
            BpVariant::MinSum { scale } => {
                // two smallest magnitudes give every leave-one-out minimum
                let mut sign = sign0;
                let (mut min1, mut min2, mut arg) = (f64::INFINITY, f64::INFINITY, usize::MAX);
                for e in lo..hi {
                    let m = self.to_check[e];
                    if m < 0.0 {
                        sign = -sign;
                    }
                    let a = m.abs();
                    if a < min1 {
                        min2 = min1;
                        min1 = a;
                        arg = e;
                    } else if a < min2 {
                        min2 = a;
                    }
                }
                for e in lo..hi {
                    let m = self.to_check[e];
                    let s = if m < 0.0 { -sign } else { sign };
                    let mag = if e == arg { min2 } else { min1 };
                    self.to_var[e] = if mag.is_infinite() { 0.0 } else { s * scale * mag };
                }
            }
            BpVariant::SumProduct => {
                for e in lo..hi {
                    self.to_var[e] = self.check_message(c, e, syndrome_bit);
                }
            }
        }
    }

    /// Ordered-statistics post-processing. Returns `r` with `H r = s`.
    pub fn osd_post(&self, s: &BitVector, soft: &[f64]) -> Result<BitVector, DecoderError> {
        self.check_len(s)?;
        osd_solve(&self.h, s, soft, self.osd.order)
    }

    /// BP, then OSD if BP did not converge.
    pub fn decode(&mut self, s: &BitVector) -> Result<Decoded, DecoderError> {
        let out = self.bp_decode(s)?;
        if out.converged {
            return Ok(Decoded { correction: out.hard, bp_converged: true });
        }
        let correction = self.osd_post(s, &out.soft)?;
        Ok(Decoded { correction, bp_converged: false })
    }
}

/// OSD on `h` with ranking values `soft` (lower means more likely flipped).
pub fn osd_solve(h: &SparseBitMatrix, s: &BitVector, soft: &[f64], order: OsdOrder) -> Result<BitVector, DecoderError> {
    let (m, n) = h.shape();
    if s.len() != m {
        return Err(DecoderError::DimensionMismatch { expected: m, found: s.len() });
    }
    assert_eq!(soft.len(), n, "one soft value per column");
    if s.is_zero() {
        return Ok(BitVector::zeros(n));
    }
    let mut ranking: Vec<usize> = (0..n).collect();
    let key = |i: usize| soft[i].clamp(-LLR_CLAMP, LLR_CLAMP);
    ranking.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));

    let want_dependent = match order {
        OsdOrder::Osd0 => 0,
        OsdOrder::Exhaustive(w) => w,
    };
    let mut basis = EchelonBasis::with_labels(m, n);
    let mut residual = s.clone();
    let mut combo = BitVector::zeros(n);
    // reduced syndrome stays free of pivot bits; it starts with no pivots
    let mut solution: Option<BitVector> = None;
    let mut dependents: Vec<BitVector> = Vec::new();

    for &col in &ranking {
        if solution.is_some() && dependents.len() >= want_dependent {
            break;
        }
        let v = h.col_vector(col);
        match basis.insert(v, col) {
            Reduction::Independent { pivot } => {
                if solution.is_none() && residual.get(pivot) {
                    let (vec, c) = basis.by_pivot(pivot).expect("just inserted");
                    residual.xor_from(vec, pivot);
                    combo.xor_assign(c.expect("tracking on"));
                    basis.reduce_from(&mut residual, pivot + 1, Some(&mut combo));
                    if residual.is_zero() {
                        solution = Some(combo.clone());
                    }
                }
            }
            Reduction::Dependent { combination } => {
                if dependents.len() < want_dependent {
                    let mut null = combination.expect("tracking on");
                    null.set(col, true);
                    dependents.push(null);
                }
            }
        }
    }
    let x0 = solution.ok_or(DecoderError::Unsatisfiable)?;
    if dependents.is_empty() {
        return Ok(x0);
    }
    // every subset of the collected null vectors, keep the lightest
    let mut best = x0.clone();
    let mut best_w = best.weight();
    let mut cand = x0;
    for i in 1u64..(1u64 << dependents.len()) {
        cand.xor_assign(&dependents[i.trailing_zeros() as usize]);
        let w = cand.weight();
        if w < best_w {
            best_w = w;
            best = cand.clone();
        }
    }
    Ok(best)
}

pub fn bp_decode(h: &SparseBitMatrix, s: &BitVector, cfg: BpConfig) -> Result<BpOutput, DecoderError> {
    BpOsdDecoder::new(h.clone(), cfg, OsdConfig::default())?.bp_decode(s)
}

pub fn osd_post(h: &SparseBitMatrix, s: &BitVector, soft: &[f64], cfg: OsdConfig) -> Result<BitVector, DecoderError> {
    cfg.validate()?;
    osd_solve(h, s, soft, cfg.order)
}

pub fn bp_osd_decode(h: &SparseBitMatrix, s: &BitVector, bp: BpConfig, osd: OsdConfig) -> Result<BitVector, DecoderError> {
    Ok(BpOsdDecoder::new(h.clone(), bp, osd)?.decode(s)?.correction)
}
