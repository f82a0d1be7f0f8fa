//! Exhaustive checks of confinement, soundness and the Shadow decoders on
//! small codes.
//!
//! Everything here enumerates error supports in order of increasing weight
//! and lexicographically within a weight, so the first error seen with a
//! given syndrome is the lexicographically smallest of minimum weight. All
//! enumerations are guarded by explicit size limits and fail with
//! [`ConfinementError::Infeasible`] rather than sampling.

use crate::gf2::{BitVector, SparseBitMatrix};
use crate::product_code::{ProductCode, SCHEMA_VERSION};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

pub const DEFAULT_WEIGHT_CAP: usize = 4;
/// Largest number of error supports any single enumeration may visit.
pub const DEFAULT_MAX_ENUMERATION: u128 = 20_000_000;
/// Patch enumeration stores node sets as `u128` masks.
pub const MAX_PATCH_NODES: usize = 128;
pub const DEFAULT_MAX_PATCHES: usize = 5_000_000;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ConfinementError {
    #[error("enumeration infeasible: {0}")]
    Infeasible(String),
    #[error("bad parameter: {0}")]
    BadParameter(String),
}

type Result<T> = std::result::Result<T, ConfinementError>;

/// Confinement function `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConfinementFunction {
    /// `x^3 / 2`
    Cubic,
    Linear { slope: f64 },
    Constant { value: f64 },
    /// `coeff * x^exponent`
    Power { coeff: f64, exponent: f64 },
}

impl ConfinementFunction {
    pub fn eval(&self, x: usize) -> f64 {
        let x = x as f64;
        match *self {
            Self::Cubic => x * x * x / 2.0,
            Self::Linear { slope } => slope * x,
            Self::Constant { value } => value,
            Self::Power { coeff, exponent } => coeff * x.powf(exponent),
        }
    }
}

impl fmt::Display for ConfinementFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Cubic => write!(f, "cubic"),
            Self::Linear { slope } => write!(f, "linear:{slope}"),
            Self::Constant { value } => write!(f, "constant:{value}"),
            Self::Power { coeff, exponent } => write!(f, "power:{coeff},{exponent}"),
        }
    }
}

impl FromStr for ConfinementFunction {
    type Err = ConfinementError;

    /// `cubic`, `linear:K`, `constant:C` or `power:A,B`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || ConfinementError::BadParameter(format!("unknown confinement function '{s}'"));
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad());
        let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
        match kind.trim() {
            "cubic" if arg.is_empty() => Ok(Self::Cubic),
            "linear" => Ok(Self::Linear { slope: num(arg)? }),
            "constant" => Ok(Self::Constant { value: num(arg)? }),
            "power" => {
                let (a, b) = arg.split_once(',').ok_or_else(bad)?;
                Ok(Self::Power { coeff: num(a)?, exponent: num(b)? })
            }
            _ => Err(bad()),
        }
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Number of supports of weight at most `w` on `n` bits.
pub fn ball_size(n: usize, w: usize) -> u128 {
    (0..=w.min(n)).fold(0u128, |acc, k| acc.saturating_add(binomial(n, k)))
}

fn guard(n: usize, w: usize, limit: u128, what: &str) -> Result<()> {
    let size = ball_size(n, w);
    if size > limit {
        return Err(ConfinementError::Infeasible(format!(
            "{what}: {size} supports of weight <= {w} on {n} bits exceeds limit {limit}"
        )));
    }
    Ok(())
}

fn column_syndromes(h: &SparseBitMatrix) -> Vec<BitVector> {
    (0..h.cols()).map(|c| h.col_vector(c)).collect()
}

fn walk(
    cols: &[BitVector],
    w: usize,
    start: usize,
    support: &mut Vec<usize>,
    stack: &mut Vec<BitVector>,
    visit: &mut dyn FnMut(&[usize], &BitVector),
) {
    if support.len() == w {
        visit(support, stack.last().expect("nonempty stack"));
        return;
    }
    let remaining = w - support.len();
    for i in start..=cols.len() - remaining {
        let next = stack.last().expect("nonempty stack").xor(&cols[i]);
        stack.push(next);
        support.push(i);
        walk(cols, w, i + 1, support, stack, visit);
        support.pop();
        stack.pop();
    }
}

/// Visits every support of weight exactly `w` whose smallest element is
/// `first` (or every support if `first` is `None`), with its syndrome.
fn for_each_of_weight(
    cols: &[BitVector],
    rows: usize,
    w: usize,
    first: Option<usize>,
    visit: &mut dyn FnMut(&[usize], &BitVector),
) {
    let n = cols.len();
    if w > n {
        return;
    }
    let mut support = Vec::with_capacity(w);
    let mut stack = vec![BitVector::zeros(rows)];
    match first {
        None => walk(cols, w, 0, &mut support, &mut stack, visit),
        Some(i) => {
            if w == 0 || i + w > n {
                return;
            }
            stack.push(cols[i].clone());
            support.push(i);
            walk(cols, w, i + 1, &mut support, &mut stack, visit);
        }
    }
}

/// `|e|^red` by direct enumeration: the smallest weight of an error with the
/// same syndrome as `e`.
pub fn reduced_weight(h: &SparseBitMatrix, e: &BitVector, cap: usize) -> Result<usize> {
    let s = h.mat_vec(e).map_err(|err| ConfinementError::BadParameter(err.to_string()))?;
    if s.is_zero() {
        return Ok(0);
    }
    let top = e.weight().min(cap);
    guard(h.cols(), top, DEFAULT_MAX_ENUMERATION, "reduced weight")?;
    let cols = column_syndromes(h);
    for w in 1..=top {
        let mut found = false;
        for_each_of_weight(&cols, h.rows(), w, None, &mut |_, syn| found |= *syn == s);
        if found {
            return Ok(w);
        }
    }
    Err(ConfinementError::Infeasible(format!(
        "reduced weight exceeds cap {cap} for an error of weight {}",
        e.weight()
    )))
}

/// The `t`-Shadow `{σ(e) : |e| <= t}` together with, for each syndrome, the
/// lexicographically first error of minimum weight producing it.
#[derive(Debug, Clone)]
pub struct ShadowSet {
    t: usize,
    rows: usize,
    order: Vec<BitVector>,
    entries: HashMap<BitVector, Vec<usize>>,
}

impl ShadowSet {
    pub fn build(h: &SparseBitMatrix, t: usize) -> Result<Self> {
        Self::build_capped(h, t, DEFAULT_MAX_ENUMERATION)
    }

    pub fn build_capped(h: &SparseBitMatrix, t: usize, limit: u128) -> Result<Self> {
        let t = t.min(h.cols());
        guard(h.cols(), t, limit, "shadow")?;
        let cols = column_syndromes(h);
        let mut order = Vec::new();
        let mut entries = HashMap::new();
        for w in 0..=t {
            for_each_of_weight(&cols, h.rows(), w, None, &mut |support, syn| {
                if !entries.contains_key(syn) {
                    order.push(syn.clone());
                    entries.insert(syn.clone(), support.to_vec());
                }
            });
        }
        Ok(Self { t, rows: h.rows(), order, entries })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn contains(&self, s: &BitVector) -> bool {
        self.entries.contains_key(s)
    }

    /// Syndromes in order of first appearance.
    pub fn syndromes(&self) -> &[BitVector] {
        &self.order
    }

    pub fn min_error(&self, s: &BitVector) -> Option<&[usize]> {
        self.entries.get(s).map(Vec::as_slice)
    }

    /// `|e|^red` via table lookup; valid when `|e|^red <= t`.
    pub fn reduced_weight(&self, h: &SparseBitMatrix, e: &BitVector) -> Result<usize> {
        let s = h.mat_vec(e).map_err(|err| ConfinementError::BadParameter(err.to_string()))?;
        self.reduced_weight_of_syndrome(&s).ok_or_else(|| {
            ConfinementError::Infeasible(format!("reduced weight exceeds table radius {}", self.t))
        })
    }

    pub fn reduced_weight_of_syndrome(&self, s: &BitVector) -> Option<usize> {
        self.entries.get(s).map(Vec::len)
    }
}

pub fn build_shadow(h: &SparseBitMatrix, t: usize) -> Result<ShadowSet> {
    ShadowSet::build(h, t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShadowDecode {
    pub s_r: BitVector,
    pub e_r: BitVector,
}

/// Shadow decoder: the lightest `s_r` putting `s ⊕ s_r` into the Shadow,
/// then the lightest error explaining the repaired syndrome.
pub fn shadow_decode(shadow: &ShadowSet, n: usize, s: &BitVector) -> ShadowDecode {
    assert_eq!(s.len(), shadow.rows, "syndrome length");
    let mut best: Option<(BitVector, &BitVector)> = None;
    for sigma in &shadow.order {
        let cand = s.xor(sigma);
        let better = match &best {
            None => true,
            Some((b, _)) => lighter(&cand, b),
        };
        if better {
            best = Some((cand, sigma));
        }
    }
    let (s_r, sigma) = best.expect("shadow contains zero");
    let e_r = BitVector::from_support(n, shadow.entries[sigma].iter().copied()).expect("in range");
    ShadowDecode { s_r, e_r }
}

/// Strictly lighter, ties broken by support order.
fn lighter(a: &BitVector, b: &BitVector) -> bool {
    a.weight().cmp(&b.weight()).then_with(|| a.cmp_support(b)).is_lt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    /// `"Z"` for errors checked against `H_X`, `"X"` against `H_Z`.
    pub pauli: String,
    pub error: Vec<usize>,
    pub syndrome_weight: usize,
    pub reduced_weight: usize,
    pub bound: f64,
}

impl WorstCase {
    fn slack(&self) -> f64 {
        self.bound - self.reduced_weight as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfinementReport {
    pub schema_version: u32,
    pub t: usize,
    pub f: ConfinementFunction,
    pub restrict_to_z: bool,
    /// Largest error weight enumerated; smaller than `t` when capped.
    pub checked_weight: usize,
    pub errors_checked: u64,
    pub verified: bool,
    /// The counterexample with the most negative slack, otherwise the
    /// tightest instance found.
    pub worst_case: Option<WorstCase>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerationLimits {
    pub weight_cap: usize,
    pub max_enumeration: u128,
}

impl Default for EnumerationLimits {
    fn default() -> Self {
        Self { weight_cap: DEFAULT_WEIGHT_CAP, max_enumeration: DEFAULT_MAX_ENUMERATION }
    }
}

fn pick_worse(a: Option<WorstCase>, b: Option<WorstCase>) -> Option<WorstCase> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => Some(if b.slack() < a.slack() { b } else { a }),
    }
}

/// Visits every nonzero support up to weight `top` in enumeration order,
/// split by (weight, first index) so the work parallelises, and folds the
/// per-chunk results back in order.
fn scan_errors<F>(h: &SparseBitMatrix, top: usize, per_error: F) -> (u64, Option<WorstCase>)
where
    F: Fn(&[usize], &BitVector) -> Option<WorstCase> + Sync,
{
    let cols = column_syndromes(h);
    let chunks: Vec<(usize, usize)> =
        (1..=top).flat_map(|w| (0..h.cols()).map(move |i| (w, i))).collect();
    let results: Vec<(u64, Option<WorstCase>)> = chunks
        .par_iter()
        .map(|&(w, i)| {
            let mut count = 0u64;
            let mut worst = None;
            for_each_of_weight(&cols, h.rows(), w, Some(i), &mut |support, syn| {
                count += 1;
                worst = pick_worse(worst.take(), per_error(support, syn));
            });
            (count, worst)
        })
        .collect();
    results.into_iter().fold((0, None), |(c, w), (c2, w2)| (c + c2, pick_worse(w, w2)))
}

fn confinement_on(
    h: &SparseBitMatrix,
    pauli: &str,
    top: usize,
    f: ConfinementFunction,
    limits: EnumerationLimits,
) -> Result<(u64, Option<WorstCase>)> {
    let table = ShadowSet::build_capped(h, top, limits.max_enumeration)?;
    Ok(scan_errors(h, top, |support, syn| {
        let red = table.reduced_weight_of_syndrome(syn).expect("weight <= radius");
        let sw = syn.weight();
        Some(WorstCase {
            pauli: pauli.to_string(),
            error: support.to_vec(),
            syndrome_weight: sw,
            reduced_weight: red,
            bound: f.eval(sw),
        })
    }))
}

/// Checks `f(|σ(e)|) >= |e|^red` for every error of weight at most
/// `min(t, weight_cap)`. Z errors are checked against `H_X`; with
/// `restrict_to_z` false, X errors are also checked against `H_Z`.
pub fn check_confinement(
    code: &ProductCode,
    t: usize,
    f: ConfinementFunction,
    restrict_to_z: bool,
    limits: EnumerationLimits,
) -> Result<ConfinementReport> {
    let top = t.min(limits.weight_cap);
    let (mut count, mut worst) = confinement_on(code.hx(), "Z", top, f, limits)?;
    if !restrict_to_z {
        let (c, w) = confinement_on(&code.hz, "X", top, f, limits)?;
        count += c;
        worst = pick_worse(worst, w);
    }
    Ok(ConfinementReport {
        schema_version: SCHEMA_VERSION,
        t,
        f,
        restrict_to_z,
        checked_weight: top,
        errors_checked: count,
        verified: worst.as_ref().is_none_or(|w| w.slack() >= 0.0),
        worst_case: worst,
    })
}

/// Confinement check against a bare check matrix.
pub fn check_confinement_matrix(
    h: &SparseBitMatrix,
    t: usize,
    f: ConfinementFunction,
    limits: EnumerationLimits,
) -> Result<ConfinementReport> {
    let top = t.min(limits.weight_cap);
    let (count, worst) = confinement_on(h, "Z", top, f, limits)?;
    Ok(ConfinementReport {
        schema_version: SCHEMA_VERSION,
        t,
        f,
        restrict_to_z: true,
        checked_weight: top,
        errors_checked: count,
        verified: worst.as_ref().is_none_or(|w| w.slack() >= 0.0),
        worst_case: worst,
    })
}

/// Partial soundness check. Never claims soundness, only the absence of a
/// counterexample among errors of weight at most `w_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoundnessReport {
    pub schema_version: u32,
    pub t: usize,
    pub f: ConfinementFunction,
    pub w_max: usize,
    pub errors_checked: u64,
    pub no_counterexample_up_to_w_max: bool,
    pub counterexample: Option<WorstCase>,
}

/// For every error `e` with `|e| <= w_max` and `|σ(e)| <= t`, checks
/// `f(|σ(e)|) >= |e|^red`.
pub fn check_soundness_partial(
    h: &SparseBitMatrix,
    t: usize,
    f: ConfinementFunction,
    w_max: usize,
) -> Result<SoundnessReport> {
    let w_max = w_max.min(h.cols());
    let table = ShadowSet::build(h, w_max)?;
    let (count, worst) = scan_errors(h, w_max, |support, syn| {
        let sw = syn.weight();
        if sw > t {
            return None;
        }
        let red = table.reduced_weight_of_syndrome(syn).expect("weight <= radius");
        let bound = f.eval(sw);
        (bound < red as f64).then(|| WorstCase {
            pauli: "Z".into(),
            error: support.to_vec(),
            syndrome_weight: sw,
            reduced_weight: red,
            bound,
        })
    });
    Ok(SoundnessReport {
        schema_version: SCHEMA_VERSION,
        t,
        f,
        w_max,
        errors_checked: count,
        no_counterexample_up_to_w_max: worst.is_none(),
        counterexample: worst,
    })
}

/// Residual bound of the Shadow decoder checked over planted errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowBoundReport {
    pub t: usize,
    pub f: ConfinementFunction,
    pub cases: u64,
    pub violations: u64,
    pub worst: Option<ShadowBoundCase>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowBoundCase {
    pub error: Vec<usize>,
    pub syndrome_error: Vec<usize>,
    pub residual_reduced_weight: usize,
    pub bound: f64,
}

fn supports_up_to(n: usize, w: usize) -> Vec<Vec<usize>> {
    let cols = vec![BitVector::zeros(0); n];
    let mut out = Vec::new();
    for k in 0..=w.min(n) {
        for_each_of_weight(&cols, 0, k, None, &mut |s, _| out.push(s.to_vec()));
    }
    out
}

/// Runs the Shadow decoder of radius `t` on every `σ(e) ⊕ s_e` with
/// `|e| <= e_max` and `|s_e| <= se_max`, and checks
/// `|r|^red <= f(2|s_e|)` for the residual `r = e ⊕ e_r`.
pub fn check_shadow_bound(
    h: &SparseBitMatrix,
    t: usize,
    f: ConfinementFunction,
    e_max: usize,
    se_max: usize,
) -> Result<ShadowBoundReport> {
    let n = h.cols();
    let shadow = ShadowSet::build(h, t)?;
    // residuals weigh at most e_max + t
    let table = ShadowSet::build(h, e_max + t)?;
    guard(n, e_max, DEFAULT_MAX_ENUMERATION, "planted errors")?;
    guard(h.rows(), se_max, DEFAULT_MAX_ENUMERATION, "planted syndrome errors")?;
    let errors = supports_up_to(n, e_max);
    let syndrome_errors = supports_up_to(h.rows(), se_max);
    let mut report = ShadowBoundReport { t, f, cases: 0, violations: 0, worst: None };
    for es in &errors {
        let e = BitVector::from_support(n, es.iter().copied()).expect("in range");
        let sigma = h.mat_vec(&e).expect("lengths match");
        for ses in &syndrome_errors {
            let s_e = BitVector::from_support(h.rows(), ses.iter().copied()).expect("in range");
            let dec = shadow_decode(&shadow, n, &sigma.xor(&s_e));
            let r = e.xor(&dec.e_r);
            let red = table.reduced_weight(h, &r)?;
            let bound = f.eval(2 * s_e.weight());
            report.cases += 1;
            let slack = bound - red as f64;
            if slack < 0.0 {
                report.violations += 1;
            }
            let worse = report
                .worst
                .as_ref()
                .is_none_or(|w| slack < w.bound - w.residual_reduced_weight as f64);
            if worse {
                report.worst = Some(ShadowBoundCase {
                    error: es.clone(),
                    syndrome_error: ses.clone(),
                    residual_reduced_weight: red,
                    bound,
                });
            }
        }
    }
    Ok(report)
}

/// Undirected simple graph with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
}

impl Graph {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(ConfinementError::BadParameter(format!("edge ({a},{b}) outside {n} nodes")));
            }
            if a != b {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { adj })
    }

    /// Qubits adjacent iff some check row contains both.
    pub fn qubit_graph(h: &SparseBitMatrix) -> Self {
        let mut edges = Vec::new();
        for r in 0..h.rows() {
            let row = h.row(r);
            for (i, &a) in row.iter().enumerate() {
                edges.extend(row[i + 1..].iter().map(|&b| (a, b)));
            }
        }
        Self::from_edges(h.cols(), &edges).expect("indices in range")
    }

    /// Checks adjacent iff their supports share a qubit.
    pub fn syndrome_graph(h: &SparseBitMatrix) -> Self {
        Self::qubit_graph(&h.transpose())
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbours(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn is_symmetric(&self) -> bool {
        self.adj
            .iter()
            .enumerate()
            .all(|(a, list)| list.iter().all(|&b| self.adj[b].binary_search(&a).is_ok()))
    }

    /// Sizes of the connected components of the subgraph induced by `nodes`.
    pub fn component_sizes(&self, nodes: &[usize]) -> Vec<usize> {
        let mut inside = vec![false; self.node_count()];
        for &v in nodes {
            inside[v] = true;
        }
        let mut seen = vec![false; self.node_count()];
        let mut sizes = Vec::new();
        for &v in nodes {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            let mut stack = vec![v];
            let mut size = 0;
            while let Some(u) = stack.pop() {
                size += 1;
                for &w in &self.adj[u] {
                    if inside[w] && !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            sizes.push(size);
        }
        sizes
    }

    pub fn is_connected(&self) -> bool {
        let all: Vec<usize> = (0..self.node_count()).collect();
        self.component_sizes(&all).len() <= 1
    }
}

fn mask_of(nodes: impl IntoIterator<Item = usize>) -> u128 {
    nodes.into_iter().fold(0u128, |m, v| m | (1u128 << v))
}

/// All connected node sets of size `beta` (the `beta`-patches) as masks.
#[derive(Debug, Clone)]
pub struct PatchSet {
    beta: usize,
    masks: Vec<u128>,
}

impl PatchSet {
    pub fn new(graph: &Graph, beta: usize, max_patches: usize) -> Result<Self> {
        let n = graph.node_count();
        if n > MAX_PATCH_NODES {
            return Err(ConfinementError::Infeasible(format!(
                "patch enumeration supports at most {MAX_PATCH_NODES} nodes, graph has {n}"
            )));
        }
        if beta == 0 || beta > n {
            return Err(ConfinementError::BadParameter(format!("patch size {beta} on {n} nodes")));
        }
        let nbr: Vec<u128> = (0..n).map(|v| mask_of(graph.neighbours(v).iter().copied())).collect();
        let mut masks = Vec::new();
        // Each connected set is grown from its smallest node, and a node
        // joins the extension set only through the first member that
        // reaches it, so every set is produced exactly once.
        for root in 0..n {
            let above = if root + 1 >= 128 { 0 } else { !0u128 << (root + 1) };
            let sub = 1u128 << root;
            let ext = nbr[root] & above;
            extend(&nbr, beta, sub, nbr[root] | sub, ext, above, &mut masks, max_patches)?;
        }
        Ok(Self { beta, masks })
    }

    pub fn beta(&self) -> usize {
        self.beta
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn masks(&self) -> &[u128] {
        &self.masks
    }

    /// `‖E‖_β` for the node set `nodes`.
    pub fn closeness_mask(&self, nodes: u128) -> usize {
        self.masks.iter().map(|k| (k & nodes).count_ones() as usize).max().unwrap_or(0)
    }

    pub fn closeness(&self, nodes: &BitVector) -> usize {
        self.closeness_mask(mask_of(nodes.iter_ones()))
    }
}

#[allow(clippy::too_many_arguments)]
fn extend(
    nbr: &[u128],
    beta: usize,
    sub: u128,
    closed: u128,
    mut ext: u128,
    above: u128,
    out: &mut Vec<u128>,
    max: usize,
) -> Result<()> {
    if sub.count_ones() as usize == beta {
        if out.len() >= max {
            return Err(ConfinementError::Infeasible(format!("more than {max} patches")));
        }
        out.push(sub);
        return Ok(());
    }
    while ext != 0 {
        let w = ext.trailing_zeros() as usize;
        ext &= ext - 1;
        let fresh = nbr[w] & !closed & above;
        extend(nbr, beta, sub | (1 << w), closed | nbr[w], ext | fresh, above, out, max)?;
    }
    Ok(())
}

/// `‖E‖_β`: the largest overlap of `nodes` with a connected set of `beta`
/// nodes.
pub fn closeness(graph: &Graph, nodes: &[usize], beta: usize) -> Result<usize> {
    if !graph.is_connected() {
        return Err(ConfinementError::BadParameter("closeness needs a connected graph".into()));
    }
    let patches = PatchSet::new(graph, beta, DEFAULT_MAX_PATCHES)?;
    Ok(patches.closeness_mask(mask_of(nodes.iter().copied())))
}

/// Terminal sets larger than this are rejected by [`SteinerCloseness`].
pub const MAX_STEINER_TERMINALS: usize = 12;

/// `‖E‖_β` for small sets `E` without listing patches: a subset `Y ⊆ E`
/// fits in a `β`-patch iff its smallest connected superset (a Steiner tree)
/// has at most `β` nodes, since a connected graph lets any smaller connected
/// set grow to exactly `β` nodes.
#[derive(Debug, Clone)]
pub struct SteinerCloseness {
    beta: usize,
    dist: Vec<Vec<u32>>,
}

impl SteinerCloseness {
    pub fn new(graph: &Graph, beta: usize) -> Result<Self> {
        let n = graph.node_count();
        if !graph.is_connected() {
            return Err(ConfinementError::BadParameter("closeness needs a connected graph".into()));
        }
        if beta == 0 || beta > n {
            return Err(ConfinementError::BadParameter(format!("patch size {beta} on {n} nodes")));
        }
        let dist = (0..n)
            .map(|src| {
                let mut d = vec![u32::MAX; n];
                d[src] = 0;
                let mut queue = std::collections::VecDeque::from([src]);
                while let Some(u) = queue.pop_front() {
                    for &w in graph.neighbours(u) {
                        if d[w] == u32::MAX {
                            d[w] = d[u] + 1;
                            queue.push_back(w);
                        }
                    }
                }
                d
            })
            .collect();
        Ok(Self { beta, dist })
    }

    pub fn beta(&self) -> usize {
        self.beta
    }

    /// Size of the largest connected piece of `nodes`, capped at `beta`; a
    /// lower bound on the closeness.
    pub fn lower_bound(&self, nodes: &[usize]) -> usize {
        let mut seen = vec![false; nodes.len()];
        let mut best = 0;
        for start in 0..nodes.len() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut stack = vec![start];
            let mut size = 0;
            while let Some(i) = stack.pop() {
                size += 1;
                for j in 0..nodes.len() {
                    if !seen[j] && self.dist[nodes[i]][nodes[j]] == 1 {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            best = best.max(size);
        }
        best.min(self.beta)
    }

    pub fn closeness(&self, nodes: &[usize]) -> Result<usize> {
        let k = nodes.len();
        if k > MAX_STEINER_TERMINALS {
            return Err(ConfinementError::Infeasible(format!(
                "{k} terminals exceeds {MAX_STEINER_TERMINALS}"
            )));
        }
        if k == 0 {
            return Ok(0);
        }
        let n = self.dist.len();
        // Dreyfus-Wagner: dp[S][v] is the fewest edges of a tree spanning S and v
        let inf = u32::MAX / 4;
        let mut dp = vec![inf; (1 << k) * n];
        for (i, &x) in nodes.iter().enumerate() {
            dp[(1 << i) * n..((1 << i) + 1) * n].copy_from_slice(&self.dist[x]);
        }
        let mut best = 1;
        for mask in 1usize..(1 << k) {
            if mask.count_ones() >= 2 {
                let row = mask * n;
                let mut sub = (mask - 1) & mask;
                while sub > 0 {
                    if sub < mask ^ sub {
                        for v in 0..n {
                            let c = dp[sub * n + v] + dp[(mask ^ sub) * n + v];
                            if c < dp[row + v] {
                                dp[row + v] = c;
                            }
                        }
                    }
                    sub = (sub - 1) & mask;
                }
                let snapshot: Vec<u32> = dp[row..row + n].to_vec();
                for v in 0..n {
                    let relaxed = (0..n).map(|u| snapshot[u] + self.dist[u][v]).min().unwrap_or(inf);
                    dp[row + v] = dp[row + v].min(relaxed);
                }
            }
            let edges = dp[mask * n..(mask + 1) * n].iter().min().copied().unwrap_or(inf);
            if (edges as usize) < self.beta {
                best = best.max(mask.count_ones() as usize);
            }
        }
        Ok(best)
    }
}

/// Parameters `(α, β, γ)` of the Stochastic Shadow decoder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StochasticParams {
    pub alpha: f64,
    pub beta: usize,
    pub gamma: usize,
    /// Candidate errors are enumerated up to this weight.
    pub weight_cap: usize,
}

impl StochasticParams {
    /// `(1/2, t, ωt)`.
    pub fn from_confinement(t: usize, omega: usize, weight_cap: usize) -> Self {
        Self { alpha: 0.5, beta: t, gamma: omega * t, weight_cap }
    }
}

/// `ω` as one more than the largest qubit degree of `h`.
pub fn default_omega(h: &SparseBitMatrix) -> usize {
    h.max_col_weight() + 1
}

/// Stochastic Shadow decoder on a tiny code. The `(α, β)`-Shadow is built
/// from errors up to `weight_cap`, so results are exact only when the
/// optimal errors lie below the cap.
pub struct StochasticShadow {
    params: StochasticParams,
    n: usize,
    qubit_closeness: SteinerCloseness,
    syndrome_closeness: SteinerCloseness,
    syndrome_graph: Graph,
    // built on first use, only for large repair candidates
    syndrome_patches: std::sync::OnceLock<std::result::Result<PatchSet, ConfinementError>>,
    order: Vec<BitVector>,
    best: HashMap<BitVector, Vec<usize>>,
}

impl StochasticShadow {
    pub fn new(h: &SparseBitMatrix, params: StochasticParams) -> Result<Self> {
        if !(params.alpha > 0.0 && params.alpha <= 1.0) {
            return Err(ConfinementError::BadParameter(format!("alpha = {}", params.alpha)));
        }
        let qg = Graph::qubit_graph(h);
        let sg = Graph::syndrome_graph(h);
        let qubit_closeness = SteinerCloseness::new(&qg, params.beta)?;
        let syndrome_closeness = SteinerCloseness::new(&sg, params.gamma)?;
        guard(h.cols(), params.weight_cap, DEFAULT_MAX_ENUMERATION, "stochastic shadow")?;
        let limit = params.alpha * params.beta as f64;
        let cols = column_syndromes(h);
        let mut order = Vec::new();
        let mut best: HashMap<BitVector, (usize, Vec<usize>)> = HashMap::new();
        for w in 0..=params.weight_cap.min(h.cols()) {
            for_each_of_weight(&cols, h.rows(), w, None, &mut |support, syn| {
                let c = qubit_closeness.closeness(support).expect("weight below terminal cap");
                if c as f64 > limit {
                    return;
                }
                match best.get_mut(syn) {
                    // enumeration order already breaks (weight, lex) ties
                    Some(entry) if c < entry.0 => *entry = (c, support.to_vec()),
                    Some(_) => {}
                    None => {
                        order.push(syn.clone());
                        best.insert(syn.clone(), (c, support.to_vec()));
                    }
                }
            });
        }
        let best = best.into_iter().map(|(k, (_, v))| (k, v)).collect();
        Ok(Self {
            params,
            n: h.cols(),
            qubit_closeness,
            syndrome_closeness,
            syndrome_graph: sg,
            syndrome_patches: std::sync::OnceLock::new(),
            order,
            best,
        })
    }

    pub fn params(&self) -> &StochasticParams {
        &self.params
    }

    pub fn shadow_len(&self) -> usize {
        self.order.len()
    }

    pub fn qubit_closeness(&self, e: &BitVector) -> Result<usize> {
        self.qubit_closeness.closeness(&e.support())
    }

    pub fn syndrome_closeness(&self, s: &BitVector) -> Result<usize> {
        let support = s.support();
        if support.len() <= MAX_STEINER_TERMINALS {
            return self.syndrome_closeness.closeness(&support);
        }
        let patches = self
            .syndrome_patches
            .get_or_init(|| PatchSet::new(&self.syndrome_graph, self.params.gamma, DEFAULT_MAX_PATCHES));
        match patches {
            Ok(p) => Ok(p.closeness(s)),
            Err(e) => Err(e.clone()),
        }
    }

    /// Returns `(S_r, E_r)`: `S_r` of least γ-closeness (then weight, then
    /// support order) with `s ⊕ S_r` in the Shadow, and `E_r` of least
    /// β-closeness explaining it.
    pub fn decode(&self, s: &BitVector) -> Result<(BitVector, BitVector)> {
        let mut cands: Vec<(BitVector, &BitVector)> = self.order.iter().map(|sigma| (s.xor(sigma), sigma)).collect();
        cands.sort_by_key(|(c, _)| c.weight());
        let mut best: Option<((usize, usize), BitVector, &BitVector)> = None;
        for (cand, sigma) in cands {
            if let Some(((c, _), _, _)) = &best {
                if self.syndrome_closeness.lower_bound(&cand.support()) > *c {
                    continue;
                }
            }
            let key = (self.syndrome_closeness(&cand)?, cand.weight());
            let better = match &best {
                None => true,
                Some((k, b, _)) => key < *k || (key == *k && cand.cmp_support(b).is_lt()),
            };
            if better {
                best = Some((key, cand, sigma));
            }
        }
        let (_, s_r, sigma) = best.expect("shadow contains zero");
        let e_r = BitVector::from_support(self.n, self.best[sigma].iter().copied()).expect("in range");
        Ok((s_r, e_r))
    }
}

/// Upper bound on `‖e‖^red_β` from coset elements up to `cap`, exact when
/// an optimal representative lies below the cap.
pub fn reduced_closeness(h: &SparseBitMatrix, cl: &SteinerCloseness, e: &BitVector, cap: usize) -> Result<usize> {
    let s = h.mat_vec(e).map_err(|err| ConfinementError::BadParameter(err.to_string()))?;
    guard(h.cols(), cap, DEFAULT_MAX_ENUMERATION, "reduced closeness")?;
    let cols = column_syndromes(h);
    let mut best = cl.closeness(&e.support())?;
    for w in 0..=cap.min(h.cols()) {
        for_each_of_weight(&cols, h.rows(), w, None, &mut |support, syn| {
            if *syn == s {
                best = best.min(cl.closeness(support).expect("weight below terminal cap"));
            }
        });
    }
    Ok(best)
}

#[cfg(test)]
mod tests;
