//! The length-3 chain complex built from three classical seeds, and the CSS
//! code it defines.
//!
//! For seeds `δ_ℓ: m_ℓ × n_ℓ` the spaces are
//!
//! ```text
//! C0 = A0B0C0
//! C1 = A1B0C0 ⊕ A0B1C0 ⊕ A0B0C1      (transverse, vertical, horizontal)
//! C2 = A1B1C0 ⊕ A1B0C1 ⊕ A0B1C1
//! C3 = A1B1C1
//! ```
//!
//! with `dim A0 = n_a`, `dim A1 = m_a` and so on. Qubits live on `C1`,
//! `H_X = δ1`, `H_Z = δ0ᵀ` and the metacheck matrix is `M = δ2`.

mod ldpc_seeds;

use crate::gf2::{BitVector, EchelonBasis, Gf2Error, Reduction, SparseBitMatrix};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

/// Default dimension cap for brute-force classical distances (`2^k` codewords).
pub const DEFAULT_DISTANCE_DIM_CAP: usize = 24;

#[derive(Debug, Error)]
pub enum CodeError {
    #[error("lattice size must be at least 2, got {0}")]
    LatticeTooSmall(usize),
    #[error("unknown builtin table row {0} (expected 1, 2 or 3)")]
    UnknownTableRow(usize),
    #[error("internal consistency: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
}

/// A code distance: a number, infinity (empty code), or not computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Distance {
    Finite(usize),
    Infinite,
    Unknown,
}

impl Distance {
    pub fn mul(self, other: Distance) -> Distance {
        use Distance::*;
        match (self, other) {
            (Infinite, _) | (_, Infinite) => Infinite,
            (Finite(a), Finite(b)) => Finite(a * b),
            _ => Unknown,
        }
    }

    pub fn min(self, other: Distance) -> Distance {
        use Distance::*;
        match (self, other) {
            (Infinite, x) | (x, Infinite) => x,
            (Finite(a), Finite(b)) => Finite(a.min(b)),
            _ => Unknown,
        }
    }

    pub fn min_of(it: impl IntoIterator<Item = Distance>) -> Distance {
        it.into_iter().fold(Distance::Infinite, Distance::min)
    }

    pub fn finite(self) -> Option<usize> {
        match self {
            Distance::Finite(d) => Some(d),
            _ => None,
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Finite(d) => write!(f, "{d}"),
            Distance::Infinite => write!(f, "inf"),
            Distance::Unknown => write!(f, "unknown"),
        }
    }
}

impl Serialize for Distance {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Distance::Finite(d) => s.serialize_u64(*d as u64),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Distance {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            N(usize),
            S(String),
        }
        match Repr::deserialize(d)? {
            Repr::N(n) => Ok(Distance::Finite(n)),
            Repr::S(s) if s == "inf" => Ok(Distance::Infinite),
            Repr::S(s) if s == "unknown" => Ok(Distance::Unknown),
            Repr::S(s) => Err(serde::de::Error::custom(format!("bad distance {s:?}"))),
        }
    }
}

/// Minimum weight of a nonzero vector in `ker h`, by enumerating all `2^k`
/// codewords when `k <= dim_cap`.
pub fn classical_distance(h: &SparseBitMatrix, dim_cap: usize) -> Distance {
    let basis = h.kernel_basis();
    if basis.is_empty() {
        return Distance::Infinite;
    }
    if basis.len() > dim_cap {
        return Distance::Unknown;
    }
    // Gray-code walk touches each codeword once with a single XOR per step.
    let mut word = BitVector::zeros(h.cols());
    let mut best = usize::MAX;
    for i in 1u64..(1u64 << basis.len()) {
        word.xor_assign(&basis[i.trailing_zeros() as usize]);
        best = best.min(word.weight());
    }
    Distance::Finite(best)
}

/// A classical parity-check matrix with the parameters of the code it checks
/// and of its transpose code.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalSeed {
    pub matrix: SparseBitMatrix,
    pub n: usize,
    pub k: usize,
    pub d: Distance,
    pub n_t: usize,
    pub k_t: usize,
    pub d_t: Distance,
}

impl ClassicalSeed {
    pub fn new(matrix: SparseBitMatrix) -> Self {
        Self::with_distance_cap(matrix, DEFAULT_DISTANCE_DIM_CAP)
    }

    pub fn with_distance_cap(matrix: SparseBitMatrix, dim_cap: usize) -> Self {
        let rank = matrix.rank();
        let (m, n) = matrix.shape();
        let d = classical_distance(&matrix, dim_cap);
        let d_t = classical_distance(&matrix.transpose(), dim_cap);
        Self {
            n,
            k: n - rank,
            d,
            n_t: m,
            k_t: m - rank,
            d_t,
            matrix,
        }
    }

    pub fn max_col_weight(&self) -> usize {
        self.matrix.max_col_weight()
    }

    pub fn max_row_weight(&self) -> usize {
        self.matrix.max_row_weight()
    }
}

impl<'de> Deserialize<'de> for ClassicalSeed {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            matrix: SparseBitMatrix,
        }
        Ok(ClassicalSeed::new(Repr::deserialize(d)?.matrix))
    }
}

/// Row and column counts of the three seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedDims {
    pub ma: usize,
    pub na: usize,
    pub mb: usize,
    pub nb: usize,
    pub mc: usize,
    pub nc: usize,
}

impl SeedDims {
    pub fn of(seeds: &[ClassicalSeed; 3]) -> Self {
        let [a, b, c] = seeds;
        Self {
            ma: a.n_t,
            na: a.n,
            mb: b.n_t,
            nb: b.n,
            mc: c.n_t,
            nc: c.n,
        }
    }

    /// Sizes of the transverse, vertical and horizontal qubit blocks.
    pub fn c1_blocks(&self) -> [usize; 3] {
        [
            self.ma * self.nb * self.nc,
            self.na * self.mb * self.nc,
            self.na * self.nb * self.mc,
        ]
    }

    /// Sizes of the `A1B1C0`, `A1B0C1`, `A0B1C1` blocks.
    pub fn c2_blocks(&self) -> [usize; 3] {
        [
            self.ma * self.mb * self.nc,
            self.ma * self.nb * self.mc,
            self.na * self.mb * self.mc,
        ]
    }

    pub fn dims(&self) -> [usize; 4] {
        [
            self.na * self.nb * self.nc,
            self.c1_blocks().iter().sum(),
            self.c2_blocks().iter().sum(),
            self.ma * self.mb * self.mc,
        ]
    }
}

/// `C0 → C1 → C2 → C3` with `δ_{i+1} δ_i = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainComplex3 {
    pub delta0: SparseBitMatrix,
    pub delta1: SparseBitMatrix,
    pub delta2: SparseBitMatrix,
    pub dims: [usize; 4],
    pub seed_dims: SeedDims,
}

impl ChainComplex3 {
    pub fn chain_conditions_hold(&self) -> bool {
        let z10 = self.delta1.mul(&self.delta0).map(|m| m.is_zero());
        let z21 = self.delta2.mul(&self.delta1).map(|m| m.is_zero());
        matches!((z10, z21), (Ok(true), Ok(true)))
    }
}

fn kron3(a: &SparseBitMatrix, b: &SparseBitMatrix, c: &SparseBitMatrix) -> SparseBitMatrix {
    a.kron(b).kron(c)
}

/// Assembles `δ0`, `δ1`, `δ2` from the three seeds.
pub fn build_complex(seeds: &[ClassicalSeed; 3]) -> ChainComplex3 {
    let [a, b, c] = seeds;
    let sd = SeedDims::of(seeds);
    let id = SparseBitMatrix::identity;
    let (da, db, dc) = (&a.matrix, &b.matrix, &c.matrix);

    let d0 = [
        kron3(da, &id(sd.nb), &id(sd.nc)),
        kron3(&id(sd.na), db, &id(sd.nc)),
        kron3(&id(sd.na), &id(sd.nb), dc),
    ];
    let delta0 = SparseBitMatrix::stack_rows(&[&d0[0], &d0[1], &d0[2]]).expect("equal widths");

    // rows A1B1C0, A1B0C1, A0B1C1; columns A1B0C0, A0B1C0, A0B0C1
    let r0c0 = kron3(&id(sd.ma), db, &id(sd.nc));
    let r0c1 = kron3(da, &id(sd.mb), &id(sd.nc));
    let r1c0 = kron3(&id(sd.ma), &id(sd.nb), dc);
    let r1c2 = kron3(da, &id(sd.nb), &id(sd.mc));
    let r2c1 = kron3(&id(sd.na), &id(sd.mb), dc);
    let r2c2 = kron3(&id(sd.na), db, &id(sd.mc));
    let delta1 = SparseBitMatrix::block(&[
        vec![Some(&r0c0), Some(&r0c1), None],
        vec![Some(&r1c0), None, Some(&r1c2)],
        vec![None, Some(&r2c1), Some(&r2c2)],
    ])
    .expect("block shapes agree");

    let d2 = [
        kron3(&id(sd.ma), &id(sd.mb), dc),
        kron3(&id(sd.ma), db, &id(sd.mc)),
        kron3(da, &id(sd.mb), &id(sd.mc)),
    ];
    let delta2 = SparseBitMatrix::stack_cols(&[&d2[0], &d2[1], &d2[2]]).expect("equal heights");

    ChainComplex3 {
        delta0,
        delta1,
        delta2,
        dims: sd.dims(),
        seed_dims: sd,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeParams {
    pub n: usize,
    pub k: usize,
    pub dx: Distance,
    pub dz: Distance,
    pub dss: Distance,
    pub km: usize,
}

impl fmt::Display for CodeParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}, {}, {}]] d_ss={}", self.n, self.k, self.dx, self.dz, self.dss)
    }
}

/// The CSS code of a [`ChainComplex3`] together with the data the decoders
/// need.
#[derive(Debug, Clone)]
pub struct ProductCode {
    pub seeds: [ClassicalSeed; 3],
    pub complex: ChainComplex3,
    pub hz: SparseBitMatrix,
    pub params: CodeParams,
    /// `k` from the seed formula; differs from `params.k` only if the
    /// formula gives 0 while ranks say otherwise.
    pub k_formula: usize,
    /// Rows generate second cohomology: `lm · hx = 0`.
    pub lm: SparseBitMatrix,
    /// Columns generate second homology: `meta · fm = 0`.
    pub fm: SparseBitMatrix,
    /// Rows span `ker hz` modulo the row space of `hx`. A residual `e` with
    /// `hx e = 0` is a stabiliser iff it is orthogonal to every row.
    pub logical_x: SparseBitMatrix,
}

impl ProductCode {
    pub fn hx(&self) -> &SparseBitMatrix {
        &self.complex.delta1
    }

    pub fn meta(&self) -> &SparseBitMatrix {
        &self.complex.delta2
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn k(&self) -> usize {
        self.params.k
    }

    pub fn km(&self) -> usize {
        self.params.km
    }

    pub fn seed_dims(&self) -> SeedDims {
        self.complex.seed_dims
    }

    /// True iff `lm · s ≠ 0`.
    pub fn is_invalid_syndrome(&self, s: &BitVector) -> bool {
        self.lm.row_supports().iter().any(|row| row.iter().fold(false, |acc, &i| acc ^ s.get(i)))
    }

    /// True iff `e` lies in the row space of `hz` (assumes `hx e = 0`).
    pub fn is_stabiliser(&self, e: &BitVector) -> bool {
        self.logical_x.row_supports().iter().all(|row| !row.iter().fold(false, |acc, &i| acc ^ e.get(i)))
    }

    pub fn toric(l: usize) -> Result<Self, CodeError> {
        derive_code(toric_seeds(l)?)
    }

    pub fn surface(l: usize) -> Result<Self, CodeError> {
        derive_code(surface_seeds(l)?)
    }

    pub fn table(row: usize) -> Result<Self, CodeError> {
        derive_code(table_seeds(row)?)
    }
}

/// Builds the complex and derives all code data, cross-checking the seed
/// formulas against ranks.
pub fn derive_code(seeds: [ClassicalSeed; 3]) -> Result<ProductCode, CodeError> {
    let complex = build_complex(&seeds);
    if !complex.chain_conditions_hold() {
        return Err(CodeError::Inconsistent("chain conditions fail".into()));
    }
    let [a, b, c] = &seeds;
    let n_formula = a.n_t * b.n * c.n + a.n * b.n_t * c.n + a.n * b.n * c.n_t;
    let k_formula = a.k_t * b.k * c.k + a.k * b.k_t * c.k + a.k * b.k * c.k_t;
    let km_formula = a.k_t * b.k_t * c.k + a.k_t * b.k * c.k_t + a.k * b.k_t * c.k_t;
    let [_, dim1, dim2, _] = complex.dims;
    if n_formula != dim1 {
        return Err(CodeError::Inconsistent(format!("n formula {n_formula} != dim C1 {dim1}")));
    }
    let rank0 = complex.delta0.rank();
    let rank1 = complex.delta1.rank();
    let rank2 = complex.delta2.rank();
    let k = dim1 - rank0 - rank1;
    if k_formula != 0 && k_formula != k {
        return Err(CodeError::Inconsistent(format!("k formula {k_formula} != rank-based k {k}")));
    }
    let km = dim2 - rank2 - rank1;
    if km != km_formula {
        return Err(CodeError::Inconsistent(format!("k_m formula {km_formula} != rank-based {km}")));
    }

    let (dx, dz) = if k == 0 {
        (Distance::Infinite, Distance::Infinite)
    } else {
        (
            Distance::min_of([b.d.mul(c.d), a.d.mul(c.d), a.d.mul(b.d)]),
            Distance::min_of([a.d_t, b.d_t, c.d_t]),
        )
    };
    let dss = if km > 0 {
        Distance::min_of([a.d, b.d, c.d])
    } else {
        Distance::Infinite
    };

    let (lm, fm) = homology_generators(&complex, km);
    let hz = complex.delta0.transpose();
    let logical_x = quotient_basis(&hz.kernel_basis(), complex.delta1.row_supports(), dim1, k);
    let logical_x = SparseBitMatrix::from_rows(dim1, &logical_x)?;

    Ok(ProductCode {
        seeds,
        params: CodeParams { n: dim1, k, dx, dz, dss, km },
        k_formula,
        hz,
        lm,
        fm,
        logical_x,
        complex,
    })
}

/// Picks up to `want` vectors from `candidates`, in order, that are
/// independent modulo the span of `quotient`.
fn quotient_basis(candidates: &[BitVector], quotient: &[Vec<usize>], len: usize, want: usize) -> Vec<BitVector> {
    let mut basis = EchelonBasis::new(len);
    if want == 0 {
        return Vec::new();
    }
    for row in quotient {
        basis.insert(BitVector::from_support(len, row.iter().copied()).unwrap(), 0);
    }
    let mut out = Vec::new();
    for v in candidates {
        if out.len() == want {
            break;
        }
        if let Reduction::Independent { .. } = basis.insert(v.clone(), 0) {
            out.push(v.clone());
        }
    }
    out
}

/// `(lm, fm)`: rows of `lm` generate `ker hxᵀ / im metaᵀ`, columns of `fm`
/// generate `ker meta / im hx`. Both have `km` vectors chosen greedily in
/// kernel-basis order.
pub fn homology_generators(cc: &ChainComplex3, km: usize) -> (SparseBitMatrix, SparseBitMatrix) {
    let dim2 = cc.dims[2];
    if km == 0 {
        return (SparseBitMatrix::zeros(0, dim2), SparseBitMatrix::zeros(dim2, 0));
    }
    let hx_t = cc.delta1.transpose();
    let fm_cols = quotient_basis(&cc.delta2.kernel_basis(), hx_t.row_supports(), dim2, km);
    let lm_rows = quotient_basis(&hx_t.kernel_basis(), cc.delta2.row_supports(), dim2, km);
    (
        SparseBitMatrix::from_rows(dim2, &lm_rows).expect("lengths match"),
        SparseBitMatrix::from_cols(dim2, &fm_cols).expect("lengths match"),
    )
}

/// `L × L` circulant with ones at `(i, i)` and `(i, i+1 mod L)`.
pub fn toric_seed_matrix(l: usize) -> Result<SparseBitMatrix, CodeError> {
    if l < 2 {
        return Err(CodeError::LatticeTooSmall(l));
    }
    Ok(SparseBitMatrix::from_row_sums(l, l, (0..l).map(|i| vec![i, (i + 1) % l]).collect())?)
}

/// `(L-1) × L` full-rank repetition-code check.
pub fn repetition_check(l: usize) -> Result<SparseBitMatrix, CodeError> {
    if l < 2 {
        return Err(CodeError::LatticeTooSmall(l));
    }
    Ok(SparseBitMatrix::from_row_supports(l - 1, l, (0..l - 1).map(|i| vec![i, i + 1]).collect())?)
}

pub fn toric_seeds(l: usize) -> Result<[ClassicalSeed; 3], CodeError> {
    let s = ClassicalSeed::new(toric_seed_matrix(l)?);
    Ok([s.clone(), s.clone(), s])
}

pub fn surface_seeds(l: usize) -> Result<[ClassicalSeed; 3], CodeError> {
    let d = repetition_check(l)?;
    let s = ClassicalSeed::new(d.clone());
    Ok([s.clone(), s, ClassicalSeed::new(d.transpose())])
}

/// Seeds of the non-topological family: a (3,4)-regular LDPC check, an
/// `[L,1,L]` repetition check and the transpose of the latter, for
/// `L = 6, 8, 10`.
pub fn table_seeds(row: usize) -> Result<[ClassicalSeed; 3], CodeError> {
    let (rows, l) = match row {
        1 => (ldpc_seeds::LDPC_16_4_6, 6),
        2 => (ldpc_seeds::LDPC_20_5_8, 8),
        3 => (ldpc_seeds::LDPC_24_6_10, 10),
        other => return Err(CodeError::UnknownTableRow(other)),
    };
    let a = SparseBitMatrix::from_bit_strings(rows)?;
    let rep = repetition_check(l)?;
    Ok([
        ClassicalSeed::new(a),
        ClassicalSeed::new(rep.clone()),
        ClassicalSeed::new(rep.transpose()),
    ])
}

/// Measured maximum column and row weights of `δ0, δ1, δ2` next to the
/// bounds implied by the seed weights.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeReport {
    pub col: [usize; 3],
    pub row: [usize; 3],
    pub col_bound: [usize; 3],
    pub row_bound: [usize; 3],
}

pub fn ldpc_degree_bounds(cc: &ChainComplex3, seeds: &[ClassicalSeed; 3]) -> Result<DegreeReport, CodeError> {
    let c: Vec<usize> = seeds.iter().map(ClassicalSeed::max_col_weight).collect();
    let r: Vec<usize> = seeds.iter().map(ClassicalSeed::max_row_weight).collect();
    let pair_max = |v: &[usize]| (v[0] + v[1]).max(v[0] + v[2]).max(v[1] + v[2]);
    let report = DegreeReport {
        col: [cc.delta0.max_col_weight(), cc.delta1.max_col_weight(), cc.delta2.max_col_weight()],
        row: [cc.delta0.max_row_weight(), cc.delta1.max_row_weight(), cc.delta2.max_row_weight()],
        col_bound: [c.iter().sum(), pair_max(&c), *c.iter().max().unwrap()],
        row_bound: [*r.iter().max().unwrap(), pair_max(&r), r.iter().sum()],
    };
    for i in 0..3 {
        if report.col[i] > report.col_bound[i] || report.row[i] > report.row_bound[i] {
            return Err(CodeError::Inconsistent(format!("degree bound violated for delta{i}: {report:?}")));
        }
    }
    Ok(report)
}

/// Serialized form of a code: seeds, derived matrices and parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CodeBundle {
    pub schema_version: u32,
    pub seeds: Vec<SeedEntry>,
    pub hx: SparseBitMatrix,
    pub hz: SparseBitMatrix,
    pub meta: SparseBitMatrix,
    pub lm: SparseBitMatrix,
    pub fm: SparseBitMatrix,
    pub params: CodeParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedEntry {
    pub matrix: SparseBitMatrix,
    pub n: usize,
    pub k: usize,
    pub d: Distance,
    pub n_t: usize,
    pub k_t: usize,
    pub d_t: Distance,
}

impl From<&ClassicalSeed> for SeedEntry {
    fn from(s: &ClassicalSeed) -> Self {
        Self {
            matrix: s.matrix.clone(),
            n: s.n,
            k: s.k,
            d: s.d,
            n_t: s.n_t,
            k_t: s.k_t,
            d_t: s.d_t,
        }
    }
}

impl ProductCode {
    pub fn to_bundle(&self) -> CodeBundle {
        CodeBundle {
            schema_version: SCHEMA_VERSION,
            seeds: self.seeds.iter().map(SeedEntry::from).collect(),
            hx: self.hx().clone(),
            hz: self.hz.clone(),
            meta: self.meta().clone(),
            lm: self.lm.clone(),
            fm: self.fm.clone(),
            params: self.params,
        }
    }

    /// Rebuilds the code from the bundle's seeds and checks that every stored
    /// matrix and parameter agrees with the rebuild.
    pub fn from_bundle(bundle: &CodeBundle) -> Result<Self, CodeError> {
        let seeds: Vec<ClassicalSeed> = bundle.seeds.iter().map(|s| ClassicalSeed::new(s.matrix.clone())).collect();
        let seeds: [ClassicalSeed; 3] = seeds
            .try_into()
            .map_err(|v: Vec<_>| CodeError::Inconsistent(format!("expected 3 seeds, found {}", v.len())))?;
        let code = derive_code(seeds)?;
        let checks = [
            ("hx", code.hx() == &bundle.hx),
            ("hz", code.hz == bundle.hz),
            ("meta", code.meta() == &bundle.meta),
            ("lm", code.lm == bundle.lm),
            ("fm", code.fm == bundle.fm),
            ("params", code.params == bundle.params),
        ];
        for (name, ok) in checks {
            if !ok {
                return Err(CodeError::Inconsistent(format!("stored {name} disagrees with rebuild from seeds")));
            }
        }
        Ok(code)
    }
}

/// A code named by a short string: `toric:L`, `surface:L` or `table1:i`,
/// optionally prefixed with `builtin:`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuiltinCode {
    Toric(usize),
    Surface(usize),
    Table(usize),
}

impl BuiltinCode {
    pub fn build(self) -> Result<ProductCode, CodeError> {
        match self {
            Self::Toric(l) => ProductCode::toric(l),
            Self::Surface(l) => ProductCode::surface(l),
            Self::Table(i) => ProductCode::table(i),
        }
    }

    /// The lattice size, or the row index for table codes.
    pub fn size(self) -> usize {
        match self {
            Self::Toric(x) | Self::Surface(x) | Self::Table(x) => x,
        }
    }
}

impl fmt::Display for BuiltinCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Toric(l) => write!(f, "toric:{l}"),
            Self::Surface(l) => write!(f, "surface:{l}"),
            Self::Table(i) => write!(f, "table1:{i}"),
        }
    }
}

impl std::str::FromStr for BuiltinCode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let body = s.strip_prefix("builtin:").unwrap_or(s);
        let (family, arg) = body.split_once(':').ok_or_else(|| format!("expected family:size, got '{s}'"))?;
        let size: usize = arg.parse().map_err(|_| format!("bad size '{arg}' in '{s}'"))?;
        match family {
            "toric" => Ok(Self::Toric(size)),
            "surface" => Ok(Self::Surface(size)),
            "table1" | "table" => Ok(Self::Table(size)),
            _ => Err(format!("unknown code family '{family}'")),
        }
    }
}

impl Serialize for BuiltinCode {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BuiltinCode {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests;
