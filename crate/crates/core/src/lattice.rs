//! Placement of a product code on a cubic lattice and the locality check.
//!
//! Coordinates are `(z, y, x)` with the `z` axis following seed A, `y` seed B
//! and `x` seed C, 1-based as in the usual picture with origin `(1, 1, 1)`.
//! Basis index `i` of a seed's column space sits at integer coordinate `i`,
//! row index `α` at the half-integer `α + 0.5`. Internally a coordinate is
//! stored doubled so everything stays integral.

use crate::product_code::{ProductCode, SeedDims};
use crate::gf2::SparseBitMatrix;
use serde::{Deserialize, Serialize};

/// A lattice point stored as twice its `(z, y, x)` coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub doubled: [usize; 3],
}

impl Point {
    /// From 0-based indices per axis; `half[a]` marks a row (half-integer)
    /// index on axis `a`.
    fn from_indices(idx: [usize; 3], half: [bool; 3]) -> Self {
        let mut doubled = [0; 3];
        for a in 0..3 {
            doubled[a] = 2 * (idx[a] + 1) + half[a] as usize;
        }
        Self { doubled }
    }

    pub fn zyx(&self) -> [f64; 3] {
        self.doubled.map(|d| d as f64 / 2.0)
    }

    pub fn xyz(&self) -> [f64; 3] {
        let [z, y, x] = self.zyx();
        [x, y, z]
    }

    /// Parses `(z, y, x)` given as multiples of one half.
    pub fn from_zyx(zyx: [f64; 3]) -> Option<Self> {
        let mut doubled = [0; 3];
        for a in 0..3 {
            let d = zyx[a] * 2.0;
            if d.fract() != 0.0 || d < 2.0 {
                return None;
            }
            doubled[a] = d as usize;
        }
        Some(Self { doubled })
    }

    fn is_half(&self) -> [bool; 3] {
        self.doubled.map(|d| d % 2 == 1)
    }

    /// The integer part: `c` for both `c` and `c + 0.5`.
    fn floor(&self) -> [usize; 3] {
        self.doubled.map(|d| d / 2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectType {
    Transverse,
    Vertical,
    Horizontal,
    TransverseVertical,
    TransverseHorizontal,
    VerticalHorizontal,
    ZStabiliser,
    Metacheck,
}

/// Which chain space an object's index refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectClass {
    ZStabiliser,
    Qubit,
    XStabiliser,
    Metacheck,
}

/// Coordinates of every object of a product code, indexed like the
/// corresponding chain space.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeCoords {
    pub dims: SeedDims,
    pub zstabs: Vec<Point>,
    pub qubits: Vec<Point>,
    pub xstabs: Vec<Point>,
    pub metachecks: Vec<Point>,
}

// Half-integer pattern of each block, in block order.
const C1_HALF: [[bool; 3]; 3] = [[true, false, false], [false, true, false], [false, false, true]];
const C2_HALF: [[bool; 3]; 3] = [[true, true, false], [true, false, true], [false, true, true]];
const QUBIT_TYPES: [ObjectType; 3] = [ObjectType::Transverse, ObjectType::Vertical, ObjectType::Horizontal];
const XSTAB_TYPES: [ObjectType; 3] = [
    ObjectType::TransverseVertical,
    ObjectType::TransverseHorizontal,
    ObjectType::VerticalHorizontal,
];

fn axis_sizes(d: &SeedDims, half: [bool; 3]) -> [usize; 3] {
    [
        if half[0] { d.ma } else { d.na },
        if half[1] { d.mb } else { d.nb },
        if half[2] { d.mc } else { d.nc },
    ]
}

fn block_points(d: &SeedDims, half: [bool; 3]) -> impl Iterator<Item = Point> {
    let [s0, s1, s2] = axis_sizes(d, half);
    (0..s0).flat_map(move |a| {
        (0..s1).flat_map(move |b| (0..s2).map(move |c| Point::from_indices([a, b, c], half)))
    })
}

/// Assigns coordinates to every Z-stabiliser, qubit, X-stabiliser and
/// metacheck.
pub fn embed(code: &ProductCode) -> LatticeCoords {
    embed_dims(code.seed_dims())
}

pub fn embed_dims(dims: SeedDims) -> LatticeCoords {
    LatticeCoords {
        dims,
        zstabs: block_points(&dims, [false; 3]).collect(),
        qubits: C1_HALF.iter().flat_map(|&h| block_points(&dims, h)).collect(),
        xstabs: C2_HALF.iter().flat_map(|&h| block_points(&dims, h)).collect(),
        metachecks: block_points(&dims, [true; 3]).collect(),
    }
}

impl LatticeCoords {
    /// The object at `p`, if `p` is a valid coordinate.
    pub fn locate(&self, p: Point) -> Option<(ObjectClass, usize)> {
        let half = p.is_half();
        let sizes = axis_sizes(&self.dims, half);
        let idx = p.floor().map(|c| c - 1);
        if (0..3).any(|a| idx[a] >= sizes[a]) {
            return None;
        }
        let local = (idx[0] * sizes[1] + idx[1]) * sizes[2] + idx[2];
        let offset = |blocks: [usize; 3], which: usize| blocks[..which].iter().sum::<usize>();
        match half.iter().filter(|&&h| h).count() {
            0 => Some((ObjectClass::ZStabiliser, local)),
            3 => Some((ObjectClass::Metacheck, local)),
            1 => {
                let b = C1_HALF.iter().position(|&h| h == half)?;
                Some((ObjectClass::Qubit, offset(self.dims.c1_blocks(), b) + local))
            }
            _ => {
                let b = C2_HALF.iter().position(|&h| h == half)?;
                Some((ObjectClass::XStabiliser, offset(self.dims.c2_blocks(), b) + local))
            }
        }
    }

    pub fn qubit_type(&self, q: usize) -> ObjectType {
        let half = self.qubits[q].is_half();
        QUBIT_TYPES[C1_HALF.iter().position(|&h| h == half).expect("qubit point")]
    }

    pub fn xstab_type(&self, s: usize) -> ObjectType {
        let half = self.xstabs[s].is_half();
        XSTAB_TYPES[C2_HALF.iter().position(|&h| h == half).expect("face point")]
    }
}

/// Box semantics along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalityType {
    Torus,
    Euclidean,
}

/// True iff `values ⊆ {1..ν}` fits in `rho` consecutive integers, cyclically
/// modulo `nu` on a torus.
fn fits(values: &[usize], rho: usize, nu: usize, kind: LocalityType) -> bool {
    if values.is_empty() {
        return true;
    }
    match kind {
        LocalityType::Euclidean => {
            let lo = values.iter().min().unwrap();
            let hi = values.iter().max().unwrap();
            hi - lo < rho
        }
        LocalityType::Torus => values.iter().any(|&start| {
            values.iter().all(|&v| (v + nu - start) % nu < rho)
        }),
    }
}

/// Smallest `ρ` for which the matrix is geometrically `ρ`-local in the given
/// sense: every row support together with the row index, and every column
/// support with the column index, fits in `ρ` consecutive integers.
pub fn seed_locality(m: &SparseBitMatrix, kind: LocalityType) -> usize {
    let nu = m.rows().max(m.cols()).max(1);
    let sets = (0..m.rows())
        .map(|r| (r, m.row(r)))
        .chain((0..m.cols()).map(|c| (c, m.col(c))))
        .map(|(i, s)| {
            let mut v: Vec<usize> = s.iter().map(|x| x + 1).collect();
            v.push(i + 1);
            v
        })
        .collect::<Vec<_>>();
    (1..=nu)
        .find(|&rho| sets.iter().all(|s| fits(s, rho, nu, kind)))
        .unwrap_or(nu)
}

/// Euclidean when it is at least as tight as the torus reading, else torus.
pub fn detect_locality_type(m: &SparseBitMatrix) -> LocalityType {
    if seed_locality(m, LocalityType::Euclidean) <= seed_locality(m, LocalityType::Torus) {
        LocalityType::Euclidean
    } else {
        LocalityType::Torus
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalityReport {
    pub rho: usize,
    pub axis_types: [LocalityType; 3],
    pub local: bool,
    /// First offending stabiliser as `(is_x, index)`.
    pub first_violation: Option<(bool, usize)>,
}

/// Checks that every X-stabiliser fits a `ρ × ρ` box with weight `≤ 2ρ` and
/// every Z-stabiliser a `ρ × ρ × ρ` box with weight `≤ 3ρ`. Axis types are
/// detected from the seeds unless given.
pub fn check_locality_with(
    code: &ProductCode,
    coords: &LatticeCoords,
    rho: usize,
    types: Option<[LocalityType; 3]>,
) -> LocalityReport {
    let axis_types = types.unwrap_or_else(|| code.seeds.each_ref().map(|s| detect_locality_type(&s.matrix)));
    let nus = code.seeds.each_ref().map(|s| s.matrix.rows().max(s.matrix.cols()));
    let fits_box = |centre: Point, support: &[usize]| {
        (0..3).all(|a| {
            let mut vals: Vec<usize> = support.iter().map(|&q| coords.qubits[q].floor()[a]).collect();
            vals.push(centre.floor()[a]);
            fits(&vals, rho, nus[a], axis_types[a])
        })
    };
    let hx = code.hx();
    let hz = &code.hz;
    let mut first_violation = None;
    for s in 0..hx.rows() {
        if hx.row(s).len() > 2 * rho || !fits_box(coords.xstabs[s], hx.row(s)) {
            first_violation = Some((true, s));
            break;
        }
    }
    if first_violation.is_none() {
        for s in 0..hz.rows() {
            if hz.row(s).len() > 3 * rho || !fits_box(coords.zstabs[s], hz.row(s)) {
                first_violation = Some((false, s));
                break;
            }
        }
    }
    LocalityReport {
        rho,
        axis_types,
        local: first_violation.is_none(),
        first_violation,
    }
}

pub fn check_locality(code: &ProductCode, coords: &LatticeCoords, rho: usize) -> bool {
    check_locality_with(code, coords, rho, None).local
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LatticeObject {
    pub index: usize,
    #[serde(rename = "type")]
    pub kind: ObjectType,
    /// `[x, y, z]`.
    pub xyz: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LatticeExport {
    pub schema_version: u32,
    pub qubits: Vec<LatticeObject>,
    pub xstabs: Vec<LatticeObject>,
    pub zstabs: Vec<LatticeObject>,
    pub metachecks: Vec<LatticeObject>,
}

impl LatticeCoords {
    pub fn export(&self) -> LatticeExport {
        let list = |pts: &[Point], kind: &dyn Fn(usize) -> ObjectType| {
            pts.iter()
                .enumerate()
                .map(|(index, p)| LatticeObject { index, kind: kind(index), xyz: p.xyz() })
                .collect()
        };
        LatticeExport {
            schema_version: crate::product_code::SCHEMA_VERSION,
            qubits: list(&self.qubits, &|i| self.qubit_type(i)),
            xstabs: list(&self.xstabs, &|i| self.xstab_type(i)),
            zstabs: list(&self.zstabs, &|_| ObjectType::ZStabiliser),
            metachecks: list(&self.metachecks, &|_| ObjectType::Metacheck),
        }
    }
}
