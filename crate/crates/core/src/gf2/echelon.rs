use super::BitVector;

/// Outcome of inserting a vector into an [`EchelonBasis`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reduction {
    /// The vector was independent and now leads with `pivot`.
    Independent { pivot: usize },
    /// The vector lay in the span. With label tracking on, `combination`
    /// lists the labels of the basis vectors summing to it.
    Dependent { combination: Option<BitVector> },
}

/// Incremental XOR basis in triangular form: each stored vector's lowest set
/// bit is its pivot and no two share a pivot.
///
/// Optionally tracks, for every stored vector, which inserted labels it is a
/// combination of, so membership tests can also return a witness.
#[derive(Debug, Clone)]
pub struct EchelonBasis {
    len: usize,
    vectors: Vec<BitVector>,
    combos: Vec<BitVector>,
    pivot_slot: Vec<usize>,
    label_space: Option<usize>,
}

const NONE: usize = usize::MAX;

impl EchelonBasis {
    pub fn new(len: usize) -> Self {
        Self {
            len,
            vectors: Vec::new(),
            combos: Vec::new(),
            pivot_slot: vec![NONE; len],
            label_space: None,
        }
    }

    /// Basis that records combinations over labels `0..label_space`.
    pub fn with_labels(len: usize, label_space: usize) -> Self {
        Self {
            label_space: Some(label_space),
            ..Self::new(len)
        }
    }

    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    pub fn vector_len(&self) -> usize {
        self.len
    }

    pub fn vectors(&self) -> &[BitVector] {
        &self.vectors
    }

    /// Inserts `v` under `label` (ignored without tracking).
    pub fn insert(&mut self, mut v: BitVector, label: usize) -> Reduction {
        assert_eq!(v.len(), self.len);
        let mut combo = self.label_space.map(|n| {
            let mut c = BitVector::zeros(n);
            c.set(label, true);
            c
        });
        let mut from = 0;
        while let Some(b) = v.next_one(from) {
            let slot = self.pivot_slot[b];
            if slot == NONE {
                self.pivot_slot[b] = self.vectors.len();
                self.vectors.push(v);
                if let Some(c) = combo {
                    self.combos.push(c);
                }
                return Reduction::Independent { pivot: b };
            }
            v.xor_from(&self.vectors[slot], b);
            if let Some(c) = combo.as_mut() {
                c.xor_assign(&self.combos[slot]);
            }
            from = b + 1;
        }
        if let Some(c) = combo.as_mut() {
            c.set(label, false);
        }
        Reduction::Dependent { combination: combo }
    }

    /// Reduces `v` in place against every pivot. Returns true iff the result
    /// is zero, i.e. `v` was in the span. `combo`, when given, accumulates the
    /// labels used.
    pub fn reduce(&self, v: &mut BitVector, mut combo: Option<&mut BitVector>) -> bool {
        self.reduce_from(v, 0, combo.as_deref_mut())
    }

    /// As [`reduce`](Self::reduce), assuming bits below `from` are already
    /// reduced.
    pub fn reduce_from(&self, v: &mut BitVector, mut from: usize, mut combo: Option<&mut BitVector>) -> bool {
        assert_eq!(v.len(), self.len);
        let mut clean = true;
        while let Some(b) = v.next_one(from) {
            let slot = self.pivot_slot[b];
            if slot == NONE {
                clean = false;
            } else {
                v.xor_from(&self.vectors[slot], b);
                if let Some(c) = combo.as_deref_mut() {
                    c.xor_assign(&self.combos[slot]);
                }
            }
            from = b + 1;
        }
        clean
    }

    pub fn contains(&self, v: &BitVector) -> bool {
        let mut w = v.clone();
        self.reduce(&mut w, None)
    }

    /// The stored vector leading with `pivot`, with its label combination.
    pub fn by_pivot(&self, pivot: usize) -> Option<(&BitVector, Option<&BitVector>)> {
        let slot = self.pivot_slot[pivot];
        (slot != NONE).then(|| (&self.vectors[slot], self.combos.get(slot)))
    }
}

impl BitVector {
    /// Lowest set index `>= from`.
    pub fn next_one(&self, from: usize) -> Option<usize> {
        if from >= self.len {
            return None;
        }
        let mut wi = from / 64;
        let mut w = self.words[wi] & (u64::MAX << (from % 64));
        loop {
            if w != 0 {
                return Some(wi * 64 + w.trailing_zeros() as usize);
            }
            wi += 1;
            if wi >= self.words.len() {
                return None;
            }
            w = self.words[wi];
        }
    }

    /// XOR of `other` restricted to words containing index `from` onward.
    /// Only valid when `other` has no set bits below `from`.
    #[inline]
    pub(crate) fn xor_from(&mut self, other: &BitVector, from: usize) {
        let start = from / 64;
        for (a, b) in self.words[start..].iter_mut().zip(&other.words[start..]) {
            *a ^= b;
        }
    }
}
