//! Pairwise column intersection counts.

use crate::code::{ParityCheckMatrix, Structure};
use crate::error::{Error, Result};
use crate::spectrum::{fold_pair_qc, spectrum_from_gamma, DistanceSpectrum, QcPairKey};

/// Largest code length for which a dense upper-triangular table is built.
pub const MAX_DENSE_N: usize = 1 << 16;

/// Index of the unordered pair `i < j` in a row-major upper-triangular array
/// over `n` items (diagonal excluded).
#[inline]
pub fn upper_tri_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// Number of unordered pairs over `n` items.
#[inline]
pub fn upper_tri_len(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Inverse of [`upper_tri_index`].
pub fn upper_tri_pair(n: usize, mut idx: usize) -> (usize, usize) {
    for i in 0..n {
        let row = n - i - 1;
        if idx < row {
            return (i, i + 1 + idx);
        }
        idx -= row;
    }
    panic!("pair index out of range");
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Storage {
    Dense { n: usize, data: Vec<u8> },
    QcFolded { p: usize, n0: usize, data: Vec<u8> },
}

/// `γ_{i,j}`, the number of rows where columns `i` and `j` both have a one,
/// for every column pair of a matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaMatrix {
    v: usize,
    storage: Storage,
}

impl GammaMatrix {
    /// Folded table for quasi-cyclic matrices, dense table otherwise.
    pub fn from_matrix(h: &ParityCheckMatrix) -> Result<Self> {
        match h.structure() {
            Structure::QuasiCyclic { p, n0, first_columns } => {
                Ok(Self::from_qc_blocks(*p, *n0, first_columns, h.v()))
            }
            Structure::General => Self::dense(h),
        }
    }

    /// Dense table regardless of structure.
    pub fn dense(h: &ParityCheckMatrix) -> Result<Self> {
        let n = h.n();
        if n > MAX_DENSE_N {
            return Err(Error::params(format!(
                "dense gamma table limited to n ≤ {MAX_DENSE_N}, got {n}"
            )));
        }
        let mut data = vec![0u8; upper_tri_len(n)];
        for row in h.rows() {
            for (k, &a) in row.iter().enumerate() {
                for &b in &row[k + 1..] {
                    data[upper_tri_index(n, a as usize, b as usize)] += 1;
                }
            }
        }
        Ok(GammaMatrix { v: h.v(), storage: Storage::Dense { n, data } })
    }

    fn from_qc_blocks(p: usize, n0: usize, first_columns: &[Vec<u32>], v: usize) -> Self {
        let mut data = vec![0u8; n0 * (n0 + 1) / 2 * p];
        for a in 0..n0 {
            for b in a..n0 {
                // Column x of block a overlaps column y of block b once for
                // every (c, c') with c − c' ≡ y − x (mod p).
                let mut by_offset = vec![0u8; p];
                for &c in &first_columns[a] {
                    for &c2 in &first_columns[b] {
                        by_offset[(c as usize + p - c2 as usize) % p] += 1;
                    }
                }
                for (shift, &g) in by_offset.iter().enumerate() {
                    if a == b && (shift == 0 || shift > p / 2) {
                        continue;
                    }
                    let key = QcPairKey { block_a: a as u32, block_b: b as u32, shift: shift as u32 };
                    data[key.slot(p, n0)] = g;
                }
            }
        }
        GammaMatrix { v, storage: Storage::QcFolded { p, n0, data } }
    }

    pub fn n(&self) -> usize {
        match &self.storage {
            Storage::Dense { n, .. } => *n,
            Storage::QcFolded { p, n0, .. } => p * n0,
        }
    }

    pub fn is_folded(&self) -> bool {
        matches!(self.storage, Storage::QcFolded { .. })
    }

    /// `(p, n0)` of a folded table.
    pub fn qc_shape(&self) -> Option<(usize, usize)> {
        match self.storage {
            Storage::QcFolded { p, n0, .. } => Some((p, n0)),
            Storage::Dense { .. } => None,
        }
    }

    /// Column weight of the source matrix.
    pub fn v(&self) -> usize {
        self.v
    }

    /// `γ_{i,j}`; `γ_{i,i} = v`.
    pub fn get(&self, i: usize, j: usize) -> Result<u8> {
        let n = self.n();
        for idx in [i, j] {
            if idx >= n {
                return Err(Error::IndexOutOfRange { index: idx, len: n });
            }
        }
        if i == j {
            return Ok(self.v as u8);
        }
        Ok(self.get_unchecked(i, j))
    }

    #[inline]
    pub(crate) fn get_unchecked(&self, i: usize, j: usize) -> u8 {
        match &self.storage {
            Storage::Dense { n, data } => {
                let (a, b) = if i < j { (i, j) } else { (j, i) };
                data[upper_tri_index(*n, a, b)]
            }
            Storage::QcFolded { p, n0, data } => {
                data[crate::spectrum::fold_pair_unchecked(*p, i, j).slot(*p, *n0)]
            }
        }
    }

    /// `γ` for a folded pair key (quasi-cyclic tables only).
    pub fn get_folded(&self, key: QcPairKey) -> Result<u8> {
        match &self.storage {
            Storage::QcFolded { p, n0, data } => {
                if key.block_b as usize >= *n0
                    || key.block_a > key.block_b
                    || (key.is_same_block() && (key.shift == 0 || key.shift as usize > p / 2))
                    || key.shift as usize >= *p
                {
                    return Err(Error::InvalidSupport(format!("invalid folded key {key:?}")));
                }
                Ok(data[key.slot(*p, *n0)])
            }
            Storage::Dense { .. } => Err(Error::NotQuasiCyclic),
        }
    }

    /// Same-block intersection counts of block `block` at distances
    /// `1..=p/2`.
    pub fn block_classes(&self, block: usize) -> Result<Vec<u32>> {
        match &self.storage {
            Storage::QcFolded { p, n0, .. } => {
                if block >= *n0 {
                    return Err(Error::IndexOutOfRange { index: block, len: *n0 });
                }
                (1..=p / 2)
                    .map(|d| {
                        let key = fold_pair_qc(*p, *n0, block * p, block * p + d)?;
                        self.get_folded(key).map(u32::from)
                    })
                    .collect()
            }
            Storage::Dense { .. } => Err(Error::NotQuasiCyclic),
        }
    }

    /// Distance spectrum of every circulant block, derived from the
    /// intersection counts.
    pub fn block_spectra(&self) -> Result<Vec<DistanceSpectrum>> {
        match &self.storage {
            Storage::QcFolded { p, n0, .. } => (0..*n0)
                .map(|b| spectrum_from_gamma(&self.block_classes(b)?, *p))
                .collect(),
            Storage::Dense { .. } => Err(Error::NotQuasiCyclic),
        }
    }

    /// Histogram of γ over all unordered column pairs (multiplicity-weighted
    /// for folded tables).
    pub fn histogram(&self) -> Vec<u64> {
        let mut hist = vec![0u64; self.v + 1];
        match &self.storage {
            Storage::Dense { data, .. } => {
                for &g in data {
                    hist[g as usize] += 1;
                }
            }
            Storage::QcFolded { p, n0, data } => {
                for (slot, &g) in data.iter().enumerate() {
                    if let Some(key) = QcPairKey::from_slot(slot, *p, *n0) {
                        // p/2 on even p is hit by p/2 pairs, every other class by p.
                        let weight = if key.is_same_block() && 2 * key.shift as usize == *p {
                            *p / 2
                        } else {
                            *p
                        };
                        hist[g as usize] += weight as u64;
                    }
                }
            }
        }
        hist
    }
}
