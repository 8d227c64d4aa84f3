//! Sparse binary parity-check matrices.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{stream, Domain};
use crate::sample::partial_fisher_yates;

/// Upper bound on the column weight. Decoder counters are bytes.
pub const MAX_COLUMN_WEIGHT: usize = 255;

/// Upper bound on the number of ones (`n·v`) of a materialized matrix.
pub const MAX_ENTRIES: usize = 1 << 24;

/// How the matrix was built.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Structure {
    /// Arbitrary `(v, w)`-regular matrix.
    General,
    /// `n0` circulant `p × p` blocks side by side; `first_columns[b]` is the
    /// sorted support of the first column of block `b`.
    QuasiCyclic { p: usize, n0: usize, first_columns: Vec<Vec<u32>> },
}

/// A `(v, w)`-regular sparse parity-check matrix with `r` rows and `n`
/// columns, stored by both row and column supports.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    n: usize,
    r: usize,
    v: usize,
    w: usize,
    // Flattened: row l is rows[l*w..(l+1)*w], column j is cols[j*v..(j+1)*v].
    rows: Vec<u32>,
    cols: Vec<u32>,
    structure: Structure,
    seed: u64,
}

impl ParityCheckMatrix {
    /// Builds a matrix from its row supports. Every row must be strictly
    /// ascending with the same weight, and every column must end up with the
    /// same (non-zero) weight.
    pub fn from_rows(n: usize, rows: &[Vec<u32>], seed: u64) -> Result<Self> {
        let r = rows.len();
        if n == 0 || r == 0 {
            return Err(Error::params("matrix must have at least one row and one column"));
        }
        if n > u32::MAX as usize {
            return Err(Error::params(format!("n = {n} exceeds the index width")));
        }
        let w = rows[0].len();
        if w == 0 || w > n {
            return Err(Error::params(format!("row weight {w} outside 1..={n}")));
        }
        let total = r.checked_mul(w).filter(|&e| e <= MAX_ENTRIES).ok_or_else(|| {
            Error::params(format!("{r} rows of weight {w} exceed the size limit"))
        })?;
        let mut flat = Vec::with_capacity(total);
        let mut col_weight = vec![0usize; n];
        for (l, row) in rows.iter().enumerate() {
            if row.len() != w {
                return Err(Error::params(format!(
                    "row {l} has weight {}, expected {w}",
                    row.len()
                )));
            }
            check_sorted_support(row, n).map_err(|m| Error::params(format!("row {l}: {m}")))?;
            for &j in row {
                col_weight[j as usize] += 1;
            }
            flat.extend_from_slice(row);
        }
        let v = col_weight[0];
        if let Some(j) = col_weight.iter().position(|&c| c != v) {
            return Err(Error::params(format!(
                "column {j} has weight {}, expected {v}",
                col_weight[j]
            )));
        }
        if v == 0 || v > MAX_COLUMN_WEIGHT {
            return Err(Error::params(format!("column weight {v} outside 1..={MAX_COLUMN_WEIGHT}")));
        }
        let cols = transpose(&flat, r, w, n, v);
        Ok(ParityCheckMatrix { n, r, v, w, rows: flat, cols, structure: Structure::General, seed })
    }

    /// Builds a quasi-cyclic matrix from the first-column support of each
    /// circulant block.
    pub fn from_qc_blocks(p: usize, first_columns: Vec<Vec<u32>>, seed: u64) -> Result<Self> {
        let n0 = first_columns.len();
        if p == 0 || n0 == 0 {
            return Err(Error::params("quasi-cyclic code needs p ≥ 1 and n0 ≥ 1"));
        }
        let v = first_columns[0].len();
        if v == 0 || v >= p || v > MAX_COLUMN_WEIGHT {
            return Err(Error::params(format!("block weight v = {v} must satisfy 1 ≤ v < p = {p}")));
        }
        let n = n0.checked_mul(p).ok_or_else(|| Error::params("n0·p overflows"))?;
        if n > u32::MAX as usize || n.checked_mul(v).is_none_or(|e| e > MAX_ENTRIES) {
            return Err(Error::params(format!("code of length {n} and weight {v} is too large")));
        }
        for (b, col) in first_columns.iter().enumerate() {
            if col.len() != v {
                return Err(Error::params(format!(
                    "block {b} has weight {}, expected {v}",
                    col.len()
                )));
            }
            check_sorted_support(col, p).map_err(|m| Error::params(format!("block {b}: {m}")))?;
        }
        let r = p;
        let w = n0 * v;
        let mut cols = Vec::with_capacity(n * v);
        let mut scratch = Vec::with_capacity(v);
        for col in &first_columns {
            for shift in 0..p {
                scratch.clear();
                scratch.extend(col.iter().map(|&c| ((c as usize + shift) % p) as u32));
                scratch.sort_unstable();
                cols.extend_from_slice(&scratch);
            }
        }
        let rows = transpose(&cols, n, v, r, w);
        Ok(ParityCheckMatrix {
            n,
            r,
            v,
            w,
            rows,
            cols,
            structure: Structure::QuasiCyclic { p, n0, first_columns },
            seed,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn r(&self) -> usize {
        self.r
    }

    /// Column weight.
    #[inline]
    pub fn v(&self) -> usize {
        self.v
    }

    /// Row weight.
    #[inline]
    pub fn w(&self) -> usize {
        self.w
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    /// `(p, n0)` when quasi-cyclic.
    pub fn qc_shape(&self) -> Option<(usize, usize)> {
        match self.structure {
            Structure::QuasiCyclic { p, n0, .. } => Some((p, n0)),
            Structure::General => None,
        }
    }

    #[inline]
    pub fn row(&self, l: usize) -> &[u32] {
        &self.rows[l * self.w..(l + 1) * self.w]
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[u32] {
        &self.cols[j * self.v..(j + 1) * self.v]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.rows.chunks_exact(self.w)
    }

    pub fn cols(&self) -> impl Iterator<Item = &[u32]> {
        self.cols.chunks_exact(self.v)
    }

    /// Number of rows in which columns `i` and `j` both have a one.
    pub fn column_intersection(&self, i: usize, j: usize) -> Result<usize> {
        for idx in [i, j] {
            if idx >= self.n {
                return Err(Error::IndexOutOfRange { index: idx, len: self.n });
            }
        }
        Ok(sorted_intersection_len(self.col(i), self.col(j)))
    }

    /// Rebuilds the column supports from the row supports.
    pub fn columns_from_rows(&self) -> Vec<Vec<u32>> {
        transpose(&self.rows, self.r, self.w, self.n, self.v)
            .chunks_exact(self.v)
            .map(<[u32]>::to_vec)
            .collect()
    }
}

/// `(v, w)`-regular matrix by Gallager's construction: `v` horizontal strips of
/// `r / v` rows. In strip 0 row `k` covers columns `k·w .. k·w + w`; every
/// other strip applies an independent seeded column permutation to that
/// pattern.
pub fn gen_regular(n: usize, r: usize, v: usize, w: usize, seed: u64) -> Result<ParityCheckMatrix> {
    if v == 0 || w == 0 {
        return Err(Error::params("row and column weights must be positive"));
    }
    if n.checked_mul(v) != r.checked_mul(w) {
        return Err(Error::params(format!("n·v = {n}·{v} differs from r·w = {r}·{w}")));
    }
    if w >= n {
        return Err(Error::params(format!("row weight w = {w} must be below n = {n}")));
    }
    if v >= r {
        return Err(Error::params(format!("column weight v = {v} must be below r = {r}")));
    }
    if n % w != 0 {
        return Err(Error::params(format!("Gallager strips need w | n (n = {n}, w = {w})")));
    }
    if v > MAX_COLUMN_WEIGHT || n.saturating_mul(v) > MAX_ENTRIES {
        return Err(Error::params("matrix exceeds the supported size"));
    }
    let rows_per_strip = n / w;
    let mut rng = stream(seed, Domain::KeyGen, 0);
    let mut perm: Vec<u32> = (0..n as u32).collect();
    let mut rows = Vec::with_capacity(r);
    for strip in 0..v {
        if strip > 0 {
            perm.shuffle(&mut rng);
        }
        for k in 0..rows_per_strip {
            let mut row: Vec<u32> = perm[k * w..(k + 1) * w].to_vec();
            row.sort_unstable();
            rows.push(row);
        }
    }
    ParityCheckMatrix::from_rows(n, &rows, seed)
}

/// Quasi-cyclic matrix of `n0` circulant `p × p` blocks, each with a uniformly
/// random weight-`v` first column.
pub fn gen_qc(p: usize, n0: usize, v: usize, seed: u64) -> Result<ParityCheckMatrix> {
    if v >= p {
        return Err(Error::params(format!("block weight v = {v} must be below p = {p}")));
    }
    if v == 0 || n0 == 0 {
        return Err(Error::params("quasi-cyclic code needs v ≥ 1 and n0 ≥ 1"));
    }
    if p > u32::MAX as usize {
        return Err(Error::params("p exceeds the index width"));
    }
    let blocks = (0..n0)
        .map(|b| {
            let mut rng = stream(seed, Domain::KeyGen, b as u64);
            let mut col = partial_fisher_yates(&mut rng, p as u32, v as u32);
            col.sort_unstable();
            col
        })
        .collect();
    ParityCheckMatrix::from_qc_blocks(p, blocks, seed)
}

/// Size of the intersection of two ascending index lists.
pub fn sorted_intersection_len(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

fn check_sorted_support(s: &[u32], bound: usize) -> std::result::Result<(), String> {
    if let Some(&last) = s.last() {
        if last as usize >= bound {
            return Err(format!("index {last} out of range (bound {bound})"));
        }
    }
    if s.windows(2).any(|p| p[0] >= p[1]) {
        return Err("indices must be strictly ascending".into());
    }
    Ok(())
}

// Turns `outer` lists of `inner_w` entries (each < `dim`) into `dim` lists of
// `out_w` entries. Outputs are ascending because outer indices are visited in
// order.
fn transpose(flat: &[u32], outer: usize, inner_w: usize, dim: usize, out_w: usize) -> Vec<u32> {
    let mut fill = vec![0usize; dim];
    let mut out = vec![0u32; dim * out_w];
    for o in 0..outer {
        for &x in &flat[o * inner_w..(o + 1) * inner_w] {
            let x = x as usize;
            out[x * out_w + fill[x]] = o as u32;
            fill[x] += 1;
        }
    }
    debug_assert!(fill.iter().all(|&f| f == out_w));
    out
}
