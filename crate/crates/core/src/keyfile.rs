//! Text key files.
//!
//! ```text
//! kind n r v w p n0 seed
//! <support line>
//! ...
//! ```
//!
//! `kind` is `general` or `qc`. General codes store `p = n0 = 0` followed by
//! one line per row listing its column indices in ascending order.
//! Quasi-cyclic codes store one line per circulant block with the support of
//! the block's first column. Numbers are separated by single spaces.

use std::fmt::Write as _;

use crate::code::{ParityCheckMatrix, Structure};
use crate::error::{Error, Result};

/// Serializes a matrix. Equal matrices produce byte-identical files.
pub fn write_key(h: &ParityCheckMatrix) -> String {
    let mut out = String::new();
    match h.structure() {
        Structure::General => {
            let _ = writeln!(out, "general {} {} {} {} 0 0 {}", h.n(), h.r(), h.v(), h.w(), h.seed());
            for row in h.rows() {
                push_line(&mut out, row);
            }
        }
        Structure::QuasiCyclic { p, n0, first_columns } => {
            let _ = writeln!(out, "qc {} {} {} {} {p} {n0} {}", h.n(), h.r(), h.v(), h.w(), h.seed());
            for col in first_columns {
                push_line(&mut out, col);
            }
        }
    }
    out
}

fn push_line(out: &mut String, items: &[u32]) {
    for (k, x) in items.iter().enumerate() {
        if k > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{x}");
    }
    out.push('\n');
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    General,
    Qc,
}

/// Parses a key file. Rejects malformed headers, inconsistent dimensions,
/// weight mismatches, unsorted or out-of-range indices and trailing data.
pub fn parse_key(text: &str) -> Result<ParityCheckMatrix> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim_end_matches('\r')));
    let (hline, header) = lines.next().ok_or_else(|| Error::parse(1, "empty key file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 8 {
        return Err(Error::parse(hline, format!("header needs 8 fields, found {}", fields.len())));
    }
    let kind = match fields[0] {
        "general" => Kind::General,
        "qc" => Kind::Qc,
        other => return Err(Error::parse(hline, format!("unknown key kind {other:?}"))),
    };
    let num = |k: usize| -> Result<u64> {
        fields[k]
            .parse::<u64>()
            .map_err(|_| Error::parse(hline, format!("field {} is not an integer: {:?}", k + 1, fields[k])))
    };
    let as_usize = |x: u64| -> Result<usize> {
        usize::try_from(x).map_err(|_| Error::parse(hline, "value exceeds the platform word"))
    };
    let n = as_usize(num(1)?)?;
    let r = as_usize(num(2)?)?;
    let v = as_usize(num(3)?)?;
    let w = as_usize(num(4)?)?;
    let p = as_usize(num(5)?)?;
    let n0 = as_usize(num(6)?)?;
    let seed = num(7)?;

    if v == 0 || w == 0 {
        return Err(Error::parse(hline, "row and column weights must be positive"));
    }
    let expected_lines = match kind {
        Kind::General => {
            if p != 0 || n0 != 0 {
                return Err(Error::parse(hline, "general codes must have p = n0 = 0"));
            }
            if n.checked_mul(v).is_none() || n.checked_mul(v) != r.checked_mul(w) {
                return Err(Error::parse(hline, "n·v must equal r·w"));
            }
            r
        }
        Kind::Qc => {
            if r != p || Some(n) != n0.checked_mul(p) || Some(w) != n0.checked_mul(v) {
                return Err(Error::parse(hline, "qc codes need r = p, n = n0·p and w = n0·v"));
            }
            n0
        }
    };

    let mut supports: Vec<Vec<u32>> = Vec::new();
    let line_weight = if kind == Kind::General { w } else { v };
    let bound = if kind == Kind::General { n } else { p };
    for (lno, line) in lines.by_ref() {
        if supports.len() == expected_lines {
            if line.trim().is_empty() {
                continue;
            }
            return Err(Error::parse(lno, "unexpected data after the last support line"));
        }
        let mut items = Vec::with_capacity(line_weight.min(4096));
        for tok in line.split_whitespace() {
            let x: u32 =
                tok.parse().map_err(|_| Error::parse(lno, format!("bad index {tok:?}")))?;
            if x as usize >= bound {
                return Err(Error::parse(lno, format!("index {x} out of range (< {bound})")));
            }
            if items.last().is_some_and(|&prev| prev >= x) {
                return Err(Error::parse(lno, "indices must be strictly ascending"));
            }
            items.push(x);
            if items.len() > line_weight {
                break;
            }
        }
        if items.len() != line_weight {
            return Err(Error::parse(
                lno,
                format!("support has weight {}, header says {line_weight}", items.len()),
            ));
        }
        supports.push(items);
    }
    if supports.len() != expected_lines {
        return Err(Error::parse(
            text.lines().count() + 1,
            format!("expected {expected_lines} support lines, found {}", supports.len()),
        ));
    }

    let h = match kind {
        Kind::General => ParityCheckMatrix::from_rows(n, &supports, seed)?,
        Kind::Qc => ParityCheckMatrix::from_qc_blocks(p, supports, seed)?,
    };
    if h.n() != n || h.r() != r || h.v() != v || h.w() != w {
        return Err(Error::parse(hline, "header dimensions disagree with the supports"));
    }
    Ok(h)
}
