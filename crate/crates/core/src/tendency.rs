//! Visual assessment of cluster tendency.
//!
//! [`vat_order`] reorders a dissimilarity matrix along a Prim minimum
//! spanning tree walk so clusters show up as dark diagonal blocks.
//! [`ivat_transform`] replaces every dissimilarity with the min-max path
//! distance (the largest edge on the cheapest connecting path), computed in
//! `O(n²)` by a single pass over the VAT order.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::distance::DissimilarityMatrix;
use crate::error::{Error, Result};

/// A VAT permutation and the matrix it produces.
#[derive(Debug, Clone, PartialEq)]
pub struct VatResult {
    /// `ordering[k]` is the original index shown at position `k`.
    pub ordering: Vec<usize>,
    pub reordered: DissimilarityMatrix,
}

/// VAT ordering. The walk starts at the row of the lexicographically first
/// maximal entry; each subsequent pick is the unvisited object nearest to the
/// visited set, ties going to the smaller index.
pub fn vat_order(dmat: &DissimilarityMatrix) -> VatResult {
    let ordering = prim_order(dmat);
    let reordered = dmat
        .permuted(&ordering)
        .expect("prim order is a permutation");
    VatResult {
        ordering,
        reordered,
    }
}

fn prim_order(dmat: &DissimilarityMatrix) -> Vec<usize> {
    let n = dmat.n();
    let mut start = 0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..n {
        for &v in dmat.row(i) {
            if v > best {
                best = v;
                start = i;
            }
        }
    }

    let mut visited = vec![false; n];
    // Distance from each object to the visited set.
    let mut reach = vec![f64::INFINITY; n];
    let mut order = Vec::with_capacity(n);
    let mut next = start;
    for _ in 0..n {
        visited[next] = true;
        order.push(next);
        let row = dmat.row(next);
        let mut pick = None;
        let mut pick_reach = f64::INFINITY;
        for k in 0..n {
            if visited[k] {
                continue;
            }
            if row[k] < reach[k] {
                reach[k] = row[k];
            }
            if pick.is_none() || reach[k] < pick_reach {
                pick = Some(k);
                pick_reach = reach[k];
            }
        }
        match pick {
            Some(k) => next = k,
            None => break,
        }
    }
    order
}

/// Min-max path distances of the VAT-reordered matrix, in the same (VAT) order.
pub fn ivat_reordered(vat: &VatResult) -> DissimilarityMatrix {
    let r = &vat.reordered;
    let n = r.n();
    let mut out = vec![0.0; n * n];
    for row in 1..n {
        // MST parent of `row`: its nearest predecessor in the VAT order.
        let mut parent = 0;
        for k in 1..row {
            if r.get(row, k) < r.get(row, parent) {
                parent = k;
            }
        }
        let edge = r.get(row, parent);
        for col in 0..row {
            let v = if col == parent {
                edge
            } else {
                edge.max(out[parent * n + col])
            };
            out[row * n + col] = v;
            out[col * n + row] = v;
        }
    }
    DissimilarityMatrix::from_parts(n, out)
}

/// Min-max path transform, indexed like the input.
pub fn ivat_transform(dmat: &DissimilarityMatrix) -> DissimilarityMatrix {
    let vat = vat_order(dmat);
    let ordered = ivat_reordered(&vat);
    let n = dmat.n();
    let mut out = vec![0.0; n * n];
    for (a, &i) in vat.ordering.iter().enumerate() {
        for (b, &j) in vat.ordering.iter().enumerate() {
            out[i * n + j] = ordered.get(a, b);
        }
    }
    DissimilarityMatrix::from_parts(n, out)
}

/// 8-bit grayscale pixels, `round(255 · v / scale_max)`, row-major.
/// A non-positive `scale_max` renders everything black.
pub fn grayscale_pixels(m: &DissimilarityMatrix, scale_max: f64) -> Vec<u8> {
    m.as_flat()
        .iter()
        .map(|&v| {
            if scale_max > 0.0 {
                (255.0 * (v / scale_max).min(1.0)).round() as u8
            } else {
                0
            }
        })
        .collect()
}

/// Binary PGM (P5) image of `m`, normalized by its own maximum.
pub fn pgm_bytes(m: &DissimilarityMatrix) -> Vec<u8> {
    pgm_bytes_scaled(m, m.max_value())
}

pub fn pgm_bytes_scaled(m: &DissimilarityMatrix, scale_max: f64) -> Vec<u8> {
    let n = m.n();
    let mut bytes = format!("P5\n{n} {n}\n255\n").into_bytes();
    bytes.extend(grayscale_pixels(m, scale_max));
    bytes
}

/// Writes [`pgm_bytes`] to `path`.
pub fn render_pgm(m: &DissimilarityMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), &pgm_bytes(m))
}

/// Writes [`pgm_bytes_scaled`] to `path`.
pub fn render_pgm_scaled(
    m: &DissimilarityMatrix,
    scale_max: f64,
    path: impl AsRef<Path>,
) -> Result<()> {
    write_bytes(path.as_ref(), &pgm_bytes_scaled(m, scale_max))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let write = || -> std::io::Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(bytes)?;
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}
