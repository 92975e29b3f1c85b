//! Generators of `cone(U)` for `U = {u : Aᵀu <= a}`.
//!
//! Atoms use hard-coded generators. When every block's `U` contains the origin,
//! `cone(U₁ × U₂) = cone(U₁) × cone(U₂)`, so per-block generators are simply embedded
//! in the block coordinates. Raw polyhedra go through brute-force enumeration of
//! vertices and extreme rays over active sets, guarded by a size bound.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::psd_range_and_null;
use crate::penalty::{BlockKind, PlqPenalty};

const FEAS_TOL: f64 = 1e-9;

pub(super) fn cone_generators(p: &PlqPenalty, limit: usize) -> Result<Vec<DVector<f64>>> {
    let dim_u = p.dim_u();
    let contains_origin = p.constraint_rhs().iter().all(|&a| a >= -FEAS_TOL);
    if !contains_origin {
        return polyhedron_generators(p.constraint_matrix(), p.constraint_rhs(), limit);
    }

    let mut out = Vec::new();
    for blk in p.blocks() {
        let local = match blk.kind {
            BlockKind::Atom(kind) => kind.cone_generators(),
            BlockKind::Raw => {
                let parts = p.block_parts(blk);
                polyhedron_generators(&parts.a_mat, &parts.a_rhs, limit)?
            }
        };
        for g in local {
            let mut full = DVector::zeros(dim_u);
            full.rows_mut(blk.u.start, blk.u.len()).copy_from(&g);
            out.push(full);
        }
        if out.len() > limit {
            return Err(Error::TooComplex { limit });
        }
    }
    Ok(out)
}

/// Vertices, extreme rays and `±` lineality directions of `{u : Aᵀu <= a}`.
fn polyhedron_generators(a_mat: &DMatrix<f64>, a_rhs: &DVector<f64>, limit: usize) -> Result<Vec<DVector<f64>>> {
    let dim = a_mat.nrows();
    let n_con = a_mat.ncols();
    let mut out: Vec<DVector<f64>> = Vec::new();

    let (range, lineality) = if n_con == 0 {
        (DMatrix::zeros(dim, 0), DMatrix::identity(dim, dim))
    } else {
        psd_range_and_null(&(a_mat * a_mat.transpose()), 1e-12)
    };
    for l in lineality.column_iter() {
        out.push(l.into_owned());
        out.push(-l.into_owned());
    }
    let rank = range.ncols();
    if rank == 0 {
        // Any point of U (the origin is one when all constraints read 0 <= a).
        return Ok(out);
    }

    // Pointed polyhedron {c : C c <= a} in range coordinates.
    let c_mat = a_mat.tr_mul(&range);
    if binomial(n_con, rank).saturating_add(binomial(n_con, rank - 1)) > limit {
        return Err(Error::TooComplex { limit });
    }
    let scale = 1.0 + a_rhs.amax();

    for subset in combinations(n_con, rank) {
        let sub = select_rows(&c_mat, &subset);
        let rhs = DVector::from_iterator(rank, subset.iter().map(|&i| a_rhs[i]));
        let lu = sub.clone().lu();
        let Some(c) = lu.solve(&rhs) else { continue };
        if (&sub * &c - &rhs).amax() > 1e-9 * scale || !c.iter().all(|v| v.is_finite()) {
            continue;
        }
        let slack = (&c_mat * &c) - a_rhs;
        if slack.max() <= FEAS_TOL * scale {
            push_unique(&mut out, &range * c);
        }
    }

    for subset in combinations(n_con, rank - 1) {
        let sub = select_rows(&c_mat, &subset);
        let (_, null) = psd_range_and_null(&(sub.transpose() * &sub), 1e-12);
        if null.ncols() != 1 {
            continue;
        }
        let d = null.column(0).into_owned();
        for dir in [d.clone(), -d] {
            if (&c_mat * &dir).max() <= FEAS_TOL {
                push_unique(&mut out, &range * dir);
            }
        }
    }

    if out.len() > limit {
        return Err(Error::TooComplex { limit });
    }
    Ok(out)
}

fn push_unique(out: &mut Vec<DVector<f64>>, v: DVector<f64>) {
    let scale = 1.0 + v.amax();
    if !out.iter().any(|w| (w - &v).amax() <= 1e-9 * scale) {
        out.push(v);
    }
}

fn select_rows(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(4, 0), 1);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn unit_square_vertices() {
        let a = DMatrix::from_row_slice(2, 4, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]);
        let rhs = DVector::from_vec(vec![1.0, 1.0, 0.0, 0.0]);
        let gens = polyhedron_generators(&a, &rhs, 100).unwrap();
        assert_eq!(gens.len(), 4);
        for corner in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]] {
            let c = DVector::from_row_slice(&corner);
            assert!(gens.iter().any(|g| (g - &c).amax() < 1e-12), "{corner:?}");
        }
    }

    #[test]
    fn quadrant_with_lineality() {
        // U = {u : u1 <= 1} in R², lineality along u2.
        let a = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let rhs = DVector::from_vec(vec![1.0]);
        let gens = polyhedron_generators(&a, &rhs, 100).unwrap();
        // ±e2, vertex (1, 0) in range coordinates, ray -e1.
        assert_eq!(gens.len(), 4);
        assert!(gens.iter().any(|g| (g - DVector::from_vec(vec![-1.0, 0.0])).amax() < 1e-12));
    }

    #[test]
    fn size_bound_enforced() {
        let a = DMatrix::from_fn(3, 40, |i, j| ((i + 1) as f64 * (j as f64 + 0.5)).sin());
        let rhs = DVector::from_element(40, 1.0);
        assert_eq!(polyhedron_generators(&a, &rhs, 100), Err(Error::TooComplex { limit: 100 }));
    }
}
