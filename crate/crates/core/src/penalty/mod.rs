//! Piecewise linear-quadratic penalties.
//!
//! A [`PlqPenalty`] is the tuple `(A, a, M, b, B)` describing
//!
//! ```text
//! rho(y) = sup_{u in U} <u, b + B y> - 1/2 <u, M u>,    U = { u : Aᵀu <= a }.
//! ```
//!
//! Penalties keep track of how they were built: each one is a list of [`Block`]s laid
//! out block-diagonally, and a block is either one of the four scalar atoms (L2, L1,
//! Huber, Vapnik) or a raw user-supplied penalty. Atom blocks evaluate in closed form;
//! raw blocks go through the generic dual supremum in [`dual_sup`].

mod dual_sup;
mod spec;

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{block_diag, is_symmetric, psd_null_space};
use crate::lp;

pub(crate) use dual_sup::max_step;
pub use spec::{rows_to_matrix, PenaltySpec, RawPenaltySpec};

/// Relative tolerance for treating an eigenvalue of `M` as zero (or negative).
pub const TOL_PSD: f64 = 1e-10;
/// Relative tolerance on the smallest singular value of `B`.
pub const TOL_RANK: f64 = 1e-12;
/// Tolerance on LP optima that should be zero.
pub(crate) const TOL_LP: f64 = 1e-9;

/// The four scalar penalties with a closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AtomKind {
    /// `½ y²`
    L2,
    /// `|scale · y|`
    L1 { scale: f64 },
    /// Quadratic on `[-kappa, kappa]`, linear outside.
    Huber { kappa: f64 },
    /// `max(|y| - epsilon, 0)`
    Vapnik { epsilon: f64 },
}

impl AtomKind {
    pub fn validate(&self) -> Result<()> {
        let (name, value) = match *self {
            AtomKind::L2 => return Ok(()),
            AtomKind::L1 { scale } => ("l1 scale", scale),
            AtomKind::Huber { kappa } => ("huber kappa", kappa),
            AtomKind::Vapnik { epsilon } => ("vapnik epsilon", epsilon),
        };
        if value.is_finite() && value > 0.0 {
            Ok(())
        } else {
            Err(invalid(format!("{name} must be positive and finite, got {value}")))
        }
    }

    /// Dimension of the dual variable.
    pub fn dim_u(&self) -> usize {
        match self {
            AtomKind::Vapnik { .. } => 2,
            _ => 1,
        }
    }

    /// Closed-form value at a scalar argument.
    pub fn eval(&self, y: f64) -> f64 {
        match *self {
            AtomKind::L2 => 0.5 * y * y,
            AtomKind::L1 { scale } => (scale * y).abs(),
            AtomKind::Huber { kappa } => {
                if y.abs() <= kappa {
                    0.5 * y * y
                } else {
                    kappa * y.abs() - 0.5 * kappa * kappa
                }
            }
            AtomKind::Vapnik { epsilon } => (y.abs() - epsilon).max(0.0),
        }
    }

    /// Strictly interior point of the atom's `U`.
    fn dual_start(&self) -> DVector<f64> {
        match self {
            AtomKind::Vapnik { .. } => DVector::from_element(2, 0.5),
            _ => DVector::zeros(1),
        }
    }

    /// Points whose conic hull is `cone(U)`.
    pub(crate) fn cone_generators(&self) -> Vec<DVector<f64>> {
        let scalar = |v: f64| DVector::from_element(1, v);
        match *self {
            AtomKind::L2 | AtomKind::L1 { .. } => vec![scalar(1.0), scalar(-1.0)],
            AtomKind::Huber { kappa } => vec![scalar(kappa), scalar(-kappa)],
            AtomKind::Vapnik { .. } => vec![
                DVector::from_vec(vec![1.0, 0.0]),
                DVector::from_vec(vec![0.0, 1.0]),
                DVector::from_vec(vec![1.0, 1.0]),
            ],
        }
    }
}

impl std::fmt::Display for AtomKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AtomKind::L2 => write!(f, "l2"),
            AtomKind::L1 { scale } => write!(f, "l1(scale={scale})"),
            AtomKind::Huber { kappa } => write!(f, "huber(kappa={kappa})"),
            AtomKind::Vapnik { epsilon } => write!(f, "vapnik(epsilon={epsilon})"),
        }
    }
}

/// Origin of one diagonal block of a penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlockKind {
    Atom(AtomKind),
    Raw,
}

/// One diagonal block of a [`PlqPenalty`], with its index ranges into `u`, `y` and the
/// constraint list.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub kind: BlockKind,
    pub u: Range<usize>,
    pub y: Range<usize>,
    pub constraints: Range<usize>,
    /// `Null(M) ∩ U^∞` is nontrivial for this block.
    pub(crate) degenerate: bool,
}

/// The owned `(A, a, M, b, B)` pieces of a single block.
#[derive(Debug, Clone)]
pub(crate) struct BlockParts {
    pub a_mat: DMatrix<f64>,
    pub a_rhs: DVector<f64>,
    pub m: DMatrix<f64>,
    pub b: DVector<f64>,
    pub b_mat: DMatrix<f64>,
}

/// A PLQ penalty `rho_{U,M,b,B}` with `U = {u : Aᵀu <= a}`.
///
/// Immutable once built; all constructors validate.
#[derive(Debug, Clone, PartialEq)]
pub struct PlqPenalty {
    a_mat: DMatrix<f64>,
    a_rhs: DVector<f64>,
    m: DMatrix<f64>,
    b: DVector<f64>,
    b_mat: DMatrix<f64>,
    blocks: Vec<Block>,
    dual_start: DVector<f64>,
}

impl PlqPenalty {
    /// Builds and validates a raw penalty.
    ///
    /// `a_mat` is `dim_u × n_constraints` (zero columns means `U = R^dim_u`), `m` is
    /// `dim_u × dim_u`, `b_mat` is `dim_u × dim_y`.
    pub fn new(
        a_mat: DMatrix<f64>,
        a_rhs: DVector<f64>,
        m: DMatrix<f64>,
        b: DVector<f64>,
        b_mat: DMatrix<f64>,
    ) -> Result<Self> {
        let dim_u = m.nrows();
        let dim_y = b_mat.ncols();
        if dim_u == 0 || dim_y == 0 {
            return Err(invalid("penalty dimensions must be positive"));
        }
        if !m.is_square() {
            return Err(invalid(format!("M must be square, got {:?}", m.shape())));
        }
        if a_mat.nrows() != dim_u {
            return Err(invalid(format!("A has {} rows, expected dim_u = {dim_u}", a_mat.nrows())));
        }
        if a_rhs.len() != a_mat.ncols() {
            return Err(invalid(format!("a has length {}, A has {} constraint columns", a_rhs.len(), a_mat.ncols())));
        }
        if b.len() != dim_u || b_mat.nrows() != dim_u {
            return Err(invalid(format!(
                "b has length {} and B has {} rows, expected dim_u = {dim_u}",
                b.len(),
                b_mat.nrows()
            )));
        }
        let all_finite = [a_mat.as_slice(), a_rhs.as_slice(), m.as_slice(), b.as_slice(), b_mat.as_slice()]
            .iter()
            .all(|s| s.iter().all(|v| v.is_finite()));
        if !all_finite {
            return Err(invalid("penalty data must be finite"));
        }
        if !is_symmetric(&m, 1e-12) {
            return Err(invalid("M must be symmetric"));
        }
        let eig = m.clone().symmetric_eigenvalues();
        let lmax = eig.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if eig.iter().any(|&l| l < -TOL_PSD * lmax.max(1.0)) {
            return Err(invalid("M must be positive semidefinite"));
        }
        if dim_y > dim_u {
            return Err(invalid(format!("B ({dim_u}×{dim_y}) cannot be injective")));
        }
        let sv = b_mat.clone().singular_values();
        let (smin, smax) = sv.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
        if !(smin > TOL_RANK * smax) {
            return Err(invalid("B must be injective"));
        }

        let (start, _depth) =
            lp::deep_interior_point(&a_mat, &a_rhs)?.ok_or_else(|| invalid("U = {u : Aᵀu <= a} is empty"))?;

        let null = psd_null_space(&m, TOL_PSD);
        if recession_ascent(&null, &a_mat, &b)? > TOL_LP * b.amax().max(1.0) {
            return Err(invalid("shift b lies outside dom θ_{U,M} (θ(b) = +inf)"));
        }
        let degenerate = !finiteness_witnesses(&null, &a_mat)?.is_empty();

        let blocks =
            vec![Block { kind: BlockKind::Raw, u: 0..dim_u, y: 0..dim_y, constraints: 0..a_mat.ncols(), degenerate }];
        Ok(Self { a_mat, a_rhs, m, b, b_mat, blocks, dual_start: start })
    }

    /// Exact `(A, a, M, b, B)` representation of a scalar atom.
    pub fn atom(kind: AtomKind) -> Result<Self> {
        kind.validate()?;
        let one = |v: f64| DMatrix::from_element(1, 1, v);
        let (a_mat, a_rhs, m, b, b_mat) = match kind {
            AtomKind::L2 => (DMatrix::zeros(1, 0), DVector::zeros(0), one(1.0), DVector::zeros(1), one(1.0)),
            AtomKind::L1 { scale } => (
                DMatrix::from_row_slice(1, 2, &[1.0, -1.0]),
                DVector::from_vec(vec![1.0, 1.0]),
                one(0.0),
                DVector::zeros(1),
                one(scale),
            ),
            AtomKind::Huber { kappa } => (
                DMatrix::from_row_slice(1, 2, &[1.0, -1.0]),
                DVector::from_vec(vec![kappa, kappa]),
                one(1.0),
                DVector::zeros(1),
                one(1.0),
            ),
            AtomKind::Vapnik { epsilon } => (
                // u1 <= 1, u2 <= 1, -u1 <= 0, -u2 <= 0
                DMatrix::from_row_slice(2, 4, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]),
                DVector::from_vec(vec![1.0, 1.0, 0.0, 0.0]),
                DMatrix::zeros(2, 2),
                DVector::from_vec(vec![-epsilon, -epsilon]),
                DMatrix::from_column_slice(2, 1, &[1.0, -1.0]),
            ),
        };
        let blocks = vec![Block {
            kind: BlockKind::Atom(kind),
            u: 0..m.nrows(),
            y: 0..1,
            constraints: 0..a_mat.ncols(),
            degenerate: false,
        }];
        Ok(Self { a_mat, a_rhs, m, b, b_mat, blocks, dual_start: kind.dual_start() })
    }

    /// `dim` independent copies of an atom, one per coordinate of `y`.
    pub fn replicated(kind: AtomKind, dim: usize) -> Result<Self> {
        let atom = Self::atom(kind)?;
        block_compose(&vec![atom; dim])
    }

    pub fn dim_u(&self) -> usize {
        self.m.nrows()
    }

    pub fn dim_y(&self) -> usize {
        self.b_mat.ncols()
    }

    pub fn n_constraints(&self) -> usize {
        self.a_mat.ncols()
    }

    /// `A`, `dim_u × n_constraints`.
    pub fn constraint_matrix(&self) -> &DMatrix<f64> {
        &self.a_mat
    }

    /// `a`
    pub fn constraint_rhs(&self) -> &DVector<f64> {
        &self.a_rhs
    }

    /// `M`
    pub fn quad(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// `b`
    pub fn shift(&self) -> &DVector<f64> {
        &self.b
    }

    /// `B`
    pub fn transform(&self) -> &DMatrix<f64> {
        &self.b_mat
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// True when every block is an atom (so [`eval_closed_form`] applies).
    pub fn is_atomic(&self) -> bool {
        self.blocks.iter().all(|b| matches!(b.kind, BlockKind::Atom(_)))
    }

    /// A point of `U`, strictly interior whenever `U` has interior.
    pub fn dual_start(&self) -> &DVector<f64> {
        &self.dual_start
    }

    /// `ρ(y)`: closed form on atom blocks, generic dual supremum on raw blocks.
    pub fn eval(&self, y: &DVector<f64>) -> Result<f64> {
        self.check_arg(y)?;
        let mut total = 0.0;
        for blk in &self.blocks {
            let ys = y.rows(blk.y.start, blk.y.len()).into_owned();
            total += match blk.kind {
                BlockKind::Atom(kind) => kind.eval(ys[0]),
                BlockKind::Raw => self.block_dual_sup(blk, &ys)?,
            };
        }
        Ok(total)
    }

    pub(crate) fn block_parts(&self, blk: &Block) -> BlockParts {
        let (u, c, y) = (&blk.u, &blk.constraints, &blk.y);
        BlockParts {
            a_mat: self.a_mat.view((u.start, c.start), (u.len(), c.len())).into_owned(),
            a_rhs: self.a_rhs.rows(c.start, c.len()).into_owned(),
            m: self.m.view((u.start, u.start), (u.len(), u.len())).into_owned(),
            b: self.b.rows(u.start, u.len()).into_owned(),
            b_mat: self.b_mat.view((u.start, y.start), (u.len(), y.len())).into_owned(),
        }
    }

    fn block_dual_sup(&self, blk: &Block, ys: &DVector<f64>) -> Result<f64> {
        let parts = self.block_parts(blk);
        let w = &parts.b + &parts.b_mat * ys;
        let start = self.dual_start.rows(blk.u.start, blk.u.len()).into_owned();
        dual_sup::sup_quadratic(&parts.m, &parts.a_mat, &parts.a_rhs, &w, &start, blk.degenerate)
    }

    fn check_arg(&self, y: &DVector<f64>) -> Result<()> {
        if y.len() != self.dim_y() {
            return Err(invalid(format!("argument has length {}, penalty expects {}", y.len(), self.dim_y())));
        }
        Ok(())
    }
}

/// Returns the exact representation of an atom. Non-positive parameters are rejected.
pub fn make_atom(kind: AtomKind) -> Result<PlqPenalty> {
    PlqPenalty::atom(kind)
}

/// Block-diagonal composition of independent penalties: block-diagonal `A`, `M`, `B`;
/// concatenated `a`, `b`. The result evaluates to the sum of the parts.
pub fn block_compose(parts: &[PlqPenalty]) -> Result<PlqPenalty> {
    if parts.is_empty() {
        return Err(invalid("block_compose needs at least one penalty"));
    }
    if parts.len() == 1 {
        return Ok(parts[0].clone());
    }
    let a_mat = block_diag(&parts.iter().map(|p| &p.a_mat).collect::<Vec<_>>());
    let m = block_diag(&parts.iter().map(|p| &p.m).collect::<Vec<_>>());
    let b_mat = block_diag(&parts.iter().map(|p| &p.b_mat).collect::<Vec<_>>());
    let a_rhs = concat(parts.iter().map(|p| &p.a_rhs));
    let b = concat(parts.iter().map(|p| &p.b));
    let dual_start = concat(parts.iter().map(|p| &p.dual_start));

    let mut blocks = Vec::new();
    let (mut du, mut dy, mut dc) = (0, 0, 0);
    for p in parts {
        for blk in &p.blocks {
            blocks.push(Block {
                kind: blk.kind,
                u: blk.u.start + du..blk.u.end + du,
                y: blk.y.start + dy..blk.y.end + dy,
                constraints: blk.constraints.start + dc..blk.constraints.end + dc,
                degenerate: blk.degenerate,
            });
        }
        du += p.dim_u();
        dy += p.dim_y();
        dc += p.n_constraints();
    }
    Ok(PlqPenalty { a_mat, a_rhs, m, b, b_mat, blocks, dual_start })
}

fn concat<'a>(parts: impl Iterator<Item = &'a DVector<f64>>) -> DVector<f64> {
    let v: Vec<f64> = parts.flat_map(|p| p.iter().copied()).collect();
    DVector::from_vec(v)
}

/// Closed-form value, summed over atom blocks. Penalties with a raw block are
/// [`Error::Unsupported`].
pub fn eval_closed_form(p: &PlqPenalty, y: &DVector<f64>) -> Result<f64> {
    p.check_arg(y)?;
    p.blocks
        .iter()
        .map(|blk| match blk.kind {
            BlockKind::Atom(kind) => Ok(kind.eval(y[blk.y.start])),
            BlockKind::Raw => Err(Error::Unsupported("closed form requires an atom-built penalty".into())),
        })
        .sum()
}

/// `sup_{u in U} ⟨u, b + By⟩ - ½ uᵀMu` by a dense primal-dual barrier method, block by
/// block. Returns [`Error::UnboundedPenalty`] when the supremum is `+inf`.
pub fn eval_dual_sup(p: &PlqPenalty, y: &DVector<f64>) -> Result<f64> {
    p.check_arg(y)?;
    let mut total = 0.0;
    for blk in &p.blocks {
        let ys = y.rows(blk.y.start, blk.y.len()).into_owned();
        total += p.block_dual_sup(blk, &ys)?;
    }
    Ok(total)
}

/// `sup ⟨w, d⟩` over `d ∈ Null(M) ∩ {Aᵀd <= 0}`, `|d|∞ <= 1` in null-space coordinates.
/// Positive values mean `θ(w) = +inf`.
pub(crate) fn recession_ascent(null: &DMatrix<f64>, a_mat: &DMatrix<f64>, w: &DVector<f64>) -> Result<f64> {
    if null.ncols() == 0 {
        return Ok(0.0);
    }
    let c = null.tr_mul(w);
    let rows = null.tr_mul(a_mat);
    Ok(lp::max_over_boxed_cone(&c, &rows)?.0)
}

/// Nonzero directions of the cone `{c : rowsᵀ c <= 0}` found by the coordinate LPs
/// `max ±c_j` over the unit box. Empty iff the cone is `{0}`.
pub(crate) fn cone_witnesses(rows: &DMatrix<f64>, dim: usize) -> Result<Vec<DVector<f64>>> {
    let mut found = Vec::new();
    for j in 0..dim {
        for sign in [1.0, -1.0] {
            let mut c = DVector::zeros(dim);
            c[j] = sign;
            let (val, d) = lp::max_over_boxed_cone(&c, rows)?;
            if val > TOL_LP {
                found.push(d);
                return Ok(found);
            }
        }
    }
    Ok(found)
}

/// Directions (in `u` coordinates) of `Null(M) ∩ U^∞`; empty iff it is `{0}`.
pub(crate) fn finiteness_witnesses(null: &DMatrix<f64>, a_mat: &DMatrix<f64>) -> Result<Vec<DVector<f64>>> {
    if null.ncols() == 0 {
        return Ok(Vec::new());
    }
    let rows = null.tr_mul(a_mat);
    Ok(cone_witnesses(&rows, null.ncols())?.into_iter().map(|c| null * c).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn y1(v: f64) -> DVector<f64> {
        DVector::from_element(1, v)
    }

    #[test]
    fn huber_representation() {
        let p = make_atom(AtomKind::Huber { kappa: 1.0 }).unwrap();
        assert_eq!(p.constraint_matrix(), &DMatrix::from_row_slice(1, 2, &[1.0, -1.0]));
        assert_eq!(p.constraint_rhs().as_slice(), &[1.0, 1.0]);
        assert_eq!(p.quad()[(0, 0)], 1.0);
        assert_eq!(p.shift()[0], 0.0);
        assert_eq!(p.transform()[(0, 0)], 1.0);
    }

    #[test]
    fn vapnik_representation() {
        let p = make_atom(AtomKind::Vapnik { epsilon: 0.5 }).unwrap();
        assert_eq!(p.shift().as_slice(), &[-0.5, -0.5]);
        assert_eq!(p.transform().as_slice(), &[1.0, -1.0]);
        assert_eq!(p.dim_u(), 2);
        assert_eq!(p.dim_y(), 1);
    }

    #[test]
    fn l2_representation() {
        let p = make_atom(AtomKind::L2).unwrap();
        assert_eq!(p.n_constraints(), 0);
        assert_eq!(p.quad()[(0, 0)], 1.0);
    }

    #[test]
    fn l1_scale_multiplies_b() {
        let p = make_atom(AtomKind::L1 { scale: 3.0 }).unwrap();
        assert_eq!(p.transform()[(0, 0)], 3.0);
        assert_eq!(eval_closed_form(&p, &y1(-2.0)).unwrap(), 6.0);
    }

    #[test]
    fn non_positive_parameters_rejected() {
        for kind in
            [AtomKind::Huber { kappa: 0.0 }, AtomKind::Vapnik { epsilon: -1.0 }, AtomKind::L1 { scale: f64::NAN }]
        {
            assert!(matches!(make_atom(kind), Err(Error::InvalidArgument(_))), "{kind:?}");
        }
    }

    #[test]
    fn closed_form_examples() {
        let huber = make_atom(AtomKind::Huber { kappa: 1.0 }).unwrap();
        let vapnik = make_atom(AtomKind::Vapnik { epsilon: 0.5 }).unwrap();
        let l1 = make_atom(AtomKind::L1 { scale: 1.0 }).unwrap();
        assert_eq!(eval_closed_form(&huber, &y1(2.0)).unwrap(), 1.5);
        assert_eq!(eval_closed_form(&huber, &y1(0.5)).unwrap(), 0.125);
        assert_eq!(eval_closed_form(&vapnik, &y1(0.3)).unwrap(), 0.0);
        assert_eq!(eval_closed_form(&vapnik, &y1(2.0)).unwrap(), 1.5);
        assert_eq!(eval_closed_form(&l1, &y1(-3.0)).unwrap(), 3.0);
    }

    #[test]
    fn dual_sup_examples() {
        let l2 = make_atom(AtomKind::L2).unwrap();
        let huber = make_atom(AtomKind::Huber { kappa: 1.0 }).unwrap();
        assert!((eval_dual_sup(&l2, &y1(2.0)).unwrap() - 2.0).abs() < 1e-10);
        assert!((eval_dual_sup(&huber, &y1(-3.0)).unwrap() - 2.5).abs() < 1e-8);
    }

    #[test]
    fn singleton_u_is_zero_everywhere() {
        // u <= 0 and -u <= 0.
        let p = PlqPenalty::new(
            DMatrix::from_row_slice(1, 2, &[1.0, -1.0]),
            DVector::zeros(2),
            DMatrix::zeros(1, 1),
            DVector::zeros(1),
            DMatrix::identity(1, 1),
        )
        .unwrap();
        for y in [-5.0, 0.0, 0.7, 40.0] {
            assert!(eval_dual_sup(&p, &y1(y)).unwrap().abs() < 1e-8, "y = {y}");
        }
    }

    #[test]
    fn support_function_of_line_is_unbounded_off_zero() {
        let p = PlqPenalty::new(
            DMatrix::zeros(1, 0),
            DVector::zeros(0),
            DMatrix::zeros(1, 1),
            DVector::zeros(1),
            DMatrix::identity(1, 1),
        )
        .unwrap();
        assert!(eval_dual_sup(&p, &y1(0.0)).unwrap().abs() < 1e-12);
        assert_eq!(eval_dual_sup(&p, &y1(1.0)), Err(Error::UnboundedPenalty));
    }

    #[test]
    fn compose_examples() {
        let l1 = make_atom(AtomKind::L1 { scale: 1.0 }).unwrap();
        let pair = block_compose(&[l1.clone(), l1]).unwrap();
        assert_eq!(pair.eval(&DVector::from_vec(vec![1.0, -2.0])).unwrap(), 3.0);

        let mixed =
            block_compose(&[make_atom(AtomKind::Huber { kappa: 1.0 }).unwrap(), make_atom(AtomKind::L2).unwrap()])
                .unwrap();
        assert_eq!(mixed.eval(&DVector::from_vec(vec![2.0, 2.0])).unwrap(), 3.5);
        assert_eq!(mixed.dim_u(), 2);
        assert_eq!(mixed.n_constraints(), 2);
        assert!((eval_dual_sup(&mixed, &DVector::from_vec(vec![2.0, 2.0])).unwrap() - 3.5).abs() < 1e-8);

        assert!(matches!(block_compose(&[]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn raw_penalty_has_no_closed_form() {
        let hinge = PlqPenalty::new(
            DMatrix::from_row_slice(1, 2, &[1.0, -1.0]),
            DVector::from_vec(vec![1.0, 0.0]),
            DMatrix::zeros(1, 1),
            DVector::zeros(1),
            DMatrix::identity(1, 1),
        )
        .unwrap();
        assert!(matches!(eval_closed_form(&hinge, &y1(1.0)), Err(Error::Unsupported(_))));
        assert!((hinge.eval(&y1(2.5)).unwrap() - 2.5).abs() < 1e-8);
        assert!(hinge.eval(&y1(-2.5)).unwrap().abs() < 1e-8);
    }

    #[test]
    fn raw_penalty_validation() {
        let one = DMatrix::identity(1, 1);
        // Empty U: u <= -1, -u <= -1.
        let empty = PlqPenalty::new(
            DMatrix::from_row_slice(1, 2, &[1.0, -1.0]),
            DVector::from_vec(vec![-1.0, -1.0]),
            one.clone(),
            DVector::zeros(1),
            one.clone(),
        );
        assert!(matches!(empty, Err(Error::InvalidArgument(_))));
        // Indefinite M.
        let indef =
            PlqPenalty::new(DMatrix::zeros(1, 0), DVector::zeros(0), -one.clone(), DVector::zeros(1), one.clone());
        assert!(matches!(indef, Err(Error::InvalidArgument(_))));
        // Non-injective B.
        let flat = PlqPenalty::new(
            DMatrix::zeros(2, 0),
            DVector::zeros(0),
            DMatrix::identity(2, 2),
            DVector::zeros(2),
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]),
        );
        assert!(matches!(flat, Err(Error::InvalidArgument(_))));
        // Shift outside dom θ: U = R, M = 0, b = 1.
        let shifted = PlqPenalty::new(DMatrix::zeros(1, 0), DVector::zeros(0), DMatrix::zeros(1, 1), y1(1.0), one);
        assert!(matches!(shifted, Err(Error::InvalidArgument(_))));
    }
}
