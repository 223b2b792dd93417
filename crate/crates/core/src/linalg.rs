//! Dense complex linear algebra on top of nalgebra: SVD null spaces, ranks,
//! conditioning and pivoted solves.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// A singular value counts as zero below this fraction of the largest one.
pub const NULL_REL_TOL: f64 = 1e-10;

/// Right singular structure of a matrix: every right singular vector (as a
/// column) paired with its singular value, in ascending singular-value order.
/// Rows are zero-padded first so a wide matrix still yields a full basis; the
/// padding contributes exact zeros to the spectrum.
pub struct RightSpectrum {
    pub vectors: CMat,
    pub values: Vec<f64>,
}

impl RightSpectrum {
    pub fn of(a: &CMat) -> Self {
        let (r, c) = a.shape();
        if c == 0 {
            return RightSpectrum {
                vectors: CMat::zeros(0, 0),
                values: Vec::new(),
            };
        }
        let padded = if r < c {
            let mut p = CMat::zeros(c, c);
            p.view_mut((0, 0), (r, c)).copy_from(a);
            p
        } else {
            a.clone()
        };
        let svd = padded.svd_unordered(false, true);
        let v_t = svd.v_t.expect("requested V");
        let mut order: Vec<usize> = (0..c).collect();
        order.sort_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]));
        let mut vectors = CMat::zeros(c, c);
        let mut values = Vec::with_capacity(c);
        for (col, &k) in order.iter().enumerate() {
            for row in 0..c {
                vectors[(row, col)] = v_t[(k, row)].conj();
            }
            values.push(svd.singular_values[k]);
        }
        RightSpectrum { vectors, values }
    }

    pub fn max_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Number of singular values below `rel_tol` times the largest.
    pub fn null_dim(&self, rel_tol: f64) -> usize {
        let cutoff = rel_tol * self.max_value();
        self.values.iter().take_while(|&&s| s <= cutoff).count()
    }

    /// First `count` basis vectors (smallest singular values first).
    pub fn smallest(&self, count: usize) -> CMat {
        self.vectors.columns(0, count).into_owned()
    }
}

/// Orthonormal basis of the right null space as columns, ascending
/// singular-value order.
pub fn null_space(a: &CMat, rel_tol: f64) -> CMat {
    let s = RightSpectrum::of(a);
    let d = s.null_dim(rel_tol);
    s.smallest(d)
}

/// Orthonormal basis of the left null space of `a` as rows `p` with
/// `p * a = 0`, ascending singular-value order.
pub fn left_null_space(a: &CMat, rel_tol: f64) -> CMat {
    null_space(&a.adjoint(), rel_tol).adjoint()
}

pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.clone().svd_unordered(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Numerical rank via SVD with a relative cutoff.
pub fn rank(a: &CMat, rel_tol: f64) -> usize {
    let s = singular_values(a);
    let Some(&max) = s.first() else { return 0 };
    s.iter().filter(|&&v| v > rel_tol * max).count()
}

/// 2-norm condition number; infinite for singular or empty input.
pub fn cond(a: &CMat) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Smallest singular value over largest (0 for rank-deficient input).
pub fn min_sv_ratio(a: &CMat) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
        _ => 0.0,
    }
}

pub fn spectral_norm(a: &CMat) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

pub fn max_abs_vec(v: &CVec) -> f64 {
    v.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

/// Solve `a x = b` for square `a` with partially pivoted LU.
pub fn solve(a: &CMat, b: &CMat) -> Option<CMat> {
    if !a.is_square() || a.nrows() != b.nrows() {
        return None;
    }
    a.clone().lu().solve(b)
}

pub fn solve_vec(a: &CMat, b: &CVec) -> Option<CVec> {
    if !a.is_square() || a.nrows() != b.len() {
        return None;
    }
    a.clone().lu().solve(b)
}

/// `t`-fold block-diagonal repetition diag(x, x, ..., x).
pub fn block_diag(x: &CMat, t: usize) -> CMat {
    let (r, c) = x.shape();
    let mut out = CMat::zeros(r * t, c * t);
    for b in 0..t {
        out.view_mut((b * r, b * c), (r, c)).copy_from(x);
    }
    out
}

/// Horizontal concatenation.
pub fn hstack(blocks: &[&CMat]) -> CMat {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hstack row mismatch");
        out.view_mut((0, at), (rows, b.ncols())).copy_from(*b);
        at += b.ncols();
    }
    out
}

/// Vertical concatenation.
pub fn vstack(blocks: &[&CMat]) -> CMat {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols, "vstack column mismatch");
        out.view_mut((at, 0), (b.nrows(), cols)).copy_from(*b);
        at += b.nrows();
    }
    out
}

/// Plain (non-conjugating) transpose; the downlink duality uses this.
pub fn transpose(a: &CMat) -> CMat {
    a.transpose()
}
