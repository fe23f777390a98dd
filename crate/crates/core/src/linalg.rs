//! Small complex linear-algebra helpers on top of `nalgebra`.
//!
//! Everything here works on [`CMat`] and returns singular values sorted in
//! descending order, which the rest of the crate relies on.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::CMat;

/// Relative singular-value cutoff used for rank decisions and pseudo-inverses.
pub const RANK_CUTOFF: f64 = 1e-12;

/// Thin SVD `m = u * diag(s) * v^H` with `s` in descending order.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `rows x r` with orthonormal columns.
    pub u: CMat,
    pub s: Vec<f64>,
    /// `cols x r` with orthonormal columns.
    pub v: CMat,
}

impl Svd {
    pub fn reconstruct(&self) -> CMat {
        let mut us = self.u.clone();
        for (j, &s) in self.s.iter().enumerate() {
            us.column_mut(j).scale_mut(s);
        }
        us * self.v.adjoint()
    }

    /// Number of singular values above `rel * s_max`.
    pub fn rank(&self, rel: f64) -> usize {
        let smax = self.s.first().copied().unwrap_or(0.0);
        self.s.iter().filter(|&&s| s > rel * smax && s > 0.0).count()
    }
}

pub fn svd(m: &CMat) -> Svd {
    let r = m.nrows().min(m.ncols());
    if r == 0 {
        return Svd {
            u: CMat::zeros(m.nrows(), 0),
            s: Vec::new(),
            v: CMat::zeros(m.ncols(), 0),
        };
    }
    let dec = m.clone().svd(true, true);
    let u = dec.u.expect("u requested");
    let v = dec.v_t.expect("v_t requested").adjoint();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| dec.singular_values[b].total_cmp(&dec.singular_values[a]));
    let s = order.iter().map(|&i| dec.singular_values[i]).collect();
    Svd {
        u: select_columns(&u, &order),
        s,
        v: select_columns(&v, &order),
    }
}

/// Full set of right singular vectors (`cols x cols`) of a matrix with at
/// most as many rows as columns. The matrix is zero-padded to square so the
/// trailing columns span its null space. Singular values are returned for
/// every column (the padded ones are zero), descending.
pub fn full_right_svd(m: &CMat) -> (Vec<f64>, CMat) {
    let cols = m.ncols();
    assert!(m.nrows() <= cols, "full_right_svd expects a wide or square matrix");
    let mut square = CMat::zeros(cols, cols);
    square.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let dec = svd(&square);
    (dec.s, dec.v)
}

pub fn select_columns(m: &CMat, cols: &[usize]) -> CMat {
    CMat::from_fn(m.nrows(), cols.len(), |i, j| m[(i, cols[j])])
}

/// Moore-Penrose pseudo-inverse with singular values below `rel * s_max`
/// treated as zero.
pub fn pinv(m: &CMat, rel: f64) -> CMat {
    let dec = svd(m);
    let smax = dec.s.first().copied().unwrap_or(0.0);
    let mut vs = dec.v.clone();
    for (j, &s) in dec.s.iter().enumerate() {
        let inv = if s > rel * smax && s > 0.0 { 1.0 / s } else { 0.0 };
        vs.column_mut(j).scale_mut(inv);
    }
    vs * dec.u.adjoint()
}

/// `a^{-1/2}` for a Hermitian positive definite matrix.
pub fn inv_sqrt_hermitian(a: &CMat) -> CMat {
    let herm = (a + a.adjoint()).scale(0.5);
    let eig = herm.symmetric_eigen();
    let n = a.nrows();
    let mut vd = eig.eigenvectors.clone();
    for j in 0..n {
        vd.column_mut(j).scale_mut(1.0 / eig.eigenvalues[j].sqrt());
    }
    &vd * eig.eigenvectors.adjoint()
}

/// Rotate each column so its largest-magnitude entry is real and positive.
pub fn fix_column_phases(m: &mut CMat) {
    for mut col in m.column_iter_mut() {
        let mut best = Complex64::new(0.0, 0.0);
        for z in col.iter() {
            if z.norm() > best.norm() {
                best = *z;
            }
        }
        if best.norm() > 0.0 {
            let phase = best.conj() / best.norm();
            col.iter_mut().for_each(|z| *z *= phase);
        }
    }
}

/// Vertical concatenation; all blocks must share the column count.
pub fn stack_rows(blocks: &[&CMat], cols: usize) -> CMat {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols);
        out.view_mut((r, 0), (b.nrows(), cols)).copy_from(*b);
        r += b.nrows();
    }
    out
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace_gram(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn real_diag(values: &[f64]) -> CMat {
    CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        values.len(),
        values.iter().map(|&v| Complex64::new(v, 0.0)),
    ))
}

/// Convert a real matrix into a complex one.
pub fn complexify(m: &DMatrix<f64>) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

#[cfg(test)]
pub(crate) mod testutil {
    use rand::Rng;
    use rand_distr::StandardNormal;

    use super::*;

    pub fn random_cmat<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMat {
        CMat::from_fn(rows, cols, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        })
    }
}
