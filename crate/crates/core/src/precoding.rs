//! Interference elimination on one subcarrier.
//!
//! Users sharing a subcarrier are ordered by group. User `k` transmits inside
//! the null space of the users placed before it, so it never disturbs them;
//! the interference that earlier users cause at user `k` is removed by the
//! block feedback loop of the Tomlinson-Harashima precoder.

use num_complex::Complex64;

use crate::linalg::{self, Svd, RANK_CUTOFF};
use crate::{CMat, Error, Result};

/// Singular values of a projected channel below this fraction of the raw
/// channel norm are considered zero.
pub const STREAM_CUTOFF: f64 = 1e-10;

/// Orthonormal basis of the null space of the channels stacked before a user.
#[derive(Debug, Clone)]
pub struct NullSpaceBasis {
    /// `N_T x m` with orthonormal columns.
    pub basis: CMat,
    /// The stack had lower rank than its row count, so the basis is wider
    /// than `N_T - rows`.
    pub rank_deficient: bool,
}

/// Right singular vectors of `stacked` belonging to its zero singular values.
///
/// An empty stack (first user on the subcarrier) yields the identity. Each
/// column is rotated so its largest-magnitude entry is real and positive.
pub fn null_space_basis(stacked: &CMat, tx_antennas: usize) -> NullSpaceBasis {
    let rows = stacked.nrows();
    if rows == 0 {
        return NullSpaceBasis {
            basis: CMat::identity(tx_antennas, tx_antennas),
            rank_deficient: false,
        };
    }
    assert!(
        rows < tx_antennas,
        "stack of {rows} rows leaves no null space in {tx_antennas} dims"
    );
    assert_eq!(stacked.ncols(), tx_antennas);
    let (s, v) = linalg::full_right_svd(stacked);
    let smax = s[0];
    let rank = s.iter().filter(|&&x| x > RANK_CUTOFF * smax && x > 0.0).count();
    let mut basis = v.columns(rank, tx_antennas - rank).into_owned();
    linalg::fix_column_phases(&mut basis);
    NullSpaceBasis {
        basis,
        rank_deficient: rank < rows,
    }
}

/// Channel seen by a user after the null-space projection, with its SVD.
#[derive(Debug, Clone)]
pub struct EffectiveChannel {
    /// `H V0`, `N_R x m`.
    pub projected: CMat,
    pub svd: Svd,
    /// Frobenius norm of the unprojected channel; scale for rank decisions.
    pub reference: f64,
}

impl EffectiveChannel {
    /// Number of singular values that survive [`STREAM_CUTOFF`].
    pub fn rank(&self) -> usize {
        self.svd
            .s
            .iter()
            .filter(|&&s| s > STREAM_CUTOFF * self.reference && s > 0.0)
            .count()
    }

    /// The `streams` largest eigenvalues of `H'^H H'`, or `None` when the
    /// projected channel cannot carry that many streams.
    pub fn stream_gains(&self, streams: usize) -> Option<Vec<f64>> {
        (self.rank() >= streams).then(|| self.svd.s[..streams].iter().map(|s| s * s).collect())
    }

    /// Right singular vectors of the `streams` strongest modes (`m x streams`).
    pub fn right_modes(&self, streams: usize) -> CMat {
        self.svd.v.columns(0, streams).into_owned()
    }
}

pub fn effective_channel(h: &CMat, v0: &NullSpaceBasis) -> EffectiveChannel {
    let projected = h * &v0.basis;
    let svd = linalg::svd(&projected);
    EffectiveChannel {
        projected,
        svd,
        reference: linalg::frobenius(h),
    }
}

/// Strictly block lower triangular feedback `B_n` with `L x L` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackMatrix {
    streams: usize,
    /// `rows[i][l]` is block `(i, l)` for `l < i`.
    rows: Vec<Vec<CMat>>,
}

impl FeedbackMatrix {
    pub fn zero(users: usize, streams: usize) -> Self {
        Self {
            streams,
            rows: (0..users).map(|i| vec![CMat::zeros(streams, streams); i]).collect(),
        }
    }

    pub fn users(&self) -> usize {
        self.rows.len()
    }

    pub fn streams(&self) -> usize {
        self.streams
    }

    /// Block `(i, l)` of `B_n`, `l < i`.
    pub fn block(&self, i: usize, l: usize) -> &CMat {
        &self.rows[i][l]
    }

    /// Dense `B_n`.
    pub fn dense(&self) -> CMat {
        let l = self.streams;
        let n = self.users() * l;
        let mut b = CMat::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for (j, blk) in row.iter().enumerate() {
                b.view_mut((i * l, j * l), (l, l)).copy_from(blk);
            }
        }
        b
    }

    /// Dense `C_n = B_n + I`.
    pub fn dense_c(&self) -> CMat {
        let n = self.users() * self.streams;
        self.dense() + CMat::identity(n, n)
    }
}

/// Split the block lower triangular `T_n` into `D_n L_n` and return
/// `B_n = L_n - I`.
///
/// `t[k][i]` holds block `(k, i)` for `i <= k`; diagonal blocks are
/// `N_R x L`. Off-diagonal blocks of `L_n` are `T_kk^H (T_kk T_kk^H)^+ T_ki`,
/// with the pseudo-inverse covering `L < N_R`. `subcarrier` only labels errors.
pub fn feedback_matrix(subcarrier: usize, t: &[Vec<CMat>]) -> Result<FeedbackMatrix> {
    let users = t.len();
    let streams = t.first().map_or(0, |r| r[0].ncols());
    let mut rows = Vec::with_capacity(users);
    for (k, row) in t.iter().enumerate() {
        assert_eq!(row.len(), k + 1, "row {k} of T must hold {} blocks", k + 1);
        let diag = &row[k];
        if linalg::svd(diag).rank(RANK_CUTOFF) < streams {
            return Err(Error::RankDeficientBlock {
                subcarrier,
                position: k,
            });
        }
        let gram = diag * diag.adjoint();
        let left = diag.adjoint() * linalg::pinv(&gram, RANK_CUTOFF);
        rows.push(row[..k].iter().map(|blk| &left * blk).collect());
    }
    Ok(FeedbackMatrix { streams, rows })
}

/// Dense lower block triangular matrix from `t[k][i]` blocks.
pub fn dense_lower(t: &[Vec<CMat>]) -> CMat {
    let (r, c) = t[0][0].shape();
    let q = t.len();
    let mut out = CMat::zeros(q * r, q * c);
    for (k, row) in t.iter().enumerate() {
        for (i, blk) in row.iter().enumerate() {
            out.view_mut((k * r, i * c), (r, c)).copy_from(blk);
        }
    }
    out
}

/// Block diagonal `D_n` built from the diagonal of `t`.
pub fn dense_block_diag(t: &[Vec<CMat>]) -> CMat {
    let (r, c) = t[0][0].shape();
    let q = t.len();
    let mut out = CMat::zeros(q * r, q * c);
    for (k, row) in t.iter().enumerate() {
        out.view_mut((k * r, k * c), (r, c)).copy_from(&row[k]);
    }
    out
}

fn fold(x: f64, half_width: f64) -> f64 {
    -2.0 * half_width * ((x - half_width) / (2.0 * half_width)).ceil()
}

/// Fold `x` into the square `(-sqrt M, sqrt M]` on both axes.
///
/// Returns `(y, offset)` with `y = x + offset` and `offset` a multiple of
/// `2 sqrt M` in each component.
pub fn modulo(x: Complex64, order: u32) -> (Complex64, Complex64) {
    let a = (order as f64).sqrt();
    let offset = Complex64::new(fold(x.re, a), fold(x.im, a));
    (x + offset, offset)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThpOutput {
    /// `b_n`, bounded by the modulo region.
    pub precoded: Vec<Complex64>,
    /// `v_n = d_n + offsets`.
    pub modified: Vec<Complex64>,
    pub offsets: Vec<Complex64>,
}

/// `b_i = MOD(d_i - sum_{l<i} B_il b_l)` for `i = 1..Q`, in order.
pub fn thp_precode(data: &[Complex64], feedback: &FeedbackMatrix, order: u32) -> ThpOutput {
    let l = feedback.streams();
    assert_eq!(data.len(), feedback.users() * l);
    let mut precoded = vec![Complex64::new(0.0, 0.0); data.len()];
    let mut offsets = precoded.clone();
    for i in 0..feedback.users() {
        for s in 0..l {
            let mut acc = data[i * l + s];
            for j in 0..i {
                let blk = feedback.block(i, j);
                for c in 0..l {
                    acc -= blk[(s, c)] * precoded[j * l + c];
                }
            }
            let (y, off) = modulo(acc, order);
            precoded[i * l + s] = y;
            offsets[i * l + s] = off;
        }
    }
    let modified = data.iter().zip(&offsets).map(|(d, o)| d + o).collect();
    ThpOutput {
        precoded,
        modified,
        offsets,
    }
}

#[cfg(test)]
mod tests {
    use nalgebra::DVector;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::linalg::testutil::random_cmat;
    use crate::linalg::{frobenius, stack_rows};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn real(m: &[f64], rows: usize, cols: usize) -> CMat {
        CMat::from_row_iterator(rows, cols, m.iter().map(|&x| c(x, 0.0)))
    }

    #[test]
    fn axis_aligned_null_space() {
        let v0 = null_space_basis(&real(&[1.0, 0.0], 1, 2), 2);
        assert_eq!(v0.basis.shape(), (2, 1));
        assert!(v0.basis[(0, 0)].norm() < 1e-15);
        assert!((v0.basis[(1, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!(!v0.rank_deficient);
    }

    #[test]
    fn empty_stack_gives_identity() {
        let v0 = null_space_basis(&CMat::zeros(0, 4), 4);
        assert_eq!(v0.basis, CMat::identity(4, 4));
    }

    #[test]
    fn random_stack_null_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let stack = random_cmat(&mut rng, 4, 8);
        let v0 = null_space_basis(&stack, 8);
        assert_eq!(v0.basis.shape(), (8, 4));
        assert!(frobenius(&(&stack * &v0.basis)) < 1e-10);
        let gram = v0.basis.adjoint() * &v0.basis;
        assert!(frobenius(&(gram - CMat::identity(4, 4))) < 1e-10);
        for col in v0.basis.column_iter() {
            let big = col.iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
            assert!(big.im.abs() < 1e-12 && big.re > 0.0);
        }
    }

    #[test]
    fn rank_deficient_stack_widens_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let row = random_cmat(&mut rng, 1, 4);
        let stack = stack_rows(&[&row, &row], 4);
        let v0 = null_space_basis(&stack, 4);
        assert!(v0.rank_deficient);
        assert_eq!(v0.basis.ncols(), 3);
        assert!(frobenius(&(&stack * &v0.basis)) < 1e-10);
    }

    #[test]
    fn identity_projection_keeps_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_cmat(&mut rng, 2, 4);
        let eff = effective_channel(&h, &null_space_basis(&CMat::zeros(0, 4), 4));
        assert_eq!(eff.projected, h);
    }

    #[test]
    fn scalar_effective_channel() {
        let h = real(&[1.0, 1.0], 1, 2);
        let v0 = null_space_basis(&real(&[1.0, 0.0], 1, 2), 2);
        let eff = effective_channel(&h, &v0);
        assert!((eff.projected[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(eff.stream_gains(1).unwrap().len(), 1);
        assert!((eff.stream_gains(1).unwrap()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn effective_channel_svd_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let earlier = random_cmat(&mut rng, 2, 4);
            let h = random_cmat(&mut rng, 2, 4);
            let eff = effective_channel(&h, &null_space_basis(&earlier, 4));
            let err = frobenius(&(eff.svd.reconstruct() - &eff.projected)) / frobenius(&eff.projected);
            assert!(err < 1e-9);
            assert!(eff.svd.s.windows(2).all(|w| w[0] >= w[1]));
            let uu = eff.svd.u.adjoint() * &eff.svd.u;
            assert!(frobenius(&(uu - CMat::identity(2, 2))) < 1e-10);
        }
    }

    #[test]
    fn projected_rank_loss_detected() {
        // second user's channel lies in the span of the first: nothing left
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let first = random_cmat(&mut rng, 2, 4);
        let eff = effective_channel(&first, &null_space_basis(&first, 4));
        assert_eq!(eff.rank(), 0);
        assert!(eff.stream_gains(1).is_none());
    }

    #[test]
    fn scalar_feedback_factorization() {
        let t = vec![vec![real(&[2.0], 1, 1)], vec![real(&[1.0], 1, 1), real(&[3.0], 1, 1)]];
        let b = feedback_matrix(0, &t).unwrap();
        assert!((b.block(1, 0)[(0, 0)] - c(1.0 / 3.0, 0.0)).norm() < 1e-15);
        let dl = dense_block_diag(&t) * b.dense_c();
        assert!(frobenius(&(dl - dense_lower(&t))) < 1e-15);
    }

    #[test]
    fn uncoupled_users_need_no_feedback() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let t = vec![
            vec![random_cmat(&mut rng, 2, 2)],
            vec![CMat::zeros(2, 2), random_cmat(&mut rng, 2, 2)],
        ];
        let b = feedback_matrix(0, &t).unwrap();
        assert_eq!(b.dense(), CMat::zeros(4, 4));
        assert_eq!(b.dense_c(), CMat::identity(4, 4));
    }

    #[test]
    fn random_feedback_factorization() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let t: Vec<Vec<CMat>> = (0..2)
                .map(|k| (0..=k).map(|_| random_cmat(&mut rng, 2, 2)).collect())
                .collect();
            let b = feedback_matrix(0, &t).unwrap();
            let full = dense_lower(&t);
            let err = frobenius(&(dense_block_diag(&t) * b.dense_c() - &full)) / frobenius(&full);
            assert!(err < 1e-9);
        }
    }

    #[test]
    fn fewer_streams_than_antennas_uses_pseudo_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let t: Vec<Vec<CMat>> = (0..3)
            .map(|k| (0..=k).map(|_| random_cmat(&mut rng, 3, 2)).collect())
            .collect();
        let b = feedback_matrix(0, &t).unwrap();
        // D L equals T after projecting each block row onto the column space
        // of its diagonal block
        for (k, row) in t.iter().enumerate().skip(1) {
            let proj = &row[k] * linalg::pinv(&row[k], RANK_CUTOFF);
            for (i, blk) in row[..k].iter().enumerate() {
                let lhs = &row[k] * b.block(k, i);
                assert!(frobenius(&(lhs - &proj * blk)) < 1e-10);
            }
        }
    }

    #[test]
    fn singular_diagonal_block_named() {
        let t = vec![vec![real(&[1.0], 1, 1)], vec![real(&[1.0], 1, 1), real(&[0.0], 1, 1)]];
        assert!(matches!(
            feedback_matrix(5, &t),
            Err(Error::RankDeficientBlock {
                subcarrier: 5,
                position: 1
            })
        ));
    }

    #[test]
    fn modulo_examples() {
        assert_eq!(modulo(c(5.0, 0.0), 16), (c(-3.0, 0.0), c(-8.0, 0.0)));
        assert_eq!(modulo(c(-4.0, 0.0), 16), (c(4.0, 0.0), c(8.0, 0.0)));
        assert_eq!(modulo(c(4.0, 0.0), 16), (c(4.0, 0.0), c(0.0, 0.0)));
        assert_eq!(modulo(c(-2.0, -2.0), 4), (c(2.0, 2.0), c(4.0, 4.0)));
    }

    #[test]
    fn precode_without_feedback_is_identity() {
        let d = vec![c(1.0, -3.0), c(3.0, 3.0), c(-1.0, 1.0), c(-3.0, -1.0)];
        let out = thp_precode(&d, &FeedbackMatrix::zero(2, 2), 16);
        assert_eq!(out.precoded, d);
        assert!(out.offsets.iter().all(|o| *o == c(0.0, 0.0)));
    }

    fn two_user_scalar(coupling: f64) -> FeedbackMatrix {
        let t = vec![
            vec![real(&[1.0], 1, 1)],
            vec![real(&[coupling], 1, 1), real(&[1.0], 1, 1)],
        ];
        feedback_matrix(0, &t).unwrap()
    }

    #[test]
    fn precode_in_region() {
        let out = thp_precode(&[c(1.0, 1.0), c(1.0, 1.0)], &two_user_scalar(0.5), 4);
        assert_eq!(out.precoded, vec![c(1.0, 1.0), c(0.5, 0.5)]);
        assert!(out.offsets.iter().all(|o| *o == c(0.0, 0.0)));
    }

    #[test]
    fn precode_folds() {
        let out = thp_precode(&[c(1.0, 1.0), c(1.0, 1.0)], &two_user_scalar(3.0), 4);
        assert_eq!(out.precoded[1], c(2.0, 2.0));
        assert_eq!(out.offsets[1], c(4.0, 4.0));
    }

    fn qam(rng: &mut ChaCha8Rng, order: u32) -> Complex64 {
        use rand::Rng;
        let side = (order as f64).sqrt() as i64;
        let mut pick = || (2 * rng.random_range(0..side) - side + 1) as f64;
        c(pick(), pick())
    }

    proptest! {
        #[test]
        fn recursion_solves_triangular_system(seed in 0u64..500, order_idx in 0usize..4) {
            let order = [4u32, 16, 64, 256][order_idx];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t: Vec<Vec<CMat>> = (0..3).map(|k| (0..=k).map(|_| random_cmat(&mut rng, 2, 2)).collect()).collect();
            let fb = feedback_matrix(0, &t).unwrap();
            let d: Vec<Complex64> = (0..6).map(|_| qam(&mut rng, order)).collect();
            let out = thp_precode(&d, &fb, order);
            let cb = fb.dense_c() * DVector::from_vec(out.precoded.clone());
            let a = (order as f64).sqrt();
            for (i, v) in out.modified.iter().enumerate() {
                prop_assert!((cb[i] - v).norm() < 1e-9 * (1.0 + v.norm()));
            }
            for b in &out.precoded {
                prop_assert!(b.re > -a && b.re <= a && b.im > -a && b.im <= a);
            }
            for o in &out.offsets {
                let xi = o / (2.0 * a);
                prop_assert!((xi.re - xi.re.round()).abs() < 1e-12 && (xi.im - xi.im.round()).abs() < 1e-12);
            }
        }

        #[test]
        fn modulo_lands_in_region(re in -100.0f64..100.0, im in -100.0f64..100.0, order_idx in 0usize..4) {
            let order = [4u32, 16, 64, 256][order_idx];
            let a = (order as f64).sqrt();
            let (y, off) = modulo(c(re, im), order);
            prop_assert!(y.re > -a && y.re <= a && y.im > -a && y.im <= a);
            prop_assert!((y - c(re, im) - off).norm() < 1e-12);
        }
    }
}
