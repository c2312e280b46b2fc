//! Exact algebra of integer quadratic forms.
//!
//! A form is stored as its symmetric Gram matrix A, so Q(x) = x^t A x and
//! B_Q(x, y) = x^t A y. Rational forms are expected to be scaled to
//! integer entries first; rescaling changes neither X nor X(Q).
//!
//! Everything in this module is exact: integer evaluation uses i128
//! accumulators, and the decompositions (inertia, kernel, hyperbolic
//! normalization) run over arbitrary-precision rationals. No floating
//! point is involved except in the convenience `operator_norm`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, Rat, RatMatrix};
use crate::points::RationalProjectivePoint;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QuadFormError {
    #[error("gram matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("gram matrix must be symmetric (entry ({i},{j}))")]
    NotSymmetric { i: usize, j: usize },
    #[error("gram matrix must not be zero")]
    ZeroForm,
    #[error("vector has {got} coordinates, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point is not isotropic: Q(e) = {0}")]
    NotIsotropic(i128),
    #[error("point lies in the kernel of the form")]
    PointInKernel,
}

/// Signature of a real symmetric matrix, computed exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Inertia {
    pub pos: usize,
    pub neg: usize,
    pub zero: usize,
}

impl Inertia {
    /// Upper bound for the Q-rank: a totally isotropic real subspace has
    /// dimension at most min(pos, neg) + zero-part considerations; over
    /// the nonsingular part the classical bound min(pos, neg) applies.
    pub fn isotropy_bound(&self) -> usize {
        self.pos.min(self.neg)
    }
}

/// Rational change of basis exhibiting a hyperbolic pair.
///
/// Columns of `basis` are the new basis vectors (e, b_2, ..., b_n, f);
/// in that basis the Gram matrix is exactly
///
/// ```text
/// [ 0       0        1 ]
/// [ 0   residual     0 ]
/// [ 1       0        0 ]
/// ```
///
/// equivalently Q(y) = 2 y_1 y_{n+1} + Q~(y_2, ..., y_n).
#[derive(Debug, Clone)]
pub struct HyperbolicBasis {
    pub basis: RatMatrix,
    pub residual: RatMatrix,
}

impl HyperbolicBasis {
    /// The transformed Gram matrix rebuilt from the block data.
    pub fn good_form_gram(&self) -> RatMatrix {
        let n1 = self.basis.len();
        let mut g = vec![vec![Rat::zero(); n1]; n1];
        g[0][n1 - 1] = Rat::one();
        g[n1 - 1][0] = Rat::one();
        for i in 0..n1 - 2 {
            for j in 0..n1 - 2 {
                g[i + 1][j + 1] = self.residual[i][j].clone();
            }
        }
        g
    }
}

/// JSON wire format: `{"dim": n, "gram": [[..], ..]}` with integer entries.
#[derive(Debug, Serialize, Deserialize)]
pub struct GramJson {
    pub dim: usize,
    pub gram: Vec<Vec<i64>>,
}

/// An integer quadratic form on R^{n+1}, defining a projective quadric
/// hypersurface of dimension n - 1 inside P^n(R).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuadraticForm {
    gram: Vec<Vec<i64>>,
}

impl QuadraticForm {
    pub fn new(gram: Vec<Vec<i64>>) -> Result<Self, QuadFormError> {
        let n1 = gram.len();
        for row in &gram {
            if row.len() != n1 {
                return Err(QuadFormError::NotSquare { rows: n1, cols: row.len() });
            }
        }
        for i in 0..n1 {
            for j in (i + 1)..n1 {
                if gram[i][j] != gram[j][i] {
                    return Err(QuadFormError::NotSymmetric { i, j });
                }
            }
        }
        if gram.iter().all(|r| r.iter().all(|&e| e == 0)) {
            return Err(QuadFormError::ZeroForm);
        }
        Ok(Self { gram })
    }

    pub fn diagonal(entries: &[i64]) -> Self {
        let n1 = entries.len();
        let mut gram = vec![vec![0i64; n1]; n1];
        for (i, &e) in entries.iter().enumerate() {
            gram[i][i] = e;
        }
        Self::new(gram).expect("diagonal form")
    }

    /// The split form with 1s on the antidiagonal, e.g. for n1 = 4 the
    /// form 2 x1 x4 + 2 x2 x3 of Q-rank 2.
    pub fn antidiagonal(n1: usize) -> Self {
        let mut gram = vec![vec![0i64; n1]; n1];
        for i in 0..n1 {
            gram[i][n1 - 1 - i] = 1;
        }
        Self::new(gram).expect("antidiagonal form")
    }

    /// Number of ambient coordinates, n + 1.
    pub fn ambient(&self) -> usize {
        self.gram.len()
    }

    /// Projective dimension n of the ambient projective space.
    pub fn dim(&self) -> usize {
        self.gram.len() - 1
    }

    pub fn gram(&self) -> &[Vec<i64>] {
        &self.gram
    }

    pub fn from_json(j: &GramJson) -> Result<Self, QuadFormError> {
        let form = Self::new(j.gram.clone())?;
        if form.dim() != j.dim {
            return Err(QuadFormError::NotSquare { rows: j.dim + 1, cols: j.gram.len() });
        }
        Ok(form)
    }

    pub fn to_json(&self) -> GramJson {
        GramJson { dim: self.dim(), gram: self.gram.clone() }
    }

    fn check_len(&self, v: &[i64]) -> Result<(), QuadFormError> {
        if v.len() != self.ambient() {
            return Err(QuadFormError::DimensionMismatch {
                expected: self.ambient(),
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Q(v) = v^t A v, exactly.
    pub fn evaluate(&self, v: &[i64]) -> Result<i128, QuadFormError> {
        self.check_len(v)?;
        Ok(self.evaluate_unchecked(v))
    }

    pub(crate) fn evaluate_unchecked(&self, v: &[i64]) -> i128 {
        let mut acc: i128 = 0;
        for (i, row) in self.gram.iter().enumerate() {
            let vi = v[i] as i128;
            if vi == 0 {
                continue;
            }
            let mut rowacc: i128 = 0;
            for (j, &a) in row.iter().enumerate() {
                rowacc += a as i128 * v[j] as i128;
            }
            acc += vi * rowacc;
        }
        acc
    }

    /// B_Q(v, w) = v^t A w, exactly.
    pub fn bilinear(&self, v: &[i64], w: &[i64]) -> Result<i128, QuadFormError> {
        self.check_len(v)?;
        self.check_len(w)?;
        Ok(self.bilinear_unchecked(v, w))
    }

    pub(crate) fn bilinear_unchecked(&self, v: &[i64], w: &[i64]) -> i128 {
        let mut acc: i128 = 0;
        for (i, row) in self.gram.iter().enumerate() {
            let vi = v[i] as i128;
            if vi == 0 {
                continue;
            }
            let mut rowacc: i128 = 0;
            for (j, &a) in row.iter().enumerate() {
                rowacc += a as i128 * w[j] as i128;
            }
            acc += vi * rowacc;
        }
        acc
    }

    /// Whether [v] lies on the quadric.
    pub fn is_isotropic(&self, v: &[i64]) -> bool {
        self.evaluate_unchecked(v) == 0
    }

    /// Exact signature via symmetric (congruence) pivoting over the
    /// rationals. When every remaining diagonal entry vanishes but an
    /// off-diagonal one does not, that entry spans a hyperbolic plane
    /// contributing (1, 1) to the signature.
    pub fn inertia(&self) -> Inertia {
        let mut a = linalg::int_matrix_to_rat(&self.gram);
        let mut pos = 0usize;
        let mut neg = 0usize;
        let mut zero = 0usize;
        // Active index set, shrunk as pivots are consumed.
        let mut idx: Vec<usize> = (0..self.ambient()).collect();
        while !idx.is_empty() {
            if let Some(&p) = idx.iter().find(|&&i| !a[i][i].is_zero()) {
                if a[p][p].is_positive() {
                    pos += 1;
                } else {
                    neg += 1;
                }
                let pivot = a[p][p].clone();
                idx.retain(|&i| i != p);
                // Schur complement on the remaining indices.
                for &i in &idx {
                    if a[i][p].is_zero() {
                        continue;
                    }
                    let f = &a[i][p] / &pivot;
                    for &j in &idx {
                        let t = &f * &a[p][j];
                        a[i][j] -= t;
                    }
                }
                continue;
            }
            // All diagonal entries vanish; look for a hyperbolic 2x2 pivot.
            let mut pair = None;
            'outer: for (s, &i) in idx.iter().enumerate() {
                for &j in &idx[s + 1..] {
                    if !a[i][j].is_zero() {
                        pair = Some((i, j));
                        break 'outer;
                    }
                }
            }
            let Some((p, q)) = pair else {
                zero += idx.len();
                break;
            };
            pos += 1;
            neg += 1;
            let b = a[p][q].clone();
            idx.retain(|&i| i != p && i != q);
            // Schur complement of the block [[0, b], [b, 0]].
            for &i in &idx {
                let fp = &a[i][p] / &b;
                let fq = &a[i][q] / &b;
                if fp.is_zero() && fq.is_zero() {
                    continue;
                }
                for &j in &idx {
                    let t = &fp * &a[q][j] + &fq * &a[p][j];
                    a[i][j] -= t;
                }
            }
        }
        Inertia { pos, neg, zero }
    }

    pub fn is_nonsingular(&self) -> bool {
        self.inertia().zero == 0
    }

    /// Exact basis of the null space of the Gram matrix, as primitive
    /// integer vectors. Empty iff the form is nonsingular.
    pub fn kernel(&self) -> Vec<Vec<BigInt>> {
        let a = linalg::int_matrix_to_rat(&self.gram);
        linalg::nullspace(&a)
            .iter()
            .map(|v| linalg::rat_vec_to_primitive_int(v))
            .collect()
    }

    /// Whether an integer vector is in the kernel of B_Q.
    pub fn in_kernel(&self, v: &[i64]) -> bool {
        self.gram.iter().all(|row| {
            row.iter().zip(v).map(|(&a, &x)| a as i128 * x as i128).sum::<i128>() == 0
        })
    }

    pub fn det(&self) -> BigInt {
        let d = linalg::det(&linalg::int_matrix_to_rat(&self.gram));
        debug_assert!(d.denom().is_one());
        d.numer().clone()
    }

    /// Largest |eigenvalue| of the Gram matrix (f64), so that
    /// |Q(v)| <= norm * ||v||^2 for all real v.
    pub fn operator_norm(&self) -> f64 {
        operator_norm_f64(&self.gram_f64())
    }

    pub fn gram_f64(&self) -> nalgebra::DMatrix<f64> {
        let n1 = self.ambient();
        nalgebra::DMatrix::from_fn(n1, n1, |i, j| self.gram[i][j] as f64)
    }

    /// Whether the Gram matrix already has the hyperbolic normal shape
    /// (entry (1, n+1) equal to 1, first and last rows otherwise zero).
    pub fn is_good_form(&self) -> bool {
        let n1 = self.ambient();
        if n1 < 2 || self.gram[0][n1 - 1] != 1 {
            return false;
        }
        for j in 0..n1 {
            let first_ok = self.gram[0][j] == i64::from(j == n1 - 1);
            let last_ok = self.gram[n1 - 1][j] == i64::from(j == 0);
            if !first_ok || !last_ok {
                return false;
            }
        }
        true
    }

    /// The residual form Q~ of a good-form Gram matrix (middle block).
    pub fn residual_block(&self) -> Vec<Vec<i64>> {
        let n1 = self.ambient();
        (1..n1 - 1).map(|i| self.gram[i][1..n1 - 1].to_vec()).collect()
    }

    /// Rational basis (e, b_2, ..., b_n, f) with Q(f) = 0, B(e, f) = 1
    /// and the middle vectors B-orthogonal to both, bringing Q to the
    /// shape 2 y_1 y_{n+1} + Q~(y_2, ..., y_n).
    ///
    /// The auxiliary vector g is the first standard basis vector with
    /// B(e, g) != 0, so the construction is deterministic.
    pub fn hyperbolic_normalize(
        &self,
        e: &RationalProjectivePoint,
    ) -> Result<HyperbolicBasis, QuadFormError> {
        let ev = e.coords();
        self.check_len(ev)?;
        let q_e = self.evaluate_unchecked(ev);
        if q_e != 0 {
            return Err(QuadFormError::NotIsotropic(q_e));
        }
        if self.in_kernel(ev) {
            return Err(QuadFormError::PointInKernel);
        }
        let n1 = self.ambient();
        let a = linalg::int_matrix_to_rat(&self.gram);
        let e_rat: Vec<Rat> = ev.iter().map(|&x| linalg::rat_from_i64(x)).collect();

        // First standard basis vector not B-orthogonal to e.
        let b_e: Vec<Rat> = linalg::mat_vec(&a, &e_rat); // B(e, .) as a row
        let g_idx = (0..n1).find(|&j| !b_e[j].is_zero()).expect("e not in kernel");
        let mut g = vec![Rat::zero(); n1];
        g[g_idx] = Rat::one();
        let b_eg = b_e[g_idx].clone();
        let q_g = a[g_idx][g_idx].clone();

        // f0 = g - (Q(g) / (2 B(e,g))) e has Q(f0) = 0; scale to B(e,f) = 1.
        let coef = &q_g / (&b_eg * BigRational::from_integer(BigInt::from(2)));
        let f0: Vec<Rat> = (0..n1).map(|i| &g[i] - &coef * &e_rat[i]).collect();
        let b_ef0: Rat = b_e.iter().zip(&f0).map(|(b, x)| b * x).sum();
        debug_assert!(!b_ef0.is_zero());
        let f: Vec<Rat> = f0.iter().map(|x| x / &b_ef0).collect();

        // Middle block: null space of the two rows B(e, .), B(f, .).
        let b_f: Vec<Rat> = linalg::mat_vec(&a, &f);
        let middle = linalg::nullspace(&vec![b_e.clone(), b_f.clone()]);
        debug_assert_eq!(middle.len(), n1 - 2);

        let mut columns: Vec<Vec<Rat>> = Vec::with_capacity(n1);
        columns.push(e_rat);
        columns.extend(middle);
        columns.push(f);
        let basis: RatMatrix =
            (0..n1).map(|i| columns.iter().map(|c| c[i].clone()).collect()).collect();

        let transformed = linalg::congruence(&a, &basis);
        // Exact block-shape invariant.
        debug_assert!(transformed[0][n1 - 1].is_one() && transformed[n1 - 1][0].is_one());
        debug_assert!((0..n1 - 1).all(|j| transformed[0][j].is_zero()));
        debug_assert!((1..n1).all(|j| transformed[n1 - 1][j].is_zero()));
        let residual: RatMatrix =
            (1..n1 - 1).map(|i| transformed[i][1..n1 - 1].to_vec()).collect();
        Ok(HyperbolicBasis { basis, residual })
    }
}

pub fn operator_norm_f64(m: &nalgebra::DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, &l| acc.max(l.abs()))
}
