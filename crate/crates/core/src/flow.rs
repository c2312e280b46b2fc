//! The diagonal flow g_t^x and the Dani correspondence.
//!
//! For a base point x on the quadric X, the flow is g_t^x = u_x^{-1} a_t u_x
//! where u_x is an isometry of Q moving x to a fixed reference isotropic
//! direction and a_t is the one-parameter hyperbolic boost contracting
//! that direction at rate e^{-t}. The correspondence bounds the norm of
//! an integer isotropic vector v along the flow by approximation data:
//!
//! ```text
//! |g_t^x v| <= C max(e^{-t} H(v), H(v) dist(x, v), e^t H(v) dist(x, v)^2)
//! ```
//!
//! with C = 3 C_0. When the Gram matrix has all eigenvalues +-1 (which
//! holds for the hyperbolic normal form of the circle and the sphere)
//! u_x can be taken orthogonal and the constant is honest; otherwise the
//! construction conjugates by a spectral scaling and the inequality is
//! checked with a fitted constant.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::geometry::RealProjectivePoint;
use crate::linalg::rat_to_f64;
use crate::points::RationalProjectivePoint;
use crate::quadform::{operator_norm_f64, QuadraticForm};

#[derive(Debug, Error, PartialEq)]
pub enum FlowError {
    #[error("form is not in hyperbolic normal form")]
    NotGoodForm,
    #[error("form is degenerate")]
    DegenerateForm,
    #[error("base point is not on the real quadric (|Q(x)| = {0})")]
    NotOnQuadric(f64),
}

/// The constants of the correspondence: |Q~(w)| <= c0 |w|^2 on the
/// residual block (floored at 2), |Q(v)| <= c1 |v|^2 globally,
/// c_big = 3 c0 and c_small = 1 / (c_big sqrt(5 c1)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DaniConstants {
    pub c0: f64,
    pub c1: f64,
    pub c_big: f64,
    pub c_small: f64,
}

impl DaniConstants {
    fn from_norms(residual_norm: f64, gram_norm: f64) -> Self {
        let c0 = residual_norm.max(2.0);
        let c1 = gram_norm;
        let c_big = 3.0 * c0;
        let c_small = 1.0 / (c_big * (5.0 * c1).sqrt());
        DaniConstants { c0, c1, c_big, c_small }
    }

    /// Constants for a form already in hyperbolic normal form.
    pub fn for_good_form(form: &QuadraticForm) -> Result<Self, FlowError> {
        if !form.is_good_form() {
            return Err(FlowError::NotGoodForm);
        }
        let residual = form.residual_block();
        let residual_norm = if residual.is_empty() {
            0.0
        } else {
            let k = residual.len();
            operator_norm_f64(&DMatrix::from_fn(k, k, |i, j| residual[i][j] as f64))
        };
        Ok(Self::from_norms(residual_norm, form.operator_norm()))
    }

    /// Constants for an arbitrary isotropic form, computed on its
    /// hyperbolic normal form.
    pub fn for_form(form: &QuadraticForm, base: &RationalProjectivePoint) -> Result<Self, FlowError> {
        let hb = form
            .hyperbolic_normalize(base)
            .map_err(|_| FlowError::DegenerateForm)?;
        let good = hb.good_form_gram();
        let n1 = good.len();
        let gram_norm = operator_norm_f64(&DMatrix::from_fn(n1, n1, |i, j| {
            rat_to_f64(&good[i][j])
        }));
        let residual_norm = if n1 > 2 {
            let k = n1 - 2;
            operator_norm_f64(&DMatrix::from_fn(k, k, |i, j| {
                rat_to_f64(&good[i + 1][j + 1])
            }))
        } else {
            0.0
        };
        Ok(Self::from_norms(residual_norm, gram_norm))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FlowMode {
    /// All Gram eigenvalues are +-1: u_x is a genuine orthogonal
    /// isometry of Q and the constant C = 3 C_0 is honest.
    ExactOrthogonal,
    /// General spectrum: the flow is conjugated by the spectral scaling
    /// and inequality constants are only fitted.
    Conjugated,
}

/// One evaluation of the correspondence inequality.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DaniReport {
    pub t: f64,
    pub height: i64,
    pub dist: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

pub struct FlowContext {
    form: QuadraticForm,
    x: RealProjectivePoint,
    mode: FlowMode,
    /// Working-coordinate map T with T^t J T = A; identity in
    /// exact-orthogonal mode.
    t_fwd: DMatrix<f64>,
    t_inv: DMatrix<f64>,
    /// Orthogonal map in working coordinates with u y_hat = reference.
    u: DMatrix<f64>,
    /// Reference +- eigendirections in working coordinates.
    e_plus: DVector<f64>,
    e_minus: DVector<f64>,
}

impl FlowContext {
    pub fn new(form: &QuadraticForm, x: &RealProjectivePoint) -> Result<Self, FlowError> {
        let n1 = form.ambient();
        let a = form.gram_f64();
        let q_x = x.form_residual(form);
        if q_x.abs() > 1e-6 {
            return Err(FlowError::NotOnQuadric(q_x.abs()));
        }

        // Spectral data, in deterministic (descending eigenvalue) order.
        let eig = a.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..n1).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
        let lambdas: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        if lambdas.iter().any(|l| l.abs() < 1e-9) {
            return Err(FlowError::DegenerateForm);
        }
        let exact = lambdas.iter().all(|l| (l.abs() - 1.0).abs() <= 1e-9);
        let mode = if exact { FlowMode::ExactOrthogonal } else { FlowMode::Conjugated };

        // Working coordinates: original ones in exact mode, spectral
        // scaling y = D^{1/2} V^t x otherwise, so the working Gram W has
        // eigenvalues exactly +-1 either way.
        let (t_fwd, t_inv, w, pos_dim): (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, usize) =
            if exact {
                let pos_dim = lambdas.iter().filter(|l| **l > 0.0).count();
                (DMatrix::identity(n1, n1), DMatrix::identity(n1, n1), a.clone(), pos_dim)
            } else {
                let v = DMatrix::from_fn(n1, n1, |i, j| eig.eigenvectors[(i, order[j])]);
                let d_half = DMatrix::from_diagonal(&DVector::from_iterator(
                    n1,
                    lambdas.iter().map(|l| l.abs().sqrt()),
                ));
                let d_half_inv = DMatrix::from_diagonal(&DVector::from_iterator(
                    n1,
                    lambdas.iter().map(|l| 1.0 / l.abs().sqrt()),
                ));
                let j = DMatrix::from_diagonal(&DVector::from_iterator(
                    n1,
                    lambdas.iter().map(|l| l.signum()),
                ));
                let pos_dim = lambdas.iter().filter(|l| **l > 0.0).count();
                (d_half * v.transpose(), v * d_half_inv, j, pos_dim)
            };
        if pos_dim == 0 || pos_dim == n1 {
            return Err(FlowError::NotOnQuadric(q_x.abs()));
        }

        // Projections onto the +-1 eigenspaces of W.
        let weig = w.clone().symmetric_eigen();
        let mut p_plus = DMatrix::zeros(n1, n1);
        let mut p_minus = DMatrix::zeros(n1, n1);
        for k in 0..n1 {
            let col = weig.eigenvectors.column(k);
            let outer = &col * col.transpose();
            if weig.eigenvalues[k] > 0.0 {
                p_plus += outer;
            } else {
                p_minus += outer;
            }
        }

        // Base point in working coordinates, split into +- parts of
        // equal weight (isotropy makes the two projections equal).
        let y = &t_fwd * DVector::from_column_slice(x.coords());
        let y = &y / y.norm();
        let yp = &p_plus * &y;
        let ym = &p_minus * &y;
        if yp.norm() < 1e-6 || ym.norm() < 1e-6 {
            return Err(FlowError::NotOnQuadric(q_x.abs()));
        }
        let x_plus = &yp / yp.norm();
        let x_minus = &ym / ym.norm();

        // Reference eigendirections: projections of the first standard
        // basis vectors that survive. For a good form this yields
        // (e_1 +- e_{n+1}) / sqrt(2), so the reference isotropic
        // direction is [e_1].
        let e_plus = first_surviving_projection(&p_plus);
        let e_minus = first_surviving_projection(&p_minus);

        // u maps the orthonormal basis (x+, completion of E+, x-,
        // completion of E-) to the corresponding reference basis.
        let basis_x = [
            complete_basis(&p_plus, &x_plus, pos_dim),
            complete_basis(&p_minus, &x_minus, n1 - pos_dim),
        ]
        .concat();
        let basis_e = [
            complete_basis(&p_plus, &e_plus, pos_dim),
            complete_basis(&p_minus, &e_minus, n1 - pos_dim),
        ]
        .concat();
        let bx = DMatrix::from_columns(&basis_x);
        let be = DMatrix::from_columns(&basis_e);
        let u = &be * bx.transpose();

        Ok(FlowContext {
            form: form.clone(),
            x: x.clone(),
            mode,
            t_fwd,
            t_inv,
            u,
            e_plus,
            e_minus,
        })
    }

    pub fn mode(&self) -> FlowMode {
        self.mode
    }

    pub fn base_point(&self) -> &RealProjectivePoint {
        &self.x
    }

    pub fn form(&self) -> &QuadraticForm {
        &self.form
    }

    /// The isometry part (working coordinates composed with the scaling):
    /// maps x to the reference isotropic direction, and in
    /// exact-orthogonal mode is orthogonal.
    pub fn u_matrix(&self) -> DMatrix<f64> {
        &self.u * &self.t_fwd
    }

    /// The boost h_t in working coordinates: hyperbolic rotation in the
    /// (e+, e-) plane, identity on its orthogonal complement.
    fn boost(&self, t: f64) -> DMatrix<f64> {
        let n1 = self.e_plus.len();
        let pp = &self.e_plus * self.e_plus.transpose();
        let mm = &self.e_minus * self.e_minus.transpose();
        let pm = &self.e_plus * self.e_minus.transpose();
        let mp = &self.e_minus * self.e_plus.transpose();
        DMatrix::identity(n1, n1) + (t.cosh() - 1.0) * (pp + mm) - t.sinh() * (pm + mp)
    }

    /// g_t^x as a matrix in the original coordinates.
    pub fn flow_matrix(&self, t: f64) -> DMatrix<f64> {
        &self.t_inv * self.u.transpose() * self.boost(t) * &self.u * &self.t_fwd
    }

    /// |g_t^x v| for the primitive integer representative of v.
    pub fn flow_norm(&self, v: &RationalProjectivePoint, t: f64) -> f64 {
        let vi = DVector::from_iterator(
            v.coords().len(),
            v.coords().iter().map(|&c| c as f64),
        );
        (self.flow_matrix(t) * vi).norm()
    }

    /// Evaluate the correspondence inequality at (v, t).
    pub fn verify_dani(
        &self,
        consts: &DaniConstants,
        v: &RationalProjectivePoint,
        t: f64,
    ) -> DaniReport {
        let lhs = self.flow_norm(v, t);
        let h = v.height() as f64;
        let dist = self.x.dist_rational(v);
        let rhs = consts.c_big
            * (h * (-t).exp()).max(h * dist).max(h * dist * dist * t.exp());
        DaniReport { t, height: v.height(), dist, lhs, rhs, ratio: lhs / rhs }
    }
}

/// Projection of the first standard basis vector with a nonvanishing
/// image, normalized.
fn first_surviving_projection(p: &DMatrix<f64>) -> DVector<f64> {
    let n1 = p.nrows();
    for j in 0..n1 {
        let col = p.column(j).into_owned();
        if col.norm() > 1e-6 {
            return &col / col.norm();
        }
    }
    unreachable!("projection of positive rank")
}

/// Orthonormal basis of the range of the projection `p`, starting with
/// `first`, completed by modified Gram-Schmidt with largest-residual
/// pivoting over projected standard basis vectors (ties to the lowest
/// index), so the completion is deterministic.
fn complete_basis(p: &DMatrix<f64>, first: &DVector<f64>, dim: usize) -> Vec<DVector<f64>> {
    let n1 = p.nrows();
    let mut basis = vec![first.clone()];
    let mut candidates: Vec<DVector<f64>> =
        (0..n1).map(|j| p.column(j).into_owned()).collect();
    while basis.len() < dim {
        for c in candidates.iter_mut() {
            for b in &basis[basis.len() - 1..] {
                let proj = b.dot(c);
                *c -= proj * b;
            }
        }
        // Re-orthogonalize fully against the current basis for stability.
        let mut best = 0;
        let mut best_norm = -1.0;
        for (j, c) in candidates.iter().enumerate() {
            let mut r = c.clone();
            for b in &basis {
                let proj = b.dot(&r);
                r -= proj * b;
            }
            if r.norm() > best_norm + 1e-12 {
                best_norm = r.norm();
                best = j;
            }
        }
        let mut r = candidates[best].clone();
        for b in &basis {
            let proj = b.dot(&r);
            r -= proj * b;
        }
        basis.push(&r / r.norm());
    }
    basis
}
