//! Williamson decomposition and related symplectic utilities.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::{GaussianState, PureGaussianKet};
use crate::linalg::{self, max_abs};

/// `V = (ħ/2)·S·diag(2n̄+1, 2n̄+1)·Sᵀ` with `S` real symplectic.
#[derive(Debug, Clone)]
pub struct WilliamsonFactorization {
    pub s: DMatrix<f64>,
    /// Thermal occupations, non-increasing.
    pub nbar: Vec<f64>,
}

impl WilliamsonFactorization {
    /// Reassembles the covariance matrix.
    pub fn reconstruct(&self, hbar: f64) -> DMatrix<f64> {
        let m = self.nbar.len();
        let d = DMatrix::from_fn(2 * m, 2 * m, |i, j| {
            if i == j {
                0.5 * hbar * (2.0 * self.nbar[i % m] + 1.0)
            } else {
                0.0
            }
        });
        &self.s * d * self.s.transpose()
    }
}

/// `max |S Ω Sᵀ − Ω|`.
pub fn symplectic_residual(s: &DMatrix<f64>) -> f64 {
    let om = linalg::omega(s.nrows() / 2);
    max_abs(&(s * &om * s.transpose() - om))
}

/// `S⁻¹ = −Ω Sᵀ Ω` for symplectic `S`.
pub fn symplectic_inverse(s: &DMatrix<f64>) -> DMatrix<f64> {
    let om = linalg::omega(s.nrows() / 2);
    -(&om * s.transpose() * &om)
}

/// Williamson normal form of a positive definite covariance matrix.
///
/// The positive eigenvalues ν of the Hermitian matrix `i V^{1/2} Ω V^{1/2}` are the
/// symplectic eigenvalues; writing each eigenvector as `(x + i y)/√2` gives an
/// orthogonal `O = [y…, x…]` with `Oᵀ V^{1/2} Ω V^{1/2} O = diag(ν,ν)·Ω`, and then
/// `S = V^{1/2} O diag(ν,ν)^{-1/2}`. Each mode's residual rotation is fixed by
/// maximising the trace of its diagonal 2×2 block of `S`, so passive states get `S = I`.
pub fn williamson(state: &GaussianState) -> Result<WilliamsonFactorization> {
    let m = state.num_modes();
    let hbar = state.hbar();
    let v = state.cov();
    let (vals, _) = linalg::sym_eigen_sorted(v);
    if vals[0] <= 0.0 {
        return Err(Error::Domain(format!(
            "Williamson decomposition needs a positive definite covariance (min eigenvalue {:.3e})",
            vals[0]
        )));
    }
    let vh = linalg::sym_sqrt(v)?;
    let om = linalg::omega(m);
    let a = &vh * &om * &vh;
    let h = DMatrix::from_fn(2 * m, 2 * m, |i, j| Complex64::new(0.0, a[(i, j)]));
    let eig = h.symmetric_eigen();

    let mut order: Vec<usize> = (0..2 * m).collect();
    order.sort_by(|&p, &q| eig.eigenvalues[q].total_cmp(&eig.eigenvalues[p]));
    let positive = &order[..m];

    let mut o = DMatrix::zeros(2 * m, 2 * m);
    let mut nu = vec![0.0; m];
    for (k, &idx) in positive.iter().enumerate() {
        nu[k] = eig.eigenvalues[idx];
        let u = eig.eigenvectors.column(idx);
        let norm = u.norm();
        for i in 0..2 * m {
            let c = u[i] / norm * std::f64::consts::SQRT_2;
            o[(i, k)] = c.im;
            o[(i, m + k)] = c.re;
        }
    }
    if nu.iter().any(|&x| x <= 0.0) {
        return Err(Error::Domain("non-positive symplectic eigenvalue".into()));
    }

    let mut s = vh * o;
    for k in 0..m {
        let inv = 1.0 / nu[k].sqrt();
        for i in 0..2 * m {
            s[(i, k)] *= inv;
            s[(i, m + k)] *= inv;
        }
    }
    for k in 0..m {
        let (a11, a12, a21, a22) = (s[(k, k)], s[(k, m + k)], s[(m + k, k)], s[(m + k, m + k)]);
        let theta = (a12 - a21).atan2(a11 + a22);
        let (sn, cs) = theta.sin_cos();
        for i in 0..2 * m {
            let (ck, cm) = (s[(i, k)], s[(i, m + k)]);
            s[(i, k)] = cs * ck + sn * cm;
            s[(i, m + k)] = -sn * ck + cs * cm;
        }
    }

    let nbar = nu
        .iter()
        .map(|&x| (0.5 * (x / (0.5 * hbar) - 1.0)).max(0.0))
        .collect();
    Ok(WilliamsonFactorization { s, nbar })
}

/// Symplectic `S_ψ` with `V_ψ = (ħ/2)·S_ψ S_ψᵀ`: the symmetric square root of `(2/ħ)V_ψ`.
pub fn pure_symplectic_factor(psi: &PureGaussianKet) -> Result<DMatrix<f64>> {
    let st = psi.state();
    if !st.is_pure() {
        return Err(Error::Domain("symplectic factor requested for a mixed state".into()));
    }
    linalg::sym_sqrt(&(st.cov() * (2.0 / st.hbar())))
}

/// Moves `rho` into the frame where `psi` is the vacuum: `V_τ = S⁻¹ V_ρ S⁻ᵀ`,
/// `r_τ = S⁻¹ (r_ρ − r_ψ)`. Trace distances to `psi` become distances to vacuum.
pub fn relative_to_vacuum(psi: &PureGaussianKet, rho: &GaussianState) -> Result<GaussianState> {
    psi.state().same_frame(rho)?;
    let s = pure_symplectic_factor(psi)?;
    let si = symplectic_inverse(&s);
    let v = &si * rho.cov() * si.transpose();
    let v = (&v + v.transpose()) * 0.5;
    let r = &si * (rho.means() - psi.state().means());
    GaussianState::new(rho.hbar(), r, v)
}
