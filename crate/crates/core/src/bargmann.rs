//! Multivariate traces `Tr(ρ₁ρ₂⋯ρ_m)` of Gaussian states and overlaps of pure
//! Gaussian kets.
//!
//! The trace of a product is `exp(−½ zᵀM⁻¹z)/√det(M/ħ)` with
//! `z = ⊕ₖ(r_k − r_m)` and
//! `M = ⊕ₖ(V_k + V_m) + [J⊗(V_m + i(ħ/2)Ω) + transpose]`, `J` the strictly upper
//! triangular matrix of ones. `M = R + iK` has real symmetric `R` (positive definite
//! for valid states) and real symmetric `K`, so after whitening by the Cholesky
//! factor of `R` the determinant is `det R · ∏(1 + iκ_j)` with real κ_j. Every factor
//! lies in the right half plane, which pins the branch of the square root.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::{GaussianState, PureGaussianKet};
use crate::linalg;

/// Largest tolerated imaginary part of a moment that must be real.
pub const IMAG_RESIDUAL_TOL: f64 = 1e-10;

/// The quadratic-form data `(z, M)` of a multivariate trace.
#[derive(Debug, Clone)]
pub struct InvariantKernel {
    pub z: DVector<f64>,
    pub real_part: DMatrix<f64>,
    pub imag_part: DMatrix<f64>,
    pub hbar: f64,
}

impl InvariantKernel {
    pub fn build(states: &[GaussianState]) -> Result<Self> {
        if states.len() < 2 {
            return Err(Error::Shape("an invariant kernel needs at least two states".into()));
        }
        let last = states.last().unwrap();
        for s in states {
            last.same_frame(s)?;
        }
        let hbar = last.hbar();
        let n = 2 * last.num_modes();
        let blocks = states.len() - 1;
        let size = blocks * n;
        let om = linalg::omega(last.num_modes()) * (0.5 * hbar);
        let vm = last.cov();

        let mut z = DVector::zeros(size);
        let mut re = DMatrix::zeros(size, size);
        let mut im = DMatrix::zeros(size, size);
        for (j, sj) in states[..blocks].iter().enumerate() {
            z.rows_mut(j * n, n).copy_from(&(sj.means() - last.means()));
            for k in 0..blocks {
                let mut rb = re.view_mut((j * n, k * n), (n, n));
                if j == k {
                    rb.copy_from(&(sj.cov() + vm));
                } else {
                    rb.copy_from(vm);
                }
                let mut ib = im.view_mut((j * n, k * n), (n, n));
                if j < k {
                    ib.copy_from(&om);
                } else if j > k {
                    ib.copy_from(&(-&om));
                }
            }
        }
        Ok(Self { z, real_part: re, imag_part: im, hbar })
    }

    /// The complex matrix `M`.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        self.real_part.zip_map(&self.imag_part, Complex64::new)
    }

    /// `exp(−½ zᵀM⁻¹z)/√det(M/ħ)`.
    pub fn evaluate(&self) -> Result<Complex64> {
        let size = self.z.len();
        let chol = self.real_part.clone().cholesky().ok_or_else(|| Error::Degenerate {
            context: "real part of the Bargmann kernel is not positive definite".into(),
            condition: condition_estimate(&self.real_part),
        })?;
        let l = chol.l();
        let diag = l.diagonal();
        let (dmin, dmax) = diag
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(a, b), &x| (a.min(x), b.max(x)));
        let cond = (dmax / dmin).powi(2);
        if cond.is_nan() || cond >= 1e14 {
            return Err(Error::Degenerate {
                context: "Bargmann kernel is numerically singular".into(),
                condition: cond,
            });
        }

        let x = l
            .solve_lower_triangular(&self.imag_part)
            .expect("Cholesky factor is invertible");
        let k = l
            .solve_lower_triangular(&x.transpose())
            .expect("Cholesky factor is invertible");
        let k = (&k + k.transpose()) * 0.5;
        let eig = k.symmetric_eigen();
        let w = eig.eigenvectors.transpose()
            * l.solve_lower_triangular(&self.z).expect("Cholesky factor is invertible");

        let mut log_sqrt_det = Complex64::new(
            diag.iter().map(|d| d.ln()).sum::<f64>() - 0.5 * size as f64 * self.hbar.ln(),
            0.0,
        );
        let mut quad = Complex64::new(0.0, 0.0);
        for (kappa, wj) in eig.eigenvalues.iter().zip(w.iter()) {
            let f = Complex64::new(1.0, *kappa);
            log_sqrt_det += 0.5 * f.ln();
            quad += wj * wj / f;
        }
        Ok((-0.5 * quad - log_sqrt_det).exp())
    }
}

fn condition_estimate(m: &DMatrix<f64>) -> f64 {
    let (vals, _) = linalg::sym_eigen_sorted(m);
    let lo = vals[0];
    let hi = vals[vals.len() - 1];
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

fn all_identical_pure(states: &[GaussianState]) -> bool {
    let first = &states[0];
    states.iter().all(|s| s == first) && first.is_pure()
}

/// `Tr(ρ₁ρ₂⋯ρ_m)` for Gaussian states sharing modes and ħ.
pub fn multivariate_trace(states: &[GaussianState]) -> Result<Complex64> {
    match states.len() {
        0 => Err(Error::Shape("multivariate trace of an empty list".into())),
        1 => Ok(Complex64::new(1.0, 0.0)),
        _ => {
            if all_identical_pure(states) {
                // Tr(|ψ⟩⟨ψ|^m) = 1
                for s in states {
                    states[0].same_frame(s)?;
                }
                return Ok(Complex64::new(1.0, 0.0));
            }
            InvariantKernel::build(states)?.evaluate()
        }
    }
}

/// `⟨ψ|ρ^ℓ|ψ⟩`, the invariant of `{ρ, …, ρ, |ψ⟩⟨ψ|}` with ρ repeated ℓ times.
pub fn pure_moment_invariant(psi: &PureGaussianKet, rho: &GaussianState, ell: usize) -> Result<f64> {
    psi.state().same_frame(rho)?;
    if ell == 0 {
        return Ok(1.0);
    }
    let mut states = vec![rho.clone(); ell];
    states.push(psi.state().clone());
    real_part_checked(multivariate_trace(&states)?, "pure moment")
}

pub(crate) fn real_part_checked(z: Complex64, what: &str) -> Result<f64> {
    if z.im.abs() > IMAG_RESIDUAL_TOL {
        return Err(Error::Degenerate {
            context: format!("{what} has imaginary residual {:.3e}", z.im),
            condition: f64::NAN,
        });
    }
    Ok(z.re)
}

/// `Tr(ρ|0⟩⟨0|)`.
pub fn vacuum_probability(rho: &GaussianState) -> Result<f64> {
    let vac = GaussianState::vacuum(rho.num_modes(), rho.hbar());
    let v = real_part_checked(multivariate_trace(&[rho.clone(), vac])?, "vacuum probability")?;
    Ok(v.clamp(0.0, 1.0))
}

/// Bargmann-function data of a pure Gaussian ket in the `⟨0|g⟩ ≥ 0` gauge:
/// `⟨z̄|g⟩ = N·exp(½ zᵀBz + γᵀz)` with `N = ⟨0|g⟩`.
#[derive(Debug, Clone)]
pub struct BargmannData {
    pub b: DMatrix<Complex64>,
    pub gamma: DVector<Complex64>,
    pub vacuum_amplitude: f64,
}

impl BargmannData {
    pub fn of(ket: &PureGaussianKet) -> Result<Self> {
        let st = ket.state();
        let m = st.num_modes();
        let hbar = st.hbar();
        let i = Complex64::i();
        let one = Complex64::new(1.0, 0.0);
        let k = Complex64::new(1.0 / (2.0 * hbar).sqrt(), 0.0);

        // (a; a†) = W (q; p)
        let mut w = DMatrix::<Complex64>::zeros(2 * m, 2 * m);
        for j in 0..m {
            w[(j, j)] = k * one;
            w[(j, m + j)] = k * i;
            w[(m + j, j)] = k * one;
            w[(m + j, m + j)] = -k * i;
        }
        let sigma = &w * linalg::to_complex(st.cov()) * w.adjoint();
        let q = sigma + DMatrix::identity(2 * m, 2 * m) * Complex64::new(0.5, 0.0);
        let qinv = q.try_inverse().ok_or_else(|| Error::Degenerate {
            context: "singular Husimi covariance".into(),
            condition: f64::INFINITY,
        })?;
        let t = (DMatrix::identity(2 * m, 2 * m) - qinv).map(|c| c.conj());
        // A = X·t, with B the upper-left block of A (i.e. the lower-left block of t).
        let b = t.view((m, 0), (m, m)).into_owned();
        let b = (&b + b.transpose()) * Complex64::new(0.5, 0.0);

        let beta = DVector::from_vec(st.displacement());
        let beta_c = beta.map(|c| c.conj());
        let gamma = &beta - &b * &beta_c;

        let n0_sq = (DMatrix::identity(m, m) - b.map(|c| c.conj()) * &b).determinant();
        let n0 = n0_sq.re.max(0.0).powf(0.25);
        let quad = (beta_c.transpose() * &b * &beta_c)[(0, 0)];
        let log_n = n0.ln() - 0.5 * beta.norm_squared() + 0.5 * quad.re;
        let vacuum_amplitude = log_n.exp();
        if vacuum_amplitude.is_nan() || vacuum_amplitude <= 1e-150 {
            return Err(Error::Gauge(format!(
                "vacuum amplitude {vacuum_amplitude:.3e} is numerically zero"
            )));
        }
        Ok(Self { b, gamma, vacuum_amplitude })
    }
}

/// `⟨g|f⟩` with both kets in the `⟨0|·⟩ ≥ 0` gauge.
pub fn pure_overlap(g: &PureGaussianKet, f: &PureGaussianKet) -> Result<Complex64> {
    g.state().same_frame(f.state())?;
    let dg = BargmannData::of(g)?;
    let df = BargmannData::of(f)?;
    Ok(overlap_from_data(&dg, &df))
}

/// Gaussian integral `∫ d²z/π^M e^{−|z|²} conj(g(z)) f(z)` for two Bargmann functions.
pub fn overlap_from_data(g: &BargmannData, f: &BargmannData) -> Complex64 {
    let m = f.b.nrows();
    let a = &f.b;
    let c = g.b.map(|x| x.conj());
    let one = Complex64::new(1.0, 0.0);

    let mut qm = DMatrix::<Complex64>::zeros(2 * m, 2 * m);
    qm.view_mut((0, 0), (m, m)).copy_from(&(-a));
    qm.view_mut((m, m), (m, m)).copy_from(&(-&c));
    for j in 0..m {
        qm[(j, m + j)] = one;
        qm[(m + j, j)] = one;
    }
    let mut jv = DVector::<Complex64>::zeros(2 * m);
    jv.rows_mut(0, m).copy_from(&f.gamma);
    jv.rows_mut(m, m).copy_from(&g.gamma.map(|x| x.conj()));
    let sol = qm.lu().solve(&jv).expect("‖B‖ < 1 keeps the overlap kernel invertible");
    let expo = 0.5 * (jv.transpose() * sol)[(0, 0)];

    // det(I − C A)^{-1/2}: eigenvalues of C·A lie in the unit disc.
    let ca = &c * a;
    let eigs = ca.schur().eigenvalues().expect("complex Schur form is triangular");
    let log_det: Complex64 = eigs.iter().map(|lam| (one - lam).ln()).sum();
    (expo - 0.5 * log_det).exp() * (g.vacuum_amplitude * f.vacuum_amplitude)
}

/// Gram matrix `G_{jk} = ⟨a_j|b_k⟩`.
pub fn overlap_matrix(left: &[PureGaussianKet], right: &[PureGaussianKet]) -> Result<DMatrix<Complex64>> {
    let ld = left.iter().map(BargmannData::of).collect::<Result<Vec<_>>>()?;
    let rd = right.iter().map(BargmannData::of).collect::<Result<Vec<_>>>()?;
    for (x, y) in left.iter().zip(right.iter()) {
        x.state().same_frame(y.state())?;
    }
    Ok(DMatrix::from_fn(left.len(), right.len(), |j, k| overlap_from_data(&ld[j], &rd[k])))
}
