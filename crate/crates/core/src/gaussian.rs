//! Gaussian states described by first moments `r` and covariance matrix `V`.
//!
//! Quadratures are ordered (q₁…q_M, p₁…p_M) and ħ is carried explicitly; the
//! vacuum has `V = (ħ/2)·I`. A coherent state |α⟩ has `r = √(2ħ)(Re α, Im α)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, max_abs};

/// Default vacuum-variance convention (vacuum covariance is the identity).
pub const DEFAULT_HBAR: f64 = 2.0;

/// Absolute tolerance on the minimum eigenvalue of `V + i(ħ/2)Ω`.
pub const UNCERTAINTY_TOL: f64 = 1e-10;

/// Relative tolerance on `det((2/ħ)V) = 1` for pure states.
pub const PURITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    hbar: f64,
    r: DVector<f64>,
    v: DMatrix<f64>,
}

/// Measured residuals of the validity conditions of a covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidityReport {
    pub symmetric: bool,
    pub symmetry_residual: f64,
    pub uncertainty_ok: bool,
    /// Minimum eigenvalue of the Hermitian matrix `V + i(ħ/2)Ω`.
    pub uncertainty_min_eig: f64,
    /// Set when the uncertainty relation fails by less than the tolerance.
    pub uncertainty_warning: bool,
    pub positive_definite: bool,
    pub min_eig: f64,
    /// `det((2/ħ)V) − 1`; zero for pure states.
    pub purity_defect: f64,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.symmetric && self.uncertainty_ok && self.positive_definite
    }
}

impl GaussianState {
    /// Builds a state from raw moments. Only shapes and ħ are checked here; call
    /// [`GaussianState::validate`] (or [`GaussianState::new_valid`]) for physicality.
    pub fn new(hbar: f64, r: DVector<f64>, v: DMatrix<f64>) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::Domain(format!("hbar must be positive, got {hbar}")));
        }
        let n = r.len();
        if n == 0 || !n.is_multiple_of(2) {
            return Err(Error::Shape(format!(
                "first-moment vector must have even positive length, got {n}"
            )));
        }
        if v.nrows() != n || v.ncols() != n {
            return Err(Error::Shape(format!(
                "covariance matrix must be {n}x{n}, got {}x{}",
                v.nrows(),
                v.ncols()
            )));
        }
        if r.iter().chain(v.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Domain("non-finite entry in (r, V)".into()));
        }
        Ok(Self { hbar, r, v })
    }

    /// Like [`GaussianState::new`] but rejects states that fail validation.
    pub fn new_valid(hbar: f64, r: DVector<f64>, v: DMatrix<f64>) -> Result<Self> {
        let s = Self::new(hbar, r, v)?;
        let rep = s.validate();
        if !rep.is_valid() {
            return Err(Error::Domain(format!(
                "invalid covariance matrix (symmetry residual {:.3e}, uncertainty min eig {:.3e}, min eig {:.3e})",
                rep.symmetry_residual, rep.uncertainty_min_eig, rep.min_eig
            )));
        }
        Ok(s)
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn num_modes(&self) -> usize {
        self.r.len() / 2
    }

    pub fn means(&self) -> &DVector<f64> {
        &self.r
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn validate(&self) -> ValidityReport {
        let m = self.num_modes();
        let scale = max_abs(&self.v).max(f64::MIN_POSITIVE);
        let symmetry_residual = max_abs(&(&self.v - self.v.transpose()));
        let symmetric = symmetry_residual <= 1e-12 * scale;

        let om = linalg::omega(m);
        let half = 0.5 * self.hbar;
        let herm = DMatrix::from_fn(2 * m, 2 * m, |i, j| {
            Complex64::new(self.v[(i, j)], half * om[(i, j)])
        });
        let uncertainty_min_eig = linalg::hermitian_eigenvalues(&herm)[0];
        let uncertainty_ok = uncertainty_min_eig >= -UNCERTAINTY_TOL;
        let uncertainty_warning = uncertainty_ok && uncertainty_min_eig < -64.0 * f64::EPSILON * scale;

        let (vals, _) = linalg::sym_eigen_sorted(&self.v);
        let min_eig = vals[0];
        let positive_definite = min_eig > 0.0;

        let purity_defect = (self.v.clone() * (2.0 / self.hbar)).determinant() - 1.0;

        ValidityReport {
            symmetric,
            symmetry_residual,
            uncertainty_ok,
            uncertainty_min_eig,
            uncertainty_warning,
            positive_definite,
            min_eig,
            purity_defect,
        }
    }

    /// Whether `det((2/ħ)V) = 1` within [`PURITY_TOL`].
    pub fn is_pure(&self) -> bool {
        let d = (self.v.clone() * (2.0 / self.hbar)).determinant();
        (d - 1.0).abs() <= PURITY_TOL
    }

    pub(crate) fn same_frame(&self, other: &GaussianState) -> Result<()> {
        if self.num_modes() != other.num_modes() {
            return Err(Error::Shape(format!(
                "mode mismatch: {} vs {}",
                self.num_modes(),
                other.num_modes()
            )));
        }
        if (self.hbar - other.hbar).abs() > 1e-14 * self.hbar.max(other.hbar) {
            return Err(Error::Shape(format!(
                "hbar mismatch: {} vs {}",
                self.hbar, other.hbar
            )));
        }
        Ok(())
    }

    // ----- constructors -------------------------------------------------

    pub fn vacuum(modes: usize, hbar: f64) -> Self {
        Self {
            hbar,
            r: DVector::zeros(2 * modes),
            v: DMatrix::identity(2 * modes, 2 * modes) * (0.5 * hbar),
        }
    }

    pub fn coherent(alpha: Complex64, hbar: f64) -> Self {
        Self::coherent_multi(&[alpha], hbar)
    }

    /// Product of coherent states, one amplitude per mode.
    pub fn coherent_multi(alphas: &[Complex64], hbar: f64) -> Self {
        let m = alphas.len();
        let mut s = Self::vacuum(m, hbar);
        let k = (2.0 * hbar).sqrt();
        for (i, a) in alphas.iter().enumerate() {
            s.r[i] = k * a.re;
            s.r[m + i] = k * a.im;
        }
        s
    }

    /// Squeezed vacuum with `V = (ħ/2)·diag(e^{−2s}, e^{2s})`.
    pub fn squeezed_vacuum(s: f64, hbar: f64) -> Self {
        let h = 0.5 * hbar;
        Self {
            hbar,
            r: DVector::zeros(2),
            v: DMatrix::from_diagonal(&DVector::from_vec(vec![h * (-2.0 * s).exp(), h * (2.0 * s).exp()])),
        }
    }

    /// `D(α)S(s)|0⟩`.
    pub fn displaced_squeezed(alpha: Complex64, s: f64, hbar: f64) -> Self {
        let mut st = Self::squeezed_vacuum(s, hbar);
        st.r = Self::coherent(alpha, hbar).r;
        st
    }

    pub fn thermal(nbar: f64, hbar: f64) -> Result<Self> {
        check_nbar(nbar)?;
        Ok(Self {
            hbar,
            r: DVector::zeros(2),
            v: DMatrix::identity(2, 2) * (0.5 * hbar * (2.0 * nbar + 1.0)),
        })
    }

    /// Squashed state: vacuum variance in q, `1 + 4n̄` (in units of ħ/2) in p.
    pub fn squashed(nbar: f64, hbar: f64) -> Result<Self> {
        check_nbar(nbar)?;
        let h = 0.5 * hbar;
        Ok(Self {
            hbar,
            r: DVector::zeros(2),
            v: DMatrix::from_diagonal(&DVector::from_vec(vec![h, h * (1.0 + 4.0 * nbar)])),
        })
    }

    /// Tensor product of states (possibly multimode each), in mode order.
    pub fn product(parts: &[GaussianState]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Shape("product of zero states".into()))?;
        for p in parts {
            if (p.hbar - first.hbar).abs() > 1e-14 * first.hbar {
                return Err(Error::Shape("hbar mismatch in product".into()));
            }
        }
        let m: usize = parts.iter().map(|p| p.num_modes()).sum();
        let mut r = DVector::zeros(2 * m);
        let mut v = DMatrix::zeros(2 * m, 2 * m);
        let mut off = 0;
        for p in parts {
            let pm = p.num_modes();
            // global index of local quadrature index
            let map = |i: usize| if i < pm { off + i } else { m + off + (i - pm) };
            for i in 0..2 * pm {
                r[map(i)] = p.r[i];
                for j in 0..2 * pm {
                    v[(map(i), map(j))] = p.v[(i, j)];
                }
            }
            off += pm;
        }
        Ok(Self { hbar: first.hbar, r, v })
    }

    /// `modes` identical copies of a single-mode state.
    pub fn repeated(single: &GaussianState, modes: usize) -> Result<Self> {
        Self::product(&vec![single.clone(); modes])
    }

    /// Pure-loss channel with loss parameter η (transmission 1 − η).
    pub fn loss_channel(&self, eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::Domain(format!("loss parameter must lie in [0, 1], got {eta}")));
        }
        let n = self.r.len();
        let v = &self.v * (1.0 - eta) + DMatrix::identity(n, n) * (eta * 0.5 * self.hbar);
        let r = &self.r * (1.0 - eta).sqrt();
        Ok(Self { hbar: self.hbar, r, v })
    }

    /// Same state expressed with a different ħ convention (r ∝ √ħ, V ∝ ħ).
    pub fn with_hbar(&self, hbar: f64) -> Result<Self> {
        let k = hbar / self.hbar;
        Self::new(hbar, &self.r * k.sqrt(), &self.v * k)
    }

    /// Complex displacement amplitudes `β_i = (q_i + i p_i)/√(2ħ)`.
    pub fn displacement(&self) -> Vec<Complex64> {
        let m = self.num_modes();
        let k = 1.0 / (2.0 * self.hbar).sqrt();
        (0..m)
            .map(|i| Complex64::new(self.r[i] * k, self.r[m + i] * k))
            .collect()
    }
}

fn check_nbar(nbar: f64) -> Result<()> {
    if nbar >= 0.0 && nbar.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("mean photon number must be >= 0, got {nbar}")))
    }
}

/// A Gaussian state certified pure, usable as a ket.
#[derive(Debug, Clone, PartialEq)]
pub struct PureGaussianKet {
    state: GaussianState,
}

impl PureGaussianKet {
    pub fn new(state: GaussianState) -> Result<Self> {
        let rep = state.validate();
        if !rep.is_valid() {
            return Err(Error::Domain("ket covariance fails validation".into()));
        }
        if rep.purity_defect.abs() > PURITY_TOL {
            return Err(Error::Domain(format!(
                "state is not pure: det((2/hbar)V) - 1 = {:.3e}",
                rep.purity_defect
            )));
        }
        Ok(Self { state })
    }

    pub fn vacuum(modes: usize, hbar: f64) -> Self {
        Self { state: GaussianState::vacuum(modes, hbar) }
    }

    pub fn coherent(alpha: Complex64, hbar: f64) -> Self {
        Self { state: GaussianState::coherent(alpha, hbar) }
    }

    pub fn state(&self) -> &GaussianState {
        &self.state
    }

    pub fn into_state(self) -> GaussianState {
        self.state
    }
}

impl AsRef<GaussianState> for PureGaussianKet {
    fn as_ref(&self) -> &GaussianState {
        &self.state
    }
}

/// Named single-mode state families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateKind {
    Vacuum,
    Coherent { alpha: Complex64 },
    SqueezedVacuum { s: f64 },
    Thermal { nbar: f64 },
    Squashed { nbar: f64 },
}

impl StateKind {
    /// Parses a family name with its positional parameters.
    pub fn from_name(name: &str, params: &[f64]) -> Result<Self> {
        let want = |n: usize| -> Result<()> {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::Usage(format!(
                    "state kind '{name}' takes {n} parameter(s), got {}",
                    params.len()
                )))
            }
        };
        Ok(match name {
            "vacuum" => {
                want(0)?;
                Self::Vacuum
            }
            "coherent" => {
                want(2)?;
                Self::Coherent { alpha: Complex64::new(params[0], params[1]) }
            }
            "squeezed" | "squeezed_vacuum" => {
                want(1)?;
                Self::SqueezedVacuum { s: params[0] }
            }
            "thermal" => {
                want(1)?;
                Self::Thermal { nbar: params[0] }
            }
            "squashed" => {
                want(1)?;
                Self::Squashed { nbar: params[0] }
            }
            other => return Err(Error::Usage(format!("unknown state kind '{other}'"))),
        })
    }
}

/// Builds the `modes`-fold product of a single-mode family member.
pub fn make_state(kind: StateKind, modes: usize, hbar: f64) -> Result<GaussianState> {
    if modes == 0 {
        return Err(Error::Shape("at least one mode is required".into()));
    }
    let single = match kind {
        StateKind::Vacuum => GaussianState::vacuum(1, hbar),
        StateKind::Coherent { alpha } => GaussianState::coherent(alpha, hbar),
        StateKind::SqueezedVacuum { s } => GaussianState::squeezed_vacuum(s, hbar),
        StateKind::Thermal { nbar } => GaussianState::thermal(nbar, hbar)?,
        StateKind::Squashed { nbar } => GaussianState::squashed(nbar, hbar)?,
    };
    GaussianState::repeated(&single, modes)
}
