//! Brute-force reference: truncated Fock-basis matrices of single-mode (and
//! two-mode product) states, exact trace distances by dense diagonalisation, and
//! product traces.
//!
//! Gaussian unitaries are built in a padded working space (twice the cutoff) and
//! truncated afterwards. Displacement and squeezing generators are conjugated by
//! diagonal phases into `i·t·(a + a†)` and `i·t·(a² + a†²)`, whose real symmetric
//! eigendecompositions are cached per working dimension.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::{GaussianState, PureGaussianKet};
use crate::lincomb::{LinearCombinationKet, LinearCombinationOperator};
use crate::linalg::{self, max_abs_c};
use crate::symplectic::williamson;

pub const DEFAULT_CUTOFF: usize = 100;

/// Trace deficit above which a rendered operator is flagged as under-resolved.
pub const CUTOFF_WARNING: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct FockOperator {
    pub cutoff: usize,
    pub modes: usize,
    pub matrix: DMatrix<Complex64>,
    /// `|1 − Tr ρ|` for density matrices; zero for operators built from exact data.
    pub trace_deficit: f64,
}

impl FockOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cutoff_insufficient(&self) -> bool {
        self.trace_deficit > CUTOFF_WARNING
    }

    pub fn hermiticity_residual(&self) -> f64 {
        max_abs_c(&(&self.matrix - self.matrix.adjoint()))
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.matrix)
    }

    pub fn sub(&self, other: &FockOperator) -> Result<FockOperator> {
        self.check_same(other)?;
        Ok(FockOperator {
            cutoff: self.cutoff,
            modes: self.modes,
            matrix: &self.matrix - &other.matrix,
            trace_deficit: self.trace_deficit + other.trace_deficit,
        })
    }

    /// `⟨v|A|v⟩`
    pub fn expectation(&self, v: &DVector<Complex64>) -> Complex64 {
        (v.adjoint() * &self.matrix * v)[(0, 0)]
    }

    fn check_same(&self, other: &FockOperator) -> Result<()> {
        if self.dim() != other.dim() || self.modes != other.modes {
            return Err(Error::Shape(format!(
                "Fock operators differ in shape: {} (M={}) vs {} (M={})",
                self.dim(),
                self.modes,
                other.dim(),
                other.modes
            )));
        }
        Ok(())
    }

    /// Kronecker product; mode order is `self` then `other`.
    pub fn tensor(&self, other: &FockOperator) -> FockOperator {
        FockOperator {
            cutoff: self.cutoff,
            modes: self.modes + other.modes,
            matrix: self.matrix.kronecker(&other.matrix),
            trace_deficit: self.trace_deficit + other.trace_deficit,
        }
    }
}

/// Truncated annihilation and creation operators, `a|n⟩ = √n|n−1⟩`.
pub fn ladder_matrices(cutoff: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut a = DMatrix::zeros(cutoff, cutoff);
    for n in 1..cutoff {
        a[(n - 1, n)] = (n as f64).sqrt();
    }
    let ad = a.transpose();
    (a, ad)
}

struct LadderSpectra {
    x_vals: DVector<f64>,
    x_vecs: DMatrix<f64>,
    y_vals: DVector<f64>,
    y_vecs: DMatrix<f64>,
}

fn spectra(dim: usize) -> Arc<LadderSpectra> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<LadderSpectra>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(s) = cache.lock().unwrap().get(&dim) {
        return s.clone();
    }
    let (a, ad) = ladder_matrices(dim);
    let x = &a + &ad;
    let y = &a * &a + &ad * &ad;
    let (x_vals, x_vecs) = linalg::sym_eigen_sorted(&x);
    let (y_vals, y_vecs) = linalg::sym_eigen_sorted(&y);
    let s = Arc::new(LadderSpectra { x_vals, x_vecs, y_vals, y_vecs });
    cache.lock().unwrap().insert(dim, s.clone());
    s
}

fn work_dim(cutoff: usize) -> usize {
    (2 * cutoff).max(cutoff + 60)
}

/// `exp(i t H)` for real symmetric `H = V diag(λ) Vᵀ`.
fn exp_i(vals: &DVector<f64>, vecs: &DMatrix<f64>, t: f64) -> DMatrix<Complex64> {
    let n = vals.len();
    let left = DMatrix::from_fn(n, n, |i, k| Complex64::from_polar(vecs[(i, k)], t * vals[k]));
    left * linalg::to_complex(&vecs.transpose())
}

/// Conjugation `P_θ A P_θ†` with `P_θ = diag(e^{iθn})`.
fn phase_conjugate(m: &mut DMatrix<Complex64>, theta: f64) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] *= Complex64::from_polar(1.0, theta * (i as f64 - j as f64));
        }
    }
}

/// `D(β) = exp(β a† − β̄ a)` in dimension `dim`.
pub fn displacement_matrix(beta: Complex64, dim: usize) -> DMatrix<Complex64> {
    if beta.norm() == 0.0 {
        return DMatrix::identity(dim, dim);
    }
    let sp = spectra(dim);
    let mut d = exp_i(&sp.x_vals, &sp.x_vecs, beta.norm());
    phase_conjugate(&mut d, beta.arg() - std::f64::consts::FRAC_PI_2);
    d
}

/// `S(ζ) = exp(½(ζ̄ a² − ζ a†²))`; real ζ = r maps (q, p) → (e^{−r} q, e^{r} p).
pub fn squeeze_matrix(zeta: Complex64, dim: usize) -> DMatrix<Complex64> {
    if zeta.norm() == 0.0 {
        return DMatrix::identity(dim, dim);
    }
    let sp = spectra(dim);
    let mut s = exp_i(&sp.y_vals, &sp.y_vecs, 0.5 * zeta.norm());
    phase_conjugate(&mut s, 0.5 * zeta.arg() + std::f64::consts::FRAC_PI_4);
    s
}

/// `exp(iθ n̂)`, the phase-space rotation by θ.
pub fn rotation_matrix(theta: f64, dim: usize) -> DMatrix<Complex64> {
    DMatrix::from_diagonal(&DVector::from_fn(dim, |n, _| Complex64::from_polar(1.0, theta * n as f64)))
}

fn rotation_angle(m: &DMatrix<f64>) -> f64 {
    m[(1, 0)].atan2(m[(0, 0)])
}

/// Gaussian unitary `D(β)·U_S` (columns are images of Fock states) in dimension `dim`,
/// plus the thermal occupation from the Williamson form.
fn gaussian_unitary(state: &GaussianState, dim: usize) -> Result<(DMatrix<Complex64>, f64)> {
    let w = williamson(state)?;
    let svd = w.s.clone().svd(true, true);
    let mut u = svd.u.unwrap();
    let mut vt = svd.v_t.unwrap();
    let sig = svd.singular_values;
    if u.determinant() < 0.0 {
        u.column_mut(0).neg_mut();
        vt.row_mut(0).neg_mut();
    }
    // S = R(θ₁) diag(σ₁, σ₂) R(θ₂) with diag(σ₁, σ₂) = diag(e^{−r}, e^{r})
    let r = -sig[0].ln();
    let th1 = rotation_angle(&u);
    let th2 = rotation_angle(&vt);
    let beta = state.displacement()[0];

    let unitary = displacement_matrix(beta, dim)
        * rotation_matrix(th1, dim)
        * squeeze_matrix(Complex64::new(r, 0.0), dim)
        * rotation_matrix(th2, dim);
    Ok((unitary, w.nbar[0]))
}

fn split_modes(state: &GaussianState) -> Result<Vec<GaussianState>> {
    let m = state.num_modes();
    let v = state.cov();
    let idx = |k: usize| [k, m + k];
    for a in 0..m {
        for b in 0..m {
            if a == b {
                continue;
            }
            for &i in &idx(a) {
                for &j in &idx(b) {
                    if v[(i, j)].abs() > 1e-14 * linalg::max_abs(v) {
                        return Err(Error::Domain(
                            "Fock oracle only renders uncorrelated (product) multimode states".into(),
                        ));
                    }
                }
            }
        }
    }
    (0..m)
        .map(|k| {
            let r = DVector::from_vec(vec![state.means()[k], state.means()[m + k]]);
            let cv = DMatrix::from_fn(2, 2, |i, j| v[(idx(k)[i], idx(k)[j])]);
            GaussianState::new(state.hbar(), r, cv)
        })
        .collect()
}

/// Density matrix of a Gaussian state at the given cutoff (M = 1, or M = 2 for
/// product states).
pub fn gaussian_to_fock(state: &GaussianState, cutoff: usize) -> Result<FockOperator> {
    if cutoff < 2 {
        return Err(Error::Domain("Fock cutoff must be at least 2".into()));
    }
    match state.num_modes() {
        1 => single_mode_density(state, cutoff),
        2 => {
            let parts = split_modes(state)?;
            Ok(single_mode_density(&parts[0], cutoff)?.tensor(&single_mode_density(&parts[1], cutoff)?))
        }
        m => Err(Error::Domain(format!("Fock oracle supports at most 2 modes, got {m}"))),
    }
}

fn single_mode_density(state: &GaussianState, cutoff: usize) -> Result<FockOperator> {
    let dim = work_dim(cutoff);
    let (u, nbar) = gaussian_unitary(state, dim)?;
    let weights: Vec<f64> = (0..dim)
        .map(|n| (nbar / (1.0 + nbar)).powi(n as i32) / (1.0 + nbar))
        .collect();
    let cols: Vec<usize> = (0..dim).filter(|&n| weights[n] > 1e-300).collect();
    let g = DMatrix::from_fn(cutoff, cols.len(), |i, k| u[(i, cols[k])] * weights[cols[k]].sqrt());
    let mut rho = &g * g.adjoint();
    rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    let trace_deficit = (1.0 - rho.trace().re).abs();
    Ok(FockOperator { cutoff, modes: 1, matrix: rho, trace_deficit })
}

/// Fock amplitudes of a pure single-mode Gaussian ket, phase fixed by `⟨0|ψ⟩ ≥ 0`.
pub fn ket_to_fock(ket: &PureGaussianKet, cutoff: usize) -> Result<DVector<Complex64>> {
    let st = ket.state();
    if st.num_modes() != 1 {
        return Err(Error::Domain("ket rendering supports single-mode kets only".into()));
    }
    let h = 0.5 * st.hbar();
    let coherent = linalg::max_abs(&(st.cov() - DMatrix::identity(2, 2) * h)) <= 1e-14 * h;
    if coherent {
        return Ok(coherent_amplitudes(st.displacement()[0], cutoff));
    }
    let dim = work_dim(cutoff);
    let (u, _) = gaussian_unitary(st, dim)?;
    let mut v = DVector::from_fn(cutoff, |i, _| u[(i, 0)]);
    let a0 = v[0];
    if a0.norm() < 1e-150 {
        return Err(Error::Gauge("ket has no vacuum component".into()));
    }
    let phase = a0.conj() / a0.norm();
    v *= phase;
    Ok(v)
}

/// `⟨n|α⟩ = e^{−|α|²/2} αⁿ/√n!`
pub fn coherent_amplitudes(alpha: Complex64, cutoff: usize) -> DVector<Complex64> {
    let mut v = DVector::zeros(cutoff);
    v[0] = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 1..cutoff {
        v[n] = v[n - 1] * alpha / (n as f64).sqrt();
    }
    v
}

pub fn lincomb_ket_to_fock(psi: &LinearCombinationKet, cutoff: usize) -> Result<DVector<Complex64>> {
    let mut out = DVector::zeros(cutoff);
    for (a, g) in psi.coeffs().iter().zip(psi.kets()) {
        out += ket_to_fock(g, cutoff)? * *a;
    }
    Ok(out)
}

/// Renders `Σ b_{jk}|f_j⟩⟨f_k|`; Hermiticity is enforced by symmetrisation.
pub fn lincomb_to_fock(rho: &LinearCombinationOperator, cutoff: usize) -> Result<FockOperator> {
    let vecs = rho
        .kets()
        .iter()
        .map(|k| ket_to_fock(k, cutoff))
        .collect::<Result<Vec<_>>>()?;
    let b = rho.coeffs();
    let q = vecs.len();
    let f = DMatrix::from_fn(cutoff, q, |i, j| vecs[j][i]);
    let m = &f * b * f.adjoint();
    let residual = max_abs_c(&(&m - m.adjoint()));
    if residual > 1e-8 {
        return Err(Error::Domain(format!("rendered operator is not Hermitian (residual {residual:.3e})")));
    }
    let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let trace_deficit = (rho.trace()? - m.trace()).norm();
    Ok(FockOperator { cutoff, modes: 1, matrix: m, trace_deficit })
}

pub fn projector(v: &DVector<Complex64>) -> FockOperator {
    let cutoff = v.len();
    let matrix = v * v.adjoint();
    let trace_deficit = (1.0 - matrix.trace().re).abs();
    FockOperator { cutoff, modes: 1, matrix, trace_deficit }
}

/// `½ Σ |eig(A − B)|`.
pub fn trace_distance_exact(a: &FockOperator, b: &FockOperator) -> Result<f64> {
    let d = a.sub(b)?;
    Ok(0.5 * d.eigenvalues().iter().map(|x| x.abs()).sum::<f64>())
}

/// `Tr(A₁A₂⋯A_m)`.
pub fn product_trace(ops: &[FockOperator]) -> Result<Complex64> {
    let first = ops.first().ok_or_else(|| Error::Shape("product trace of no operators".into()))?;
    let mut acc = first.matrix.clone();
    for op in &ops[1..] {
        first.check_same(op)?;
        acc *= &op.matrix;
    }
    Ok(acc.trace())
}

/// First moments and covariance matrix of a single-mode operator, read off
/// through quadrature expectations.
pub fn moments_from_fock(op: &FockOperator, hbar: f64) -> (DVector<f64>, DMatrix<f64>) {
    let (a, ad) = ladder_matrices(op.dim());
    let k = (0.5 * hbar).sqrt();
    let q = linalg::to_complex(&(&a + &ad)) * Complex64::new(k, 0.0);
    let p = linalg::to_complex(&(&a - &ad)) * Complex64::new(0.0, -k);
    let ex = |m: &DMatrix<Complex64>| (&op.matrix * m).trace().re;
    let (mq, mp) = (ex(&q), ex(&p));
    let vqq = ex(&(&q * &q)) - mq * mq;
    let vpp = ex(&(&p * &p)) - mp * mp;
    let vqp = 0.5 * ex(&(&q * &p + &p * &q)) - mq * mp;
    (
        DVector::from_vec(vec![mq, mp]),
        DMatrix::from_row_slice(2, 2, &[vqq, vqp, vqp, vpp]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::StateSampler;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn ladder_basics() {
        let (a, ad) = ladder_matrices(2);
        assert_eq!(a, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        let (a, ad2) = ladder_matrices(6);
        let n = &ad2 * &a;
        for i in 0..6 {
            assert!((n[(i, i)] - i as f64).abs() < 1e-14);
        }
        let comm = &a * &ad2 - &ad2 * &a;
        for i in 0..5 {
            for j in 0..5 {
                assert!((comm[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        assert_eq!(ad.transpose(), ladder_matrices(2).0);
    }

    #[test]
    fn vacuum_and_thermal_diagonals() {
        let v = gaussian_to_fock(&GaussianState::vacuum(1, 2.0), 20).unwrap();
        assert!((v.matrix[(0, 0)] - 1.0).norm() < 1e-12);
        assert!(v.matrix.iter().skip(1).all(|x| x.norm() < 1e-12));
        let t = gaussian_to_fock(&GaussianState::thermal(1.0, 2.0).unwrap(), 30).unwrap();
        for n in 0..10 {
            assert!((t.matrix[(n, n)].re - 0.5f64.powi(n as i32 + 1)).abs() < 1e-12);
        }
    }

    #[test]
    fn coherent_routes_agree() {
        let alpha = c(0.6, -0.8);
        let st = GaussianState::coherent(alpha, 2.0);
        let rho = gaussian_to_fock(&st, 60).unwrap();
        let proj = projector(&coherent_amplitudes(alpha, 60));
        assert!(max_abs_c(&(&rho.matrix - &proj.matrix)) < 1e-10);
        assert!((rho.matrix[(1, 0)] - alpha * (-1.0f64).exp()).norm() < 1e-10);
    }

    #[test]
    fn round_trip_moments() {
        let mut s = StateSampler::seeded_bounded(5);
        for _ in 0..10 {
            let st = s.mixed(1, 2.0);
            let op = gaussian_to_fock(&st, 100).unwrap();
            assert!(op.trace_deficit < 1e-10);
            let (r, v) = moments_from_fock(&op, 2.0);
            assert!((r - st.means()).amax() < 1e-6);
            assert!((v - st.cov()).amax() < 1e-6);
        }
    }

    #[test]
    fn rotated_squeezed_ket_round_trip() {
        let mut s = StateSampler::seeded_bounded(9);
        for _ in 0..5 {
            let ket = s.pure(1, 2.0);
            let v = ket_to_fock(&ket, 80).unwrap();
            assert!(v[0].im.abs() < 1e-14 && v[0].re > 0.0);
            let (r, cv) = moments_from_fock(&projector(&v), 2.0);
            assert!((r - ket.state().means()).amax() < 1e-6);
            assert!((cv - ket.state().cov()).amax() < 1e-6);
        }
    }

    #[test]
    fn exact_distances() {
        let vac = gaussian_to_fock(&GaussianState::vacuum(1, 2.0), 100).unwrap();
        assert!(trace_distance_exact(&vac, &vac).unwrap() < 1e-14);
        let th = gaussian_to_fock(&GaussianState::thermal(1.0, 2.0).unwrap(), 100).unwrap();
        assert!((trace_distance_exact(&vac, &th).unwrap() - 0.5).abs() < 1e-10);
        for a in [0.5, 1.0, 2.0] {
            let coh = gaussian_to_fock(&GaussianState::coherent(c(a, 0.0), 2.0), 100).unwrap();
            let want = (1.0 - (-a * a).exp()).sqrt();
            assert!((trace_distance_exact(&vac, &coh).unwrap() - want).abs() < 1e-8);
        }
    }

    #[test]
    fn product_traces() {
        let vac = gaussian_to_fock(&GaussianState::vacuum(1, 2.0), 30).unwrap();
        assert!((product_trace(&[vac.clone(), vac.clone()]).unwrap() - 1.0).norm() < 1e-14);
        let th = gaussian_to_fock(&GaussianState::thermal(0.4, 2.0).unwrap(), 100).unwrap();
        assert!((product_trace(std::slice::from_ref(&th)).unwrap().re - (1.0 - th.trace_deficit)).abs() < 1e-12);
        let small = gaussian_to_fock(&GaussianState::vacuum(1, 2.0), 10).unwrap();
        assert!(product_trace(&[vac, small]).is_err());
    }

    #[test]
    fn three_state_traces_match_invariant() {
        let mut s = StateSampler::seeded_bounded(21);
        for _ in 0..10 {
            let sts: Vec<_> = (0..3).map(|_| s.mixed(1, 2.0)).collect();
            let ops: Vec<_> = sts.iter().map(|x| gaussian_to_fock(x, 100).unwrap()).collect();
            let want = product_trace(&ops).unwrap();
            let got = crate::bargmann::multivariate_trace(&sts).unwrap();
            assert!((want - got).norm() < 1e-8, "{want} vs {got}");
        }
    }

    #[test]
    fn overlaps_match_fock_inner_products() {
        let mut s = StateSampler::seeded_bounded(33);
        for _ in 0..10 {
            let (g, f) = (s.pure(1, 2.0), s.pure(1, 2.0));
            let (vg, vf) = (ket_to_fock(&g, 100).unwrap(), ket_to_fock(&f, 100).unwrap());
            let want = vg.dotc(&vf);
            let got = crate::bargmann::pure_overlap(&g, &f).unwrap();
            assert!((want - got).norm() < 1e-8, "{want} vs {got}");
        }
    }

    #[test]
    fn cat_vectors() {
        use crate::lincomb::{cat_ket, lossy_cat, Parity};
        let even = lincomb_ket_to_fock(&cat_ket(c(2.0, 0.0), 2, Parity::Even, 2.0).unwrap(), 100).unwrap();
        assert!((even.norm() - 1.0).abs() < 1e-10);
        assert!(even.iter().skip(1).step_by(2).all(|x| x.norm() < 1e-12));
        let gone = lincomb_to_fock(&lossy_cat(c(2.0, 0.0), 2, Parity::Odd, 1.0, 2.0).unwrap(), 100).unwrap();
        let mut vac = DMatrix::zeros(100, 100);
        vac[(0, 0)] = c(1.0, 0.0);
        assert!(max_abs_c(&(&gone.matrix - vac)) < 1e-10);
    }

    #[test]
    fn lossy_cat_matches_channel_on_components() {
        use crate::lincomb::{lossy_cat, Parity};
        // the loss channel of a single coherent projector is the projector onto the shrunk state
        let op = lossy_cat(c(1.2, 0.0), 1, Parity::Even, 0.4, 2.0).unwrap();
        let rendered = lincomb_to_fock(&op, 60).unwrap();
        let direct = gaussian_to_fock(&GaussianState::coherent(c(1.2, 0.0), 2.0).loss_channel(0.4).unwrap(), 60).unwrap();
        assert!(max_abs_c(&(&rendered.matrix - &direct.matrix)) < 1e-10);
    }

    #[test]
    fn two_mode_product_state() {
        let st = GaussianState::product(&[
            GaussianState::thermal(0.5, 2.0).unwrap(),
            GaussianState::coherent(c(0.3, 0.1), 2.0),
        ])
        .unwrap();
        let op = gaussian_to_fock(&st, 30).unwrap();
        assert_eq!(op.dim(), 900);
        assert!((op.trace().re - 1.0).abs() < 1e-8);
        assert!(gaussian_to_fock(&GaussianState::vacuum(3, 2.0), 5).is_err());
    }
}
