//! Superpositions and operators built from pure Gaussian kets:
//! `|ψ⟩ = Σ a_j |g_j⟩`, `ρ = Σ b_{jk} |f_j⟩⟨f_k|`, and mixtures of Gaussian products
//! `ρ = Σ b_k ν_k`. Includes the multi-component cat family and its lossy images.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::bargmann::{overlap_matrix, pure_overlap};
use crate::error::{Error, Result};
use crate::gaussian::{GaussianState, PureGaussianKet};
use crate::linalg::max_abs_c;

pub const NORM_TOL: f64 = 1e-8;
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const MIN_PAIR_OVERLAP: f64 = 1e-12;

fn check_frames(kets: &[PureGaussianKet]) -> Result<()> {
    let first = kets.first().ok_or_else(|| Error::Shape("linear combination needs at least one ket".into()))?;
    for k in &kets[1..] {
        first.state().same_frame(k.state())?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct LinearCombinationKet {
    coeffs: DVector<Complex64>,
    kets: Vec<PureGaussianKet>,
}

impl LinearCombinationKet {
    /// Requires `Σ a_j* a_k ⟨g_j|g_k⟩ = 1` within [`NORM_TOL`].
    pub fn new(coeffs: DVector<Complex64>, kets: Vec<PureGaussianKet>) -> Result<Self> {
        let out = Self::unnormalized(coeffs, kets)?;
        let n = out.norm_sqr()?;
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::Domain(format!("linear combination has squared norm {n:.12}, expected 1")));
        }
        Ok(out)
    }

    /// Rescales the coefficients to unit norm.
    pub fn normalized(coeffs: DVector<Complex64>, kets: Vec<PureGaussianKet>) -> Result<Self> {
        let mut out = Self::unnormalized(coeffs, kets)?;
        let n = out.norm_sqr()?;
        if n <= 0.0 {
            return Err(Error::Domain("linear combination has zero norm".into()));
        }
        out.coeffs /= Complex64::new(n.sqrt(), 0.0);
        Ok(out)
    }

    fn unnormalized(coeffs: DVector<Complex64>, kets: Vec<PureGaussianKet>) -> Result<Self> {
        if coeffs.len() != kets.len() {
            return Err(Error::Shape(format!("{} coefficients for {} kets", coeffs.len(), kets.len())));
        }
        check_frames(&kets)?;
        Ok(Self { coeffs, kets })
    }

    pub fn from_gaussian(ket: PureGaussianKet) -> Self {
        Self { coeffs: DVector::from_element(1, Complex64::new(1.0, 0.0)), kets: vec![ket] }
    }

    pub fn coeffs(&self) -> &DVector<Complex64> {
        &self.coeffs
    }

    pub fn kets(&self) -> &[PureGaussianKet] {
        &self.kets
    }

    pub fn num_modes(&self) -> usize {
        self.kets[0].state().num_modes()
    }

    pub fn hbar(&self) -> f64 {
        self.kets[0].state().hbar()
    }

    pub fn norm_sqr(&self) -> Result<f64> {
        let g = overlap_matrix(&self.kets, &self.kets)?;
        Ok((self.coeffs.adjoint() * g * &self.coeffs)[(0, 0)].re)
    }

    /// `|ψ⟩⟨ψ|` as an operator with `b = a a†`.
    pub fn projector(&self) -> LinearCombinationOperator {
        LinearCombinationOperator {
            coeffs: &self.coeffs * self.coeffs.adjoint(),
            kets: self.kets.clone(),
            kind: OperatorKind::State,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    /// Unit trace.
    State,
    /// Zero trace, e.g. a difference of two states.
    Difference,
}

#[derive(Debug, Clone)]
pub struct LinearCombinationOperator {
    coeffs: DMatrix<Complex64>,
    kets: Vec<PureGaussianKet>,
    kind: OperatorKind,
}

impl LinearCombinationOperator {
    /// A density operator: Hermitian `b` and unit trace.
    pub fn new_state(coeffs: DMatrix<Complex64>, kets: Vec<PureGaussianKet>) -> Result<Self> {
        Self::checked(coeffs, kets, OperatorKind::State)
    }

    /// A traceless Hermitian operator.
    pub fn new_difference(coeffs: DMatrix<Complex64>, kets: Vec<PureGaussianKet>) -> Result<Self> {
        Self::checked(coeffs, kets, OperatorKind::Difference)
    }

    fn checked(coeffs: DMatrix<Complex64>, kets: Vec<PureGaussianKet>, kind: OperatorKind) -> Result<Self> {
        if coeffs.nrows() != kets.len() || coeffs.ncols() != kets.len() {
            return Err(Error::Shape(format!(
                "{}x{} coefficient matrix for {} kets",
                coeffs.nrows(),
                coeffs.ncols(),
                kets.len()
            )));
        }
        check_frames(&kets)?;
        let herm = max_abs_c(&(&coeffs - coeffs.adjoint()));
        if herm > HERMITIAN_TOL * max_abs_c(&coeffs).max(1.0) {
            return Err(Error::Domain(format!("coefficient matrix is not Hermitian (residual {herm:.3e})")));
        }
        let op = Self { coeffs, kets, kind };
        let tr = op.trace()?;
        let want = if kind == OperatorKind::State { 1.0 } else { 0.0 };
        if (tr - want).norm() > NORM_TOL {
            return Err(Error::Domain(format!("operator trace is {tr:.12}, expected {want}")));
        }
        Ok(op)
    }

    pub fn coeffs(&self) -> &DMatrix<Complex64> {
        &self.coeffs
    }

    pub fn kets(&self) -> &[PureGaussianKet] {
        &self.kets
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn num_modes(&self) -> usize {
        self.kets[0].state().num_modes()
    }

    pub fn hbar(&self) -> f64 {
        self.kets[0].state().hbar()
    }

    /// `Σ b_{jk} ⟨f_k|f_j⟩`.
    pub fn trace(&self) -> Result<Complex64> {
        let f = overlap_matrix(&self.kets, &self.kets)?;
        Ok((&self.coeffs * f).trace())
    }

    /// `self − other` as a traceless operator over the union of both ket lists.
    pub fn difference(&self, other: &LinearCombinationOperator) -> Result<Self> {
        self.kets[0].state().same_frame(other.kets[0].state())?;
        let (p, q) = (self.kets.len(), other.kets.len());
        let same_kets = p == q
            && self.kets.iter().zip(&other.kets).all(|(a, b)| {
                a.state().means() == b.state().means() && a.state().cov() == b.state().cov()
            });
        let (coeffs, kets) = if same_kets {
            (&self.coeffs - &other.coeffs, self.kets.clone())
        } else {
            let mut c = DMatrix::zeros(p + q, p + q);
            c.view_mut((0, 0), (p, p)).copy_from(&self.coeffs);
            c.view_mut((p, p), (q, q)).copy_from(&(-&other.coeffs));
            (c, self.kets.iter().chain(&other.kets).cloned().collect())
        };
        Ok(Self { coeffs, kets, kind: OperatorKind::Difference })
    }
}

/// Writes `|A⟩⟨B| = s · |A⟩⟨A| · |B⟩⟨B|` with `s = 1/⟨A|B⟩`.
pub fn outer_to_product(a: &PureGaussianKet, b: &PureGaussianKet) -> Result<(Complex64, [GaussianState; 2])> {
    let ov = pure_overlap(a, b)?;
    if ov.norm() < MIN_PAIR_OVERLAP {
        return Err(Error::DegeneratePair { j: 0, k: 1, modulus: ov.norm() });
    }
    Ok((ov.inv(), [a.state().clone(), b.state().clone()]))
}

/// `ρ = Σ_k b_k ν_k`, each `ν_k` an ordered operator product of Gaussian states.
#[derive(Debug, Clone)]
pub struct ProductMixture {
    pub coeffs: Vec<Complex64>,
    pub factors: Vec<Vec<GaussianState>>,
}

impl ProductMixture {
    pub fn new(coeffs: Vec<Complex64>, factors: Vec<Vec<GaussianState>>) -> Result<Self> {
        if coeffs.len() != factors.len() || factors.is_empty() {
            return Err(Error::Shape(format!("{} coefficients for {} products", coeffs.len(), factors.len())));
        }
        let first = factors[0]
            .first()
            .ok_or_else(|| Error::Shape("empty Gaussian product".into()))?
            .clone();
        for f in &factors {
            if f.is_empty() {
                return Err(Error::Shape("empty Gaussian product".into()));
            }
            for s in f {
                first.same_frame(s)?;
            }
        }
        Ok(Self { coeffs, factors })
    }

    pub fn from_gaussian(state: GaussianState) -> Self {
        Self { coeffs: vec![Complex64::new(1.0, 0.0)], factors: vec![vec![state]] }
    }

    /// Rewrites every off-diagonal term `b_{jk}|f_j⟩⟨f_k|` through [`outer_to_product`].
    pub fn from_operator(op: &LinearCombinationOperator) -> Result<Self> {
        let kets = op.kets();
        let b = op.coeffs();
        let mut coeffs = Vec::new();
        let mut factors = Vec::new();
        for j in 0..kets.len() {
            for k in 0..kets.len() {
                if b[(j, k)] == Complex64::new(0.0, 0.0) {
                    continue;
                }
                if j == k {
                    coeffs.push(b[(j, j)]);
                    factors.push(vec![kets[j].state().clone()]);
                } else {
                    let (scale, pair) = outer_to_product(&kets[j], &kets[k]).map_err(|e| match e {
                        Error::DegeneratePair { modulus, .. } => Error::DegeneratePair { j, k, modulus },
                        other => other,
                    })?;
                    coeffs.push(b[(j, k)] * scale);
                    factors.push(pair.to_vec());
                }
            }
        }
        Self::new(coeffs, factors)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self, j: usize) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd if j.is_multiple_of(2) => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

fn cat_amplitudes(alpha: Complex64, p: usize) -> Vec<Complex64> {
    (0..p)
        .map(|j| alpha * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / p as f64))
        .collect()
}

/// `N = Σ_{jk} (±1)^{j+k} ⟨α_j|α_k⟩` for the p-component cat.
pub fn cat_normalization(alpha: Complex64, p: usize, parity: Parity) -> f64 {
    let amps = cat_amplitudes(alpha, p);
    let mut n = Complex64::new(0.0, 0.0);
    for (j, aj) in amps.iter().enumerate() {
        for (k, ak) in amps.iter().enumerate() {
            let ov = (-0.5 * (aj.norm_sqr() + ak.norm_sqr()) + aj.conj() * ak).exp();
            n += ov * parity.sign(j) * parity.sign(k);
        }
    }
    n.re
}

fn check_cat(alpha: Complex64, p: usize, parity: Parity) -> Result<f64> {
    if p == 0 {
        return Err(Error::Domain("cat state needs at least one component".into()));
    }
    let n = cat_normalization(alpha, p, parity);
    if n <= 1e-14 {
        return Err(Error::Domain(format!("cat state with p={p}, α={alpha} and {parity:?} parity vanishes")));
    }
    Ok(n)
}

/// `N^{-1/2} Σ_j (±1)^j |α e^{2πij/p}⟩`.
pub fn cat_ket(alpha: Complex64, p: usize, parity: Parity, hbar: f64) -> Result<LinearCombinationKet> {
    let n = check_cat(alpha, p, parity)?;
    let coeffs = DVector::from_fn(p, |j, _| Complex64::new(parity.sign(j) / n.sqrt(), 0.0));
    let kets = cat_amplitudes(alpha, p).into_iter().map(|a| PureGaussianKet::coherent(a, hbar)).collect();
    LinearCombinationKet::new(coeffs, kets)
}

/// Image of the cat under the loss channel with loss parameter η:
/// `Σ b_{jk} |√(1−η) α_j⟩⟨√(1−η) α_k|` with
/// `b_{jk} = (±1)^{j+k} e^{−η|α|²} exp(η|α|² e^{2πi(j−k)/p}) / N`.
pub fn lossy_cat(alpha: Complex64, p: usize, parity: Parity, eta: f64, hbar: f64) -> Result<LinearCombinationOperator> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Domain(format!("loss parameter {eta} outside [0, 1]")));
    }
    let n = check_cat(alpha, p, parity)?;
    let a2 = alpha.norm_sqr();
    let coeffs = DMatrix::from_fn(p, p, |j, k| {
        let phase = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (j as f64 - k as f64) / p as f64);
        (phase * eta * a2).exp() * (-eta * a2).exp() * parity.sign(j) * parity.sign(k) / n
    });
    let t = (1.0 - eta).sqrt();
    let kets = cat_amplitudes(alpha, p)
        .into_iter()
        .map(|a| PureGaussianKet::coherent(a * t, hbar))
        .collect();
    LinearCombinationOperator::new_state(coeffs, kets)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn two_component_normalisation_closed_form() {
        for a in [0.5, 1.0, 2.0] {
            let even = cat_normalization(c(a, 0.0), 2, Parity::Even);
            let odd = cat_normalization(c(a, 0.0), 2, Parity::Odd);
            assert!((even - 2.0 * (1.0 + (-2.0 * a * a).exp())).abs() < 1e-13);
            assert!((odd - 2.0 * (1.0 - (-2.0 * a * a).exp())).abs() < 1e-13);
        }
    }

    #[test]
    fn cat_kets_are_normalised() {
        for p in [2, 4, 6, 8] {
            for parity in [Parity::Even, Parity::Odd] {
                let k = cat_ket(c(2.0, 0.0), p, parity, 2.0).unwrap();
                assert!((k.norm_sqr().unwrap() - 1.0).abs() < 1e-12);
            }
        }
        assert!(cat_ket(c(0.0, 0.0), 2, Parity::Odd, 2.0).is_err());
    }

    #[test]
    fn lossless_cat_operator_is_the_projector() {
        let ket = cat_ket(c(2.0, 0.0), 4, Parity::Odd, 2.0).unwrap();
        let op = lossy_cat(c(2.0, 0.0), 4, Parity::Odd, 0.0, 2.0).unwrap();
        assert!(max_abs_c(&(op.coeffs() - ket.projector().coeffs())) < 1e-14);
    }

    #[test]
    fn lossy_cats_have_unit_trace() {
        for eta in [0.1, 0.5, 0.9, 1.0] {
            let op = lossy_cat(c(2.0, 0.0), 2, Parity::Even, eta, 2.0).unwrap();
            assert!((op.trace().unwrap() - 1.0).norm() < 1e-10);
        }
        assert!(lossy_cat(c(2.0, 0.0), 2, Parity::Even, 1.5, 2.0).is_err());
    }

    #[test]
    fn differences_are_traceless() {
        let plus = lossy_cat(c(2.0, 0.0), 2, Parity::Even, 0.3, 2.0).unwrap();
        let minus = lossy_cat(c(2.0, 0.0), 2, Parity::Odd, 0.3, 2.0).unwrap();
        let d = plus.difference(&minus).unwrap();
        assert_eq!(d.kets().len(), 2);
        assert!(d.trace().unwrap().norm() < 1e-10);
        let pure = cat_ket(c(2.0, 0.0), 2, Parity::Even, 2.0).unwrap().projector();
        let d = pure.difference(&plus).unwrap();
        assert_eq!(d.kets().len(), 4);
        assert!(d.trace().unwrap().norm() < 1e-10);
    }

    #[test]
    fn validation_errors() {
        let k = vec![PureGaussianKet::vacuum(1, 2.0)];
        assert!(LinearCombinationKet::new(DVector::from_element(1, c(2.0, 0.0)), k.clone()).is_err());
        assert!(LinearCombinationKet::new(DVector::from_element(2, c(1.0, 0.0)), k.clone()).is_err());
        let nh = DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.0), c(0.0, 0.0), c(0.5, 0.0)]);
        let two = vec![PureGaussianKet::vacuum(1, 2.0), PureGaussianKet::coherent(c(1.0, 0.0), 2.0)];
        assert!(LinearCombinationOperator::new_state(nh, two).is_err());
        let mixed = vec![PureGaussianKet::vacuum(1, 2.0), PureGaussianKet::vacuum(2, 2.0)];
        assert!(LinearCombinationKet::normalized(DVector::from_element(2, c(1.0, 0.0)), mixed).is_err());
    }

    #[test]
    fn outer_product_scale() {
        let a = PureGaussianKet::coherent(c(2.0, 0.0), 2.0);
        let b = PureGaussianKet::coherent(c(-2.0, 0.0), 2.0);
        let (s, _) = outer_to_product(&a, &b).unwrap();
        assert!((s.norm() - 8f64.exp()).abs() < 1e-8 * 8f64.exp());
        let (s, f) = outer_to_product(&a, &a).unwrap();
        assert!((s - 1.0).norm() < 1e-14);
        assert_eq!(f[0].means(), f[1].means());
        let far = PureGaussianKet::coherent(c(-10.0, 0.0), 2.0);
        assert!(matches!(outer_to_product(&a, &far), Err(Error::DegeneratePair { .. })));
    }

    #[test]
    fn product_mixture_term_count() {
        let op = lossy_cat(c(1.0, 0.0), 2, Parity::Even, 0.2, 2.0).unwrap();
        let pm = ProductMixture::from_operator(&op).unwrap();
        assert_eq!(pm.len(), 4);
        assert_eq!(pm.factors.iter().filter(|f| f.len() == 2).count(), 2);
    }
}
