//! Moment sequences `μ_ℓ = ⟨ψ|ρ^ℓ|ψ⟩` (or `ν_ℓ = ⟨c|(Δρ)^ℓ|c⟩`) and the Hankel
//! metrics built from them.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::bargmann::{multivariate_trace, overlap_matrix, pure_moment_invariant};
use crate::error::{Error, Result};
use crate::gaussian::{GaussianState, PureGaussianKet};
use crate::lincomb::{LinearCombinationKet, LinearCombinationOperator, ProductMixture, MIN_PAIR_OVERLAP};
use crate::linalg::{CompensatedComplexSum, CompensatedSum};

/// Default ceiling on the moment order for exponential-cost expansions.
pub const DEFAULT_MAX_EXP_ORDER: usize = 14;
pub const MAX_EXP_ORDER_ENV: &str = "TRACEDIST_MAX_EXP_STEPS";

/// Imaginary residual allowed relative to the magnitude of the summed terms.
pub const IMAG_TOL: f64 = 1e-10;

const PARTITIONS: usize = 64;

/// Relative rounding error assumed for every evaluated moment term.
pub const MOMENT_ROUNDOFF: f64 = 64.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    PureMixed,
    Lincomb,
    MixedDifference,
    ProductMixture,
}

#[derive(Debug, Clone)]
pub struct MomentSequence {
    pub values: Vec<f64>,
    pub regime: Regime,
    /// `Σ |term|` per order for expanded sums, the natural scale of each moment.
    pub magnitudes: Option<Vec<f64>>,
}

impl MomentSequence {
    pub fn new(values: Vec<f64>, regime: Regime) -> Self {
        Self { values, regime, magnitudes: None }
    }

    /// Highest order `L` present.
    pub fn max_order(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Absolute cancellation-error estimate per order, [`MOMENT_ROUNDOFF`] times
    /// `Σ |term|`. Zero for closed-form moments, which involve no expanded sum.
    pub fn error_estimate(&self) -> Vec<f64> {
        match &self.magnitudes {
            Some(mags) => mags.iter().map(|m| MOMENT_ROUNDOFF * m).collect(),
            None => vec![0.0; self.values.len()],
        }
    }
}

/// `G_{jk} = μ_{j+k}`, `G′_{jk} = μ_{j+k+1}`, both `(ℓ+1)×(ℓ+1)`.
#[derive(Debug, Clone)]
pub struct MetricPair {
    pub g: DMatrix<f64>,
    pub gp: DMatrix<f64>,
    /// Entrywise error estimate of `G`.
    pub g_error: DMatrix<f64>,
}

pub fn hankel_metrics(m: &MomentSequence, ell: usize) -> Result<MetricPair> {
    let required = 2 * ell + 2;
    if m.len() < required {
        return Err(Error::Length { required, available: m.len() });
    }
    let n = ell + 1;
    let err = m.error_estimate();
    Ok(MetricPair {
        g: DMatrix::from_fn(n, n, |j, k| m.values[j + k]),
        gp: DMatrix::from_fn(n, n, |j, k| m.values[j + k + 1]),
        g_error: DMatrix::from_fn(n, n, |j, k| err[j + k]),
    })
}

/// Ceiling from [`MAX_EXP_ORDER_ENV`] when set to an integer, else the default.
pub fn exp_order_ceiling() -> usize {
    std::env::var(MAX_EXP_ORDER_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_EXP_ORDER)
}

fn guard(order: usize, base: usize) -> Result<()> {
    let ceiling = exp_order_ceiling();
    if order > ceiling {
        return Err(Error::CostGuard { requested: order, ceiling, terms: (base as f64).powi(order as i32) });
    }
    Ok(())
}

fn realify(z: Complex64, scale: f64, what: &str, ell: usize) -> Result<f64> {
    if z.im.abs() > IMAG_TOL * scale.max(1.0) {
        return Err(Error::Degenerate {
            context: format!("{what} moment of order {ell} has imaginary residual {:.3e}", z.im),
            condition: f64::NAN,
        });
    }
    Ok(z.re)
}

fn with_order<T>(r: Result<T>, ell: usize) -> Result<T> {
    r.map_err(|e| match e {
        Error::Degenerate { context, condition } => {
            Error::Degenerate { context: format!("{context} (moment order {ell})"), condition }
        }
        other => other,
    })
}

/// `μ_ℓ` for ℓ = 0…L through Gaussian invariants.
pub fn moments_gaussian(psi: &PureGaussianKet, rho: &GaussianState, max_order: usize) -> Result<MomentSequence> {
    psi.state().same_frame(rho)?;
    let values = (0..=max_order)
        .into_par_iter()
        .map(|ell| with_order(pure_moment_invariant(psi, rho, ell), ell))
        .collect::<Result<Vec<_>>>()?;
    Ok(MomentSequence::new(values, Regime::PureMixed))
}

/// Quadratic forms `u† b^{(ℓ)} u` with `b^{(1)} = b`, `b^{(ℓ)} = b F b^{(ℓ−1)}`,
/// `F_{jk} = ⟨f_j|f_k⟩` and `u_m = ⟨f_m|ψ⟩`.
fn lincomb_recursion(
    psi: &LinearCombinationKet,
    op: &LinearCombinationOperator,
    max_order: usize,
    zeroth: f64,
    regime: Regime,
) -> Result<MomentSequence> {
    psi.kets()[0].state().same_frame(op.kets()[0].state())?;
    let f = overlap_matrix(op.kets(), op.kets())?;
    let u: DVector<Complex64> = overlap_matrix(op.kets(), psi.kets())? * psi.coeffs();
    let b = op.coeffs();
    let bf = b * &f;
    let mut values = vec![zeroth];
    let mut mags = vec![zeroth.abs()];
    let mut bl = b.clone();
    for ell in 1..=max_order {
        if ell > 1 {
            bl = &bf * &bl;
        }
        let z = (u.adjoint() * &bl * &u)[(0, 0)];
        let scale = u.iter().map(|x| x.norm()).sum::<f64>().powi(2) * crate::linalg::max_abs_c(&bl);
        values.push(realify(z, scale, "linear-combination", ell)?);
        mags.push(scale);
    }
    Ok(MomentSequence { values, regime, magnitudes: Some(mags) })
}

/// `μ_ℓ = ⟨ψ|ρ^ℓ|ψ⟩` for `ψ = Σ a_j|g_j⟩` and `ρ = Σ b_{mn}|f_m⟩⟨f_n|`.
pub fn moments_lincomb(
    psi: &LinearCombinationKet,
    rho: &LinearCombinationOperator,
    max_order: usize,
) -> Result<MomentSequence> {
    lincomb_recursion(psi, rho, max_order, 1.0, Regime::Lincomb)
}

/// `ν_ℓ = ⟨c|Δ^ℓ|c⟩` for a traceless `Δ = Σ b_{mn}|f_m⟩⟨f_n|`; `ν₀ = ⟨c|c⟩ = 1`.
pub fn moments_lincomb_difference(
    c: &LinearCombinationKet,
    delta: &LinearCombinationOperator,
    max_order: usize,
) -> Result<MomentSequence> {
    lincomb_recursion(c, delta, max_order, 1.0, Regime::MixedDifference)
}

/// Deterministic parallel sum of `term(i)` over `0..count`: fixed partitions, each
/// compensated, merged in partition order. Returns the sum and `Σ |term|`.
fn partitioned_sum<F>(count: usize, term: F) -> Result<(Complex64, f64)>
where
    F: Fn(usize) -> Result<Complex64> + Sync,
{
    let chunk = count.div_ceil(PARTITIONS).max(1);
    let parts = (0..count.div_ceil(chunk))
        .into_par_iter()
        .map(|p| {
            let mut acc = CompensatedComplexSum::default();
            let mut mag = CompensatedSum::default();
            for i in p * chunk..((p + 1) * chunk).min(count) {
                let t = term(i)?;
                acc.add(t);
                mag.add(t.norm());
            }
            Ok((acc, mag))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut acc = CompensatedComplexSum::default();
    let mut mag = CompensatedSum::default();
    for (a, m) in &parts {
        acc.merge(a);
        mag.add(m.value());
    }
    Ok((acc.value(), mag.value()))
}

/// `ν_ℓ = Σ_{u∈{1,2}^ℓ} (−1)^{|u|} Tr(ρ_{u₁}⋯ρ_{u_ℓ}|c⟩⟨c|)` for ℓ = 0…L.
pub fn moments_mixed_difference(
    c: &PureGaussianKet,
    rho1: &GaussianState,
    rho2: &GaussianState,
    max_order: usize,
) -> Result<MomentSequence> {
    c.state().same_frame(rho1)?;
    c.state().same_frame(rho2)?;
    guard(max_order, 2)?;
    let mut values = vec![1.0];
    let mut mags = vec![1.0];
    for ell in 1..=max_order {
        let (z, mag) = partitioned_sum(1usize << ell, |bits| {
            // a reversed word gives the complex conjugate, so each pair is evaluated once
            let rev = bits.reverse_bits() >> (usize::BITS as usize - ell);
            if rev < bits {
                return Ok(Complex64::new(0.0, 0.0));
            }
            let mut states = Vec::with_capacity(ell + 1);
            for i in 0..ell {
                states.push(if bits >> i & 1 == 0 { rho1.clone() } else { rho2.clone() });
            }
            states.push(c.state().clone());
            let sign = if bits.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            let t = with_order(multivariate_trace(&states), ell)? * sign;
            Ok(if rev == bits { t } else { Complex64::new(2.0 * t.re, 0.0) })
        })?;
        values.push(realify(z, mag, "mixed-difference", ell)?);
        mags.push(mag);
    }
    Ok(MomentSequence { values, regime: Regime::MixedDifference, magnitudes: Some(mags) })
}

/// `μ_ℓ = Σ_{u∈[q]^ℓ} Π b_{u_i} Σ_{jk} a_j* a_k / ⟨g_k|g_j⟩ · Tr(ν_{u₁}⋯ν_{u_ℓ} |g_k⟩⟨g_k|·|g_j⟩⟨g_j|)`.
pub fn moments_product_mixture(
    psi: &LinearCombinationKet,
    rho: &ProductMixture,
    max_order: usize,
) -> Result<MomentSequence> {
    let q = rho.len();
    let kets = psi.kets();
    kets[0].state().same_frame(&rho.factors[0][0])?;
    guard(max_order, q)?;
    let a = psi.coeffs();
    let gram = overlap_matrix(kets, kets)?;
    let p = kets.len();
    let mut pairs = Vec::with_capacity(p * p);
    for j in 0..p {
        for k in 0..p {
            let ov = gram[(k, j)];
            if ov.norm() < MIN_PAIR_OVERLAP {
                return Err(Error::DegeneratePair { j, k, modulus: ov.norm() });
            }
            pairs.push((j, k, a[j].conj() * a[k] / ov));
        }
    }

    let mut values = vec![1.0];
    let mut mags = vec![1.0];
    for ell in 1..=max_order {
        let (z, mag) = partitioned_sum(q.pow(ell as u32) * pairs.len(), |idx| {
            let (pair, mut word) = (idx % pairs.len(), idx / pairs.len());
            let (j, k, w) = pairs[pair];
            let mut weight = w;
            let mut states = Vec::new();
            for _ in 0..ell {
                let t = word % q;
                word /= q;
                weight *= rho.coeffs[t];
                states.extend(rho.factors[t].iter().cloned());
            }
            states.push(kets[k].state().clone());
            if j != k {
                states.push(kets[j].state().clone());
            }
            Ok(with_order(multivariate_trace(&states), ell)? * weight)
        })?;
        values.push(realify(z, mag, "product-mixture", ell)?);
        mags.push(mag);
    }
    Ok(MomentSequence { values, regime: Regime::ProductMixture, magnitudes: Some(mags) })
}
