//! Generalised Lanczos iteration driven purely by moments.
//!
//! Krylov vectors `A^ℓ|c⟩` are tracked as coefficient rows over the basis
//! `{ρ^k|ψ⟩}` (pure-vs-mixed) or `{Δ^k|c⟩}` (difference), with inner products
//! supplied by the Hankel metric `𝒢`. Gram–Schmidt against the normalised
//! predecessors yields `D`, and the compression `T` of `A` follows from `𝒢′`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gaussian::{GaussianState, PureGaussianKet};
use crate::lincomb::{LinearCombinationKet, LinearCombinationOperator, ProductMixture};
use crate::linalg::{max_abs, sym_eigen_sorted};
use crate::moments::{self, hankel_metrics, MetricPair, MomentSequence};

pub const DEFAULT_PURE_MIXED_STEPS: usize = 10;
pub const DEFAULT_DIFFERENCE_STEPS: usize = 5;

/// Upper limit on `A` eigenvalues that count as positive in diagnostics.
pub const POSITIVE_RITZ_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LanczosMode {
    /// `A = |ψ⟩⟨ψ| − ρ`, trial vector `|ψ⟩`.
    PureMixed,
    /// `A = ρ₁ − ρ₂` with a separate trial vector.
    Difference,
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    /// Squared 𝒢-norm at or below which the Krylov space is declared closed.
    pub breakdown_tol: f64,
    /// Squared norm below `−metric_tol` is reported as an inconsistent metric.
    pub metric_tol: f64,
    /// Largest tolerated `|D𝒢Dᵀ − I|` before the basis is truncated.
    pub conditioning_tol: f64,
    /// Largest tolerated ratio of the propagated moment error to a new squared norm;
    /// steps beyond it are noise and the basis is truncated.
    pub noise_tol: f64,
    pub want_povm: bool,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { breakdown_tol: 1e-12, metric_tol: 1e-8, conditioning_tol: 1e-4, noise_tol: 1e-6, want_povm: false }
    }
}

#[derive(Debug, Clone)]
pub struct LanczosWorkspace {
    pub mode: LanczosMode,
    pub c: DMatrix<f64>,
    pub dtilde: DMatrix<f64>,
    /// Rows are 𝒢-orthonormal; only the first `basis_size()` rows are populated.
    pub d: DMatrix<f64>,
    pub t: DMatrix<f64>,
    /// Eigenvalues of `T`, ascending.
    pub ritz: Vec<f64>,
    pub breakdown_step: Option<usize>,
    /// Step at which the noise or conditioning guard cut the basis.
    pub truncated_at: Option<usize>,
    /// `√⟨φ̃_k|φ̃_k⟩` per accepted step.
    pub norms: Vec<f64>,
    pub orthonormality_residual: f64,
    pub off_band_residual: f64,
}

impl LanczosWorkspace {
    pub fn basis_size(&self) -> usize {
        self.t.nrows()
    }
}

/// Coefficients of `A^ℓ|c⟩` over the moment basis.
pub fn build_c(metrics: &MetricPair, ell: usize, mode: LanczosMode) -> Result<DMatrix<f64>> {
    let n = ell + 1;
    if metrics.g.nrows() < n {
        return Err(Error::Length { required: 2 * ell + 2, available: 2 * metrics.g.nrows() });
    }
    if mode == LanczosMode::Difference {
        return Ok(DMatrix::identity(n, n));
    }
    let mut c = DMatrix::zeros(n, n);
    c[(0, 0)] = 1.0;
    for l in 1..n {
        c[(l, 0)] = (0..l).map(|k| c[(l - 1, k)] * metrics.g[(k, 0)]).sum();
        for k in 1..=l {
            c[(l, k)] = -c[(l - 1, k - 1)];
        }
    }
    Ok(c)
}

#[derive(Debug, Clone)]
pub struct Orthogonalization {
    pub dtilde: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub norms: Vec<f64>,
    pub breakdown_step: Option<usize>,
    /// Step whose squared norm was indistinguishable from moment rounding error.
    pub noise_limited_at: Option<usize>,
    /// Number of accepted rows.
    pub rank: usize,
}

fn metric_dot(a: &[f64], g: &DMatrix<f64>, b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (i, ai) in a.iter().enumerate() {
        if *ai == 0.0 {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            s += ai * g[(i, j)] * bj;
        }
    }
    s
}

/// `D̃_ℓ = C_ℓ − Σ_{j<ℓ} (C_ℓ 𝒢 D_jᵀ) D_j`, applied twice for stability, then
/// normalised in the 𝒢 inner product.
pub fn orthogonalize(c: &DMatrix<f64>, metrics: &MetricPair, opts: &LanczosOptions) -> Result<Orthogonalization> {
    let g = &metrics.g;
    let n = c.nrows();
    let mut noise_limited_at = None;
    let mut dtilde = DMatrix::zeros(n, n);
    let mut d = DMatrix::zeros(n, n);
    let mut norms = Vec::new();
    let mut breakdown_step = None;
    let mut rank = 0;
    for l in 0..n {
        let mut row: Vec<f64> = c.row(l).iter().copied().collect();
        for _ in 0..2 {
            for j in 0..l {
                let dj: Vec<f64> = d.row(j).iter().copied().collect();
                let proj = metric_dot(&row, g, &dj);
                for (r, x) in row.iter_mut().zip(&dj) {
                    *r -= proj * x;
                }
            }
        }
        row[l] = c[(l, l)];
        for (k, x) in row.iter().enumerate() {
            dtilde[(l, k)] = *x;
        }
        let n2 = metric_dot(&row, g, &row);
        if n2 < -opts.metric_tol {
            return Err(Error::MetricInconsistency { step: l, value: n2 });
        }
        if n2 <= opts.breakdown_tol {
            breakdown_step = Some(l);
            break;
        }
        let abs_row: Vec<f64> = row.iter().map(|x| x.abs()).collect();
        if metric_dot(&abs_row, &metrics.g_error, &abs_row) > opts.noise_tol * n2 {
            noise_limited_at = Some(l);
            break;
        }
        let nrm = n2.sqrt();
        for (k, x) in row.iter().enumerate() {
            d[(l, k)] = x / nrm;
        }
        norms.push(nrm);
        rank = l + 1;
    }
    Ok(Orthogonalization { dtilde, d, norms, breakdown_step, noise_limited_at, rank })
}

/// Compression of `A` onto the orthonormal Krylov basis given by the rows of `d`.
pub fn assemble_t(d: &DMatrix<f64>, metrics: &MetricPair, mode: LanczosMode) -> DMatrix<f64> {
    let k = d.nrows();
    let n = d.ncols();
    let g = metrics.g.view((0, 0), (n, n));
    let gp = metrics.gp.view((0, 0), (n, n));
    let shifted = d * gp * d.transpose();
    let t = match mode {
        LanczosMode::Difference => shifted,
        LanczosMode::PureMixed => {
            let dg0 = d * g.column(0);
            DMatrix::from_fn(k, k, |i, j| dg0[i] * dg0[j]) - shifted
        }
    };
    (&t + t.transpose()) * 0.5
}

fn orthonormality_prefix(d: &DMatrix<f64>, g: &DMatrix<f64>, tol: f64) -> (usize, f64) {
    let e = d * g * d.transpose() - DMatrix::identity(d.nrows(), d.nrows());
    let mut keep = 0;
    let mut worst = 0.0f64;
    for k in 1..=d.nrows() {
        let r = max_abs(&e.view((0, 0), (k, k)).into_owned());
        if r > tol {
            break;
        }
        keep = k;
        worst = r;
    }
    (keep, worst)
}

/// Full pipeline on precomputed moments: `C → D → T → Ritz values`.
pub fn run(moments: &MomentSequence, steps: usize, mode: LanczosMode, opts: &LanczosOptions) -> Result<LanczosWorkspace> {
    let metrics = hankel_metrics(moments, steps)?;
    let c = build_c(&metrics, steps, mode)?;
    let orth = orthogonalize(&c, &metrics, opts)?;
    let accepted = orth.d.rows(0, orth.rank).into_owned();
    let (keep, residual) = orthonormality_prefix(&accepted, &metrics.g, opts.conditioning_tol);
    let truncated_at = if keep < orth.rank { Some(keep) } else { orth.noise_limited_at };
    if keep == 0 {
        return Err(Error::Degenerate {
            context: "metric is too ill-conditioned for a single normalised Krylov vector".into(),
            condition: f64::NAN,
        });
    }
    let d = accepted.rows(0, keep).into_owned();
    let t = assemble_t(&d, &metrics, mode);
    let off_band = (0..keep)
        .flat_map(|i| (0..keep).map(move |j| (i, j)))
        .filter(|(i, j)| i.abs_diff(*j) > 1)
        .map(|(i, j)| t[(i, j)].abs())
        .fold(0.0, f64::max);
    let (vals, _) = sym_eigen_sorted(&t);
    Ok(LanczosWorkspace {
        mode,
        c,
        dtilde: orth.dtilde,
        d,
        t,
        ritz: vals.iter().copied().collect(),
        breakdown_step: orth.breakdown_step,
        truncated_at,
        norms: orth.norms[..keep].to_vec(),
        orthonormality_residual: residual,
        off_band_residual: off_band,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateKind {
    ExactPureMixed,
    LowerBound,
}

#[derive(Debug, Clone)]
pub struct DistanceEstimate {
    pub value: f64,
    pub kind: EstimateKind,
    /// Krylov basis size minus one: the number of Lanczos steps actually used.
    pub steps_used: usize,
    /// Headline estimator evaluated on each leading block of `T`.
    pub ritz_history: Vec<f64>,
    /// Largest Ritz value (pure-vs-mixed) or largest `|Ritz|` (difference) per step.
    pub max_ritz_history: Vec<f64>,
    /// Expansion of the top Ritz vector over `{ρ^k|ψ⟩}` (or `{Δ^k|c⟩}`).
    pub povm_coefficients: Option<DVector<f64>>,
    pub workspace: LanczosWorkspace,
}

impl DistanceEstimate {
    pub fn breakdown_step(&self) -> Option<usize> {
        self.workspace.breakdown_step
    }
}

fn leading_eigs(t: &DMatrix<f64>, k: usize) -> Vec<f64> {
    let (v, _) = sym_eigen_sorted(&t.view((0, 0), (k, k)).into_owned());
    v.iter().copied().collect()
}

fn finish(ws: LanczosWorkspace, kind: EstimateKind, opts: &LanczosOptions) -> DistanceEstimate {
    let n = ws.basis_size();
    let mut history = Vec::with_capacity(n);
    let mut max_hist = Vec::with_capacity(n);
    for k in 1..=n {
        let e = leading_eigs(&ws.t, k);
        let top = *e.last().unwrap();
        match kind {
            EstimateKind::ExactPureMixed => {
                history.push(top);
                max_hist.push(top);
            }
            EstimateKind::LowerBound => {
                history.push(0.5 * e.iter().map(|x| x.abs()).sum::<f64>());
                max_hist.push(e.iter().map(|x| x.abs()).fold(0.0, f64::max));
            }
        }
    }
    let value = history.last().copied().unwrap_or(0.0).max(0.0);
    let povm_coefficients = opts.want_povm.then(|| {
        let (vals, vecs) = sym_eigen_sorted(&ws.t);
        let idx = match kind {
            EstimateKind::ExactPureMixed => vals.len() - 1,
            EstimateKind::LowerBound => (0..vals.len()).max_by(|&a, &b| vals[a].abs().total_cmp(&vals[b].abs())).unwrap(),
        };
        ws.d.transpose() * vecs.column(idx)
    });
    DistanceEstimate {
        value,
        kind,
        steps_used: n - 1,
        ritz_history: history,
        max_ritz_history: max_hist,
        povm_coefficients,
        workspace: ws,
    }
}

/// Pure ket in either representation.
#[derive(Debug, Clone)]
pub enum KetInput {
    Gaussian(PureGaussianKet),
    Lincomb(LinearCombinationKet),
}

impl KetInput {
    pub fn to_lincomb(&self) -> LinearCombinationKet {
        match self {
            KetInput::Gaussian(k) => LinearCombinationKet::from_gaussian(k.clone()),
            KetInput::Lincomb(k) => k.clone(),
        }
    }
}

/// Mixed state in any supported representation.
#[derive(Debug, Clone)]
pub enum StateInput {
    Gaussian(GaussianState),
    Lincomb(LinearCombinationOperator),
    Product(ProductMixture),
}

/// Moments `⟨ψ|ρ^ℓ|ψ⟩` for ℓ = 0…`max_order`, choosing the route by representation.
pub fn pure_mixed_moments(psi: &KetInput, rho: &StateInput, max_order: usize) -> Result<MomentSequence> {
    match (psi, rho) {
        (KetInput::Gaussian(k), StateInput::Gaussian(r)) => moments::moments_gaussian(k, r, max_order),
        (_, StateInput::Lincomb(op)) => moments::moments_lincomb(&psi.to_lincomb(), op, max_order),
        (_, StateInput::Product(pm)) => moments::moments_product_mixture(&psi.to_lincomb(), pm, max_order),
        (KetInput::Lincomb(k), StateInput::Gaussian(r)) => {
            moments::moments_product_mixture(k, &ProductMixture::from_gaussian(r.clone()), max_order)
        }
    }
}

/// `d(|ψ⟩⟨ψ|, ρ)` as the largest Ritz value of the compressed `|ψ⟩⟨ψ| − ρ`.
pub fn trace_distance_pure_mixed(
    psi: &KetInput,
    rho: &StateInput,
    steps: usize,
    opts: &LanczosOptions,
) -> Result<DistanceEstimate> {
    let m = pure_mixed_moments(psi, rho, 2 * steps + 1)?;
    let ws = run(&m, steps, LanczosMode::PureMixed, opts)?;
    Ok(finish(ws, EstimateKind::ExactPureMixed, opts))
}

/// Moments `⟨c|(ρ₁ − ρ₂)^ℓ|c⟩` for ℓ = 0…`max_order`.
pub fn difference_moments(
    rho1: &StateInput,
    rho2: &StateInput,
    trial: &KetInput,
    max_order: usize,
) -> Result<MomentSequence> {
    match (rho1, rho2, trial) {
        (StateInput::Gaussian(a), StateInput::Gaussian(b), KetInput::Gaussian(c)) => {
            moments::moments_mixed_difference(c, a, b, max_order)
        }
        (StateInput::Lincomb(a), StateInput::Lincomb(b), _) => {
            moments::moments_lincomb_difference(&trial.to_lincomb(), &a.difference(b)?, max_order)
        }
        _ => Err(Error::Domain(
            "lower bounds need two Gaussian states with a Gaussian trial ket, or two linear-combination operators".into(),
        )),
    }
}

/// `½ Σ |Ritz|` of the compressed `ρ₁ − ρ₂`: a lower bound on `d(ρ₁, ρ₂)`.
pub fn trace_distance_lower_bound(
    rho1: &StateInput,
    rho2: &StateInput,
    trial: &KetInput,
    steps: usize,
    opts: &LanczosOptions,
) -> Result<DistanceEstimate> {
    let m = difference_moments(rho1, rho2, trial, 2 * steps + 1)?;
    let ws = run(&m, steps, LanczosMode::Difference, opts)?;
    Ok(finish(ws, EstimateKind::LowerBound, opts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::Regime;
    use num_complex::Complex64;

    fn thermal_moments(nbar: f64, n: usize) -> MomentSequence {
        MomentSequence::new((0..n).map(|k| (1.0 + nbar).powi(-(k as i32))).collect(), Regime::PureMixed)
    }

    #[test]
    fn c_rows_for_first_steps() {
        let m = MomentSequence::new(vec![1.0, 0.3, 0.2, 0.1, 0.05, 0.02], Regime::PureMixed);
        let mp = hankel_metrics(&m, 2).unwrap();
        let c = build_c(&mp, 2, LanczosMode::PureMixed).unwrap();
        assert_eq!((c[(1, 0)], c[(1, 1)]), (1.0, -1.0));
        assert!((c[(2, 0)] - 0.7).abs() < 1e-15);
        assert_eq!((c[(2, 1)], c[(2, 2)]), (-1.0, 1.0));
        assert_eq!(c[(0, 1)], 0.0);
        assert_eq!(build_c(&mp, 2, LanczosMode::Difference).unwrap(), DMatrix::identity(3, 3));
    }

    #[test]
    fn thermal_vacuum_breaks_down_at_step_one() {
        let ws = run(&thermal_moments(1.0, 22), 10, LanczosMode::PureMixed, &LanczosOptions::default()).unwrap();
        assert_eq!(ws.breakdown_step, Some(1));
        assert_eq!(ws.basis_size(), 1);
        assert!((ws.t[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_step_t() {
        let m = MomentSequence::new(vec![1.0, 0.4], Regime::PureMixed);
        let ws = run(&m, 0, LanczosMode::PureMixed, &LanczosOptions::default()).unwrap();
        assert!((ws.t[(0, 0)] - 0.6).abs() < 1e-15);
        assert_eq!(ws.d, DMatrix::identity(1, 1));
    }

    #[test]
    fn negative_norm_is_an_inconsistency() {
        // μ₂ < μ₁² violates Cauchy–Schwarz
        let m = MomentSequence::new(vec![1.0, 0.5, 0.1, 0.05], Regime::PureMixed);
        let err = run(&m, 1, LanczosMode::PureMixed, &LanczosOptions::default()).unwrap_err();
        assert!(matches!(err, Error::MetricInconsistency { step: 1, .. }));
    }

    #[test]
    fn noisy_directions_are_truncated() {
        // spectral measure with a third atom far below the rounding floor of large expanded sums
        let atoms = [(0.6, 0.5), (0.4 - 1e-9, -0.3), (1e-9, 0.1)];
        let values: Vec<f64> = (0..8).map(|k| atoms.iter().map(|(w, l): &(f64, f64)| w * l.powi(k)).sum()).collect();
        let clean = run(&MomentSequence::new(values.clone(), Regime::MixedDifference), 3, LanczosMode::Difference, &LanczosOptions::default()).unwrap();
        assert_eq!(clean.basis_size(), 3);
        assert_eq!(clean.truncated_at, None);
        let noisy = MomentSequence { values, regime: Regime::MixedDifference, magnitudes: Some(vec![1e3; 8]) };
        let ws = run(&noisy, 3, LanczosMode::Difference, &LanczosOptions::default()).unwrap();
        assert_eq!(ws.truncated_at, Some(2));
        assert_eq!(ws.basis_size(), 2);
        assert_eq!(ws.breakdown_step, None);
    }

    #[test]
    fn gaussian_pipeline_examples() {
        let vac = KetInput::Gaussian(PureGaussianKet::vacuum(1, 2.0));
        let opts = LanczosOptions { want_povm: true, ..Default::default() };
        let th = StateInput::Gaussian(GaussianState::thermal(1.0, 2.0).unwrap());
        let est = trace_distance_pure_mixed(&vac, &th, 10, &opts).unwrap();
        assert!((est.value - 0.5).abs() < 1e-12);
        assert_eq!(est.breakdown_step(), Some(1));
        let v = est.povm_coefficients.unwrap();
        assert_eq!(v.len(), 11);
        assert!((v[0].abs() - 1.0).abs() < 1e-14 && v.rows(1, 10).amax() == 0.0);

        let coh = PureGaussianKet::coherent(Complex64::new(0.3, 0.7), 2.0);
        let same = StateInput::Gaussian(coh.state().clone());
        let est = trace_distance_pure_mixed(&KetInput::Gaussian(coh), &same, 10, &opts).unwrap();
        assert!(est.value.abs() < 1e-10);
    }

    #[test]
    fn identical_mixed_states_give_zero() {
        let r = StateInput::Gaussian(GaussianState::thermal(0.4, 2.0).unwrap());
        let trial = KetInput::Gaussian(PureGaussianKet::coherent(Complex64::new(0.5, 0.5), 2.0));
        let err = trace_distance_lower_bound(&r, &r, &trial, 5, &LanczosOptions::default()).unwrap();
        assert!(err.value.abs() < 1e-12);
    }
}
