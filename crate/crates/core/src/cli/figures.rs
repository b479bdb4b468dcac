//! Parameter sweeps behind the `reproduce` command.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use super::table::{Cell, Table};
use crate::bounds::{fidelity_sandwich, variational_lower_bound};
use crate::error::{Error, Result};
use crate::fock;
use crate::gaussian::{GaussianState, PureGaussianKet};
use crate::lanczos::{
    trace_distance_lower_bound, trace_distance_pure_mixed, DistanceEstimate, KetInput, LanczosOptions, StateInput,
};
use crate::lincomb::{cat_ket, lossy_cat, Parity};

/// Panels that `reproduce` can emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Panel {
    Fig1Top,
    Fig1Bottom,
    Fig2,
    Fig3Top,
    Fig3Bottom,
    Fig4,
}

impl Panel {
    pub const ALL: [Panel; 6] = [
        Panel::Fig1Top,
        Panel::Fig1Bottom,
        Panel::Fig2,
        Panel::Fig3Top,
        Panel::Fig3Bottom,
        Panel::Fig4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Panel::Fig1Top => "fig1_top",
            Panel::Fig1Bottom => "fig1_bottom",
            Panel::Fig2 => "fig2",
            Panel::Fig3Top => "fig3_top",
            Panel::Fig3Bottom => "fig3_bottom",
            Panel::Fig4 => "fig4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub grid: usize,
    pub cutoff: usize,
    pub hbar: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { grid: 50, cutoff: fock::DEFAULT_CUTOFF, hbar: crate::gaussian::DEFAULT_HBAR }
    }
}

/// `n` uniformly spaced points covering `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

pub fn reproduce(panel: Panel, opts: &SweepOptions) -> Result<Table> {
    if opts.grid == 0 {
        return Err(Error::Usage("--grid must be at least 1".into()));
    }
    if opts.cutoff < 2 {
        return Err(Error::Usage("--cutoff must be at least 2".into()));
    }
    if !(opts.hbar > 0.0 && opts.hbar.is_finite()) {
        return Err(Error::Usage(format!("--hbar must be positive, got {}", opts.hbar)));
    }
    match panel {
        Panel::Fig1Top => fig1_top(opts),
        Panel::Fig1Bottom => fig1_bottom(opts),
        Panel::Fig2 => fig2(opts),
        Panel::Fig3Top => fig3_top(opts),
        Panel::Fig3Bottom => fig3_bottom(opts),
        Panel::Fig4 => fig4(opts),
    }
}

/// Evaluates `f` on every task concurrently and keeps rows in task order.
fn sweep<T: Sync>(columns: Vec<String>, tasks: &[T], f: impl Fn(&T) -> Result<Vec<Cell>> + Sync) -> Result<Table> {
    let rows = tasks.par_iter().map(&f).collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(columns);
    for r in rows {
        table.push(r);
    }
    Ok(table)
}

fn exact_columns(est: &DistanceEstimate) -> [Cell; 2] {
    [est.steps_used.into(), est.breakdown_step().into()]
}

const PURE_STEPS: usize = 10;

fn fig1_top(o: &SweepOptions) -> Result<Table> {
    let lanczos = LanczosOptions::default();
    let vac = PureGaussianKet::vacuum(1, o.hbar);
    let vac_fock = fock::projector(&fock::ket_to_fock(&vac, o.cutoff)?);
    let cols = [
        "nbar".to_string(),
        format!("d_lanczos_l{PURE_STEPS}"),
        format!("d_oracle_c{}", o.cutoff),
        "fvg_lower".into(),
        "fvg_upper".into(),
        "variational".into(),
        "steps".into(),
        "breakdown".into(),
    ];
    sweep(cols.to_vec(), &linspace(0.0, 5.0, o.grid), |&nbar| {
        let rho = GaussianState::squashed(nbar, o.hbar)?;
        let est = trace_distance_pure_mixed(&KetInput::Gaussian(vac.clone()), &StateInput::Gaussian(rho.clone()), PURE_STEPS, &lanczos)?;
        let oracle = fock::trace_distance_exact(&vac_fock, &fock::gaussian_to_fock(&rho, o.cutoff)?)?;
        let (lo, hi) = fidelity_sandwich(&vac, &rho)?;
        let var = variational_lower_bound(&vac, &rho)?.bound;
        let [s, b] = exact_columns(&est);
        Ok(vec![nbar.into(), est.value.into(), oracle.into(), lo.into(), hi.into(), var.into(), s, b])
    })
}

/// `(ħ/2)(a I_M ⊕ b I_M)`.
fn block_diag_state(modes: usize, a: f64, b: f64, means: DVector<f64>, hbar: f64) -> Result<GaussianState> {
    let v = DMatrix::from_fn(2 * modes, 2 * modes, |i, j| match (i == j, i < modes) {
        (true, true) => 0.5 * hbar * a,
        (true, false) => 0.5 * hbar * b,
        _ => 0.0,
    });
    GaussianState::new_valid(hbar, means, v)
}

fn fig1_bottom(o: &SweepOptions) -> Result<Table> {
    const MODES: usize = 10;
    const S: f64 = 0.5;
    let lanczos = LanczosOptions::default();
    let pure = block_diag_state(MODES, (-2.0 * S).exp(), (2.0 * S).exp(), DVector::zeros(2 * MODES), o.hbar)?;
    let psi = PureGaussianKet::new(pure.clone())?;
    let cols = ["eta", &format!("d_lanczos_l{PURE_STEPS}"), "fvg_lower", "fvg_upper", "variational", "steps", "breakdown"];
    sweep(cols.iter().map(|c| c.to_string()).collect(), &linspace(0.0, 1.0, o.grid), |&eta| {
        let rho = pure.loss_channel(eta)?;
        let est = trace_distance_pure_mixed(&KetInput::Gaussian(psi.clone()), &StateInput::Gaussian(rho.clone()), PURE_STEPS, &lanczos)?;
        let (lo, hi) = fidelity_sandwich(&psi, &rho)?;
        let var = variational_lower_bound(&psi, &rho)?.bound;
        let [s, b] = exact_columns(&est);
        Ok(vec![eta.into(), est.value.into(), lo.into(), hi.into(), var.into(), s, b])
    })
}

const CAT_ALPHA: f64 = 2.0;
const CAT_COMPONENTS: [usize; 4] = [2, 4, 6, 8];

fn parity_name(p: Parity) -> &'static str {
    match p {
        Parity::Even => "even",
        Parity::Odd => "odd",
    }
}

fn fig2(o: &SweepOptions) -> Result<Table> {
    let lanczos = LanczosOptions::default();
    let alpha = Complex64::new(CAT_ALPHA, 0.0);
    let mut tasks = Vec::new();
    for p in CAT_COMPONENTS {
        for parity in [Parity::Even, Parity::Odd] {
            for eta in linspace(0.0, 1.0, o.grid) {
                tasks.push((p, parity, eta));
            }
        }
    }
    let cols = [
        "eta".to_string(),
        "p".into(),
        "parity".into(),
        format!("d_lanczos_l{PURE_STEPS}"),
        format!("d_oracle_c{}", o.cutoff),
        "steps".into(),
        "breakdown".into(),
    ];
    sweep(cols.to_vec(), &tasks, |&(p, parity, eta)| {
        let psi = cat_ket(alpha, p, parity, o.hbar)?;
        let rho = lossy_cat(alpha, p, parity, eta, o.hbar)?;
        let est = trace_distance_pure_mixed(&KetInput::Lincomb(psi.clone()), &StateInput::Lincomb(rho.clone()), PURE_STEPS, &lanczos)?;
        let psi_fock = fock::projector(&fock::lincomb_ket_to_fock(&psi, o.cutoff)?);
        let oracle = fock::trace_distance_exact(&psi_fock, &fock::lincomb_to_fock(&rho, o.cutoff)?)?;
        let [s, b] = exact_columns(&est);
        Ok(vec![eta.into(), p.into(), parity_name(parity).into(), est.value.into(), oracle.into(), s, b])
    })
}

fn bound_columns(est: &DistanceEstimate) -> [Cell; 4] {
    [
        est.value.into(),
        est.max_ritz_history.last().copied().unwrap_or(0.0).into(),
        est.steps_used.into(),
        est.breakdown_step().into(),
    ]
}

/// Coherent trial ket whose means equal `√(ħ/2)·r` so the state itself is ħ-independent.
fn scaled_trial(r: &[f64], hbar: f64) -> Result<PureGaussianKet> {
    let n = r.len();
    let means = DVector::from_iterator(n, r.iter().map(|x| x * (0.5 * hbar).sqrt()));
    PureGaussianKet::new(GaussianState::new(hbar, means, DMatrix::identity(n, n) * (0.5 * hbar))?)
}

fn fig3_top(o: &SweepOptions) -> Result<Table> {
    const STEPS: usize = 5;
    const ALPHA: f64 = 0.8;
    let lanczos = LanczosOptions::default();
    let trial = KetInput::Gaussian(scaled_trial(&[1.5, 1.5], o.hbar)?);
    let mut tasks = Vec::new();
    for r in [0.05, 0.3, 1.5] {
        for eta in linspace(0.5, 1.0, o.grid) {
            tasks.push((r, eta));
        }
    }
    let cols = [
        "eta".to_string(),
        "r".into(),
        format!("lb_lanczos_l{STEPS}"),
        "max_abs_ritz".into(),
        "steps".into(),
        "breakdown".into(),
        format!("d_oracle_c{}", o.cutoff),
    ];
    sweep(cols.to_vec(), &tasks, |&(r, eta)| {
        let plus = GaussianState::displaced_squeezed(Complex64::new(ALPHA, 0.0), r, o.hbar).loss_channel(eta)?;
        let minus = GaussianState::displaced_squeezed(Complex64::new(-ALPHA, 0.0), r, o.hbar).loss_channel(eta)?;
        let est = trace_distance_lower_bound(&StateInput::Gaussian(plus.clone()), &StateInput::Gaussian(minus.clone()), &trial, STEPS, &lanczos)?;
        let oracle = fock::trace_distance_exact(&fock::gaussian_to_fock(&plus, o.cutoff)?, &fock::gaussian_to_fock(&minus, o.cutoff)?)?;
        let [v, m, s, b] = bound_columns(&est);
        Ok(vec![eta.into(), r.into(), v, m, s, b, oracle.into()])
    })
}

fn fig3_bottom(o: &SweepOptions) -> Result<Table> {
    const STEPS: usize = 4;
    const MODES: usize = 5;
    const S: f64 = 0.5;
    let lanczos = LanczosOptions::default();
    let trial = KetInput::Gaussian(scaled_trial(&[1.0; 2 * MODES], o.hbar)?);
    let cols = ["eta".to_string(), format!("lb_lanczos_l{STEPS}"), "max_abs_ritz".into(), "steps".into(), "breakdown".into()];
    sweep(cols.to_vec(), &linspace(0.0, 1.0, o.grid), |&eta| {
        let zero = DVector::zeros(2 * MODES);
        let squashed_p = (1.0 - eta) * (1.0 + 4.0 * S.sinh().powi(2)) + eta;
        let rho1 = block_diag_state(MODES, 1.0, squashed_p, zero.clone(), o.hbar)?;
        let rho2 = block_diag_state(
            MODES,
            (1.0 - eta) * (-2.0 * S).exp() + eta,
            (1.0 - eta) * (2.0 * S).exp() + eta,
            zero,
            o.hbar,
        )?;
        let est = trace_distance_lower_bound(&StateInput::Gaussian(rho1), &StateInput::Gaussian(rho2), &trial, STEPS, &lanczos)?;
        let [v, m, s, b] = bound_columns(&est);
        Ok(vec![eta.into(), v, m, s, b])
    })
}

fn fig4(o: &SweepOptions) -> Result<Table> {
    let lanczos = LanczosOptions::default();
    let alpha = Complex64::new(CAT_ALPHA, 0.0);
    let trial = KetInput::Gaussian(PureGaussianKet::coherent(alpha, o.hbar));
    let mut tasks = Vec::new();
    for p in CAT_COMPONENTS {
        for eta in linspace(0.0, 1.0, o.grid) {
            tasks.push((p, eta));
        }
    }
    let cols = [
        "eta".to_string(),
        "p".into(),
        format!("lb_lanczos_l{PURE_STEPS}"),
        "max_abs_ritz".into(),
        "steps".into(),
        "breakdown".into(),
        format!("d_oracle_c{}", o.cutoff),
    ];
    sweep(cols.to_vec(), &tasks, |&(p, eta)| {
        let even = lossy_cat(alpha, p, Parity::Even, eta, o.hbar)?;
        let odd = lossy_cat(alpha, p, Parity::Odd, eta, o.hbar)?;
        let est = trace_distance_lower_bound(&StateInput::Lincomb(even.clone()), &StateInput::Lincomb(odd.clone()), &trial, PURE_STEPS, &lanczos)?;
        let oracle = fock::trace_distance_exact(&fock::lincomb_to_fock(&even, o.cutoff)?, &fock::lincomb_to_fock(&odd, o.cutoff)?)?;
        let [v, m, s, b] = bound_columns(&est);
        Ok(vec![eta.into(), p.into(), v, m, s, b, oracle.into()])
    })
}
