//! Closed-form references: the pure-pure distance, fidelity bounds and a
//! variational lower bound for pure-vs-mixed Gaussian pairs.

use crate::bargmann::{multivariate_trace, pure_moment_invariant, real_part_checked, vacuum_probability};
use crate::error::Result;
use crate::gaussian::{GaussianState, PureGaussianKet};
use crate::symplectic::{relative_to_vacuum, williamson};

/// Below this value of `1 − F_coh` the variational trial family collapses onto the vacuum.
pub const COLLAPSE_TOL: f64 = 1e-10;

/// `√(1 − |⟨ψ₁|ψ₂⟩|²)`.
pub fn pure_pure_distance(psi1: &PureGaussianKet, psi2: &PureGaussianKet) -> Result<f64> {
    let f = real_part_checked(
        multivariate_trace(&[psi1.state().clone(), psi2.state().clone()])?,
        "pure-state overlap",
    )?;
    Ok((1.0 - f.clamp(0.0, 1.0)).sqrt())
}

/// `(1 − √F, √(1 − F))` with `F = ⟨ψ|ρ|ψ⟩`.
pub fn fidelity_sandwich(psi: &PureGaussianKet, rho: &GaussianState) -> Result<(f64, f64)> {
    let f = pure_moment_invariant(psi, rho, 1)?.clamp(0.0, 1.0);
    Ok((1.0 - f.sqrt(), (1.0 - f).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationalReport {
    /// `⟨0|τ|0⟩` in the frame where ψ is the vacuum.
    pub f: f64,
    /// `|⟨0|μ⟩|²` for the pure trial state μ sharing τ's symplectic frame and means.
    pub f_coh: f64,
    /// `1/Π(1 + n̄_i)`.
    pub f_th: f64,
    /// `|⟨0|τ|φ⟩|` with φ the normalised component of μ orthogonal to the vacuum.
    pub y: f64,
    /// `⟨φ|τ|φ⟩`.
    pub phi_tau_phi: f64,
    pub bound: f64,
    /// True when μ coincides with the vacuum and only `|0⟩` remains in the trial family.
    pub collapsed: bool,
}

/// Maximum of `⟨ν|(|0⟩⟨0| − τ)|ν⟩` over `ν ∈ span{|0⟩, |μ⟩}`.
pub fn variational_lower_bound(psi: &PureGaussianKet, rho: &GaussianState) -> Result<VariationalReport> {
    let tau = relative_to_vacuum(psi, rho)?;
    let hbar = tau.hbar();
    let f = vacuum_probability(&tau)?;
    let w = williamson(&tau)?;
    let f_th = 1.0 / w.nbar.iter().map(|n| 1.0 + n).product::<f64>();
    let v_pure = &w.s * w.s.transpose() * (0.5 * hbar);
    let mu = GaussianState::new(hbar, tau.means().clone(), (&v_pure + v_pure.transpose()) * 0.5)?;
    let vac = GaussianState::vacuum(tau.num_modes(), hbar);
    let f_coh = real_part_checked(multivariate_trace(&[mu, vac])?, "trial overlap")?.clamp(0.0, 1.0);

    if 1.0 - f_coh < COLLAPSE_TOL {
        return Ok(VariationalReport {
            f,
            f_coh,
            f_th,
            y: 0.0,
            phi_tau_phi: 0.0,
            bound: (1.0 - f).clamp(0.0, 1.0),
            collapsed: true,
        });
    }
    let n2 = 1.0 / (1.0 - f_coh);
    let y = (n2 * f_coh).sqrt() * (f_th - f).abs();
    let p = n2 * (f_th - 2.0 * f_coh * f_th + f_coh * f);
    let bound = 0.5 * (1.0 - f - p) + 0.5 * (4.0 * y * y + (f - 1.0 - p).powi(2)).sqrt();
    Ok(VariationalReport { f, f_coh, f_th, y, phi_tau_phi: p, bound: bound.clamp(0.0, 1.0), collapsed: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::StateSampler;
    use num_complex::Complex64;

    /// Closed form after eliminating both trial angles.
    fn closed_form(f: f64, fc: f64, ft: f64) -> f64 {
        let disc = fc * fc * (-4.0 * f + 4.0 * ft + 1.0) + fc * (6.0 * f - 6.0 * ft - 2.0) + (-f + ft + 1.0).powi(2);
        0.5 - (f + ft - 2.0 * fc * ft - disc.sqrt()) / (2.0 * (1.0 - fc))
    }

    #[test]
    fn pure_pure_examples() {
        let vac = PureGaussianKet::vacuum(1, 2.0);
        assert!(pure_pure_distance(&vac, &vac).unwrap() < 1e-12);
        let coh = PureGaussianKet::coherent(Complex64::new(1.0, 0.0), 2.0);
        assert!((pure_pure_distance(&vac, &coh).unwrap() - (1.0 - (-1.0f64).exp()).sqrt()).abs() < 1e-12);
        let sq = PureGaussianKet::new(GaussianState::repeated(&GaussianState::squeezed_vacuum(0.5, 2.0), 10).unwrap()).unwrap();
        let want = (1.0 - (1.0 / 0.5f64.cosh()).powi(10)).sqrt();
        assert!((pure_pure_distance(&sq, &PureGaussianKet::vacuum(10, 2.0)).unwrap() - want).abs() < 1e-10);
        assert!((want - 0.836152).abs() < 1e-6);
    }

    #[test]
    fn sandwich_examples() {
        let vac = PureGaussianKet::vacuum(1, 2.0);
        let (lo, hi) = fidelity_sandwich(&vac, vac.state()).unwrap();
        assert!(lo.abs() < 1e-12 && hi.abs() < 1e-6);
        let (lo, hi) = fidelity_sandwich(&vac, &GaussianState::thermal(1.0, 2.0).unwrap()).unwrap();
        assert!((lo - (1.0 - 0.5f64.sqrt())).abs() < 1e-12);
        assert!((hi - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn self_distance_collapses_to_zero() {
        let psi = PureGaussianKet::coherent(Complex64::new(0.2, -0.4), 2.0);
        let rep = variational_lower_bound(&psi, psi.state()).unwrap();
        assert!(rep.collapsed);
        assert!(rep.bound.abs() < 1e-12);
    }

    #[test]
    fn pure_pairs_reduce_to_pure_distance() {
        let mut s = StateSampler::seeded(41);
        for m in [1, 2] {
            for _ in 0..20 {
                let (a, b) = (s.pure(m, 2.0), s.pure(m, 2.0));
                let rep = variational_lower_bound(&a, b.state()).unwrap();
                assert!((rep.bound - pure_pure_distance(&a, &b).unwrap()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn agrees_with_closed_form() {
        let mut s = StateSampler::seeded(42);
        for _ in 0..30 {
            let (psi, rho) = (s.pure(1, 2.0), s.mixed(1, 2.0));
            let rep = variational_lower_bound(&psi, &rho).unwrap();
            let want = closed_form(rep.f, rep.f_coh, rep.f_th);
            assert!((rep.bound - want).abs() < 1e-9, "{} vs {}", rep.bound, want);
            assert!((0.0..=1.0).contains(&rep.f_th) && (0.0..=1.0).contains(&rep.f_coh));
        }
    }

    #[test]
    fn thermal_against_vacuum() {
        // μ is the vacuum here, so only |0⟩ is available: 1 − F = n̄/(1+n̄), already exact
        let rep = variational_lower_bound(&PureGaussianKet::vacuum(1, 2.0), &GaussianState::thermal(1.0, 2.0).unwrap()).unwrap();
        assert!(rep.collapsed);
        assert!((rep.bound - 0.5).abs() < 1e-12);
    }
}
