//! Random valid Gaussian states for property tests and sweeps.
//!
//! Symplectic matrices are drawn as `exp(Ω H)` with `H` a random symmetric
//! generator; thermal occupations and displacements are uniform.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gaussian::{GaussianState, PureGaussianKet};
use crate::linalg;

#[derive(Debug, Clone)]
pub struct StateSampler {
    rng: ChaCha8Rng,
    /// Upper end of the uniform n̄ range.
    pub max_nbar: f64,
    /// Displacement entries are uniform in `[−max_disp, max_disp]` (quadrature units).
    pub max_disp: f64,
    /// Entries of the quadratic generator are uniform in `[−scale, scale]`.
    pub generator_scale: f64,
}

impl StateSampler {
    /// Broad ranges: n̄ ∈ [0, 2], r ∈ [−2, 2]^{2M}.
    pub fn seeded(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            max_nbar: 2.0,
            max_disp: 2.0,
            generator_scale: 0.5,
        }
    }

    /// Ranges small enough that single-mode states are captured by a Fock cutoff
    /// of 100 to better than 1e-10 in trace.
    pub fn seeded_bounded(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            max_nbar: 0.8,
            max_disp: 1.5,
            generator_scale: 0.3,
        }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    pub fn symplectic(&mut self, modes: usize) -> DMatrix<f64> {
        let n = 2 * modes;
        let g = self.generator_scale;
        let mut h = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let x = self.rng.random_range(-g..g);
                h[(i, j)] = x;
                h[(j, i)] = x;
            }
        }
        (linalg::omega(modes) * h).exp()
    }

    fn build(&mut self, modes: usize, hbar: f64, mixed: bool) -> GaussianState {
        let s = self.symplectic(modes);
        let nbar: Vec<f64> = (0..modes)
            .map(|_| if mixed { self.rng.random_range(0.0..self.max_nbar) } else { 0.0 })
            .collect();
        let d = DMatrix::from_fn(2 * modes, 2 * modes, |i, j| {
            if i == j {
                0.5 * hbar * (2.0 * nbar[i % modes] + 1.0)
            } else {
                0.0
            }
        });
        let v = &s * d * s.transpose();
        let v = (&v + v.transpose()) * 0.5;
        let md = self.max_disp;
        let r = DVector::from_fn(2 * modes, |_, _| self.rng.random_range(-md..md));
        GaussianState::new(hbar, r, v).expect("sampled state has consistent shapes")
    }

    pub fn mixed(&mut self, modes: usize, hbar: f64) -> GaussianState {
        self.build(modes, hbar, true)
    }

    pub fn pure(&mut self, modes: usize, hbar: f64) -> PureGaussianKet {
        PureGaussianKet::new(self.build(modes, hbar, false)).expect("sampled pure state")
    }

    pub fn complex(&mut self, radius: f64) -> Complex64 {
        Complex64::new(self.rng.random_range(-radius..radius), self.rng.random_range(-radius..radius))
    }
}
