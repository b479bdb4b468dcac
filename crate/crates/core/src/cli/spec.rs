//! JSON state descriptions and their resolution into library types.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{GaussianState, PureGaussianKet, DEFAULT_HBAR};
use crate::lanczos::{KetInput, StateInput};
use crate::lincomb::{cat_ket, lossy_cat, LinearCombinationKet, LinearCombinationOperator, Parity, NORM_TOL};

fn default_hbar() -> f64 {
    DEFAULT_HBAR
}

fn one_mode() -> usize {
    1
}

/// A single state as it appears in a spec file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpec {
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    #[serde(flatten)]
    pub body: StateBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateBody {
    Vacuum {
        #[serde(default = "one_mode")]
        modes: usize,
    },
    Coherent {
        alpha: [f64; 2],
        #[serde(default = "one_mode")]
        modes: usize,
    },
    Squeezed {
        s: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<[f64; 2]>,
        #[serde(default = "one_mode")]
        modes: usize,
    },
    Thermal {
        nbar: f64,
        #[serde(default = "one_mode")]
        modes: usize,
    },
    Squashed {
        nbar: f64,
        #[serde(default = "one_mode")]
        modes: usize,
    },
    /// Explicit moments; `v` is row-major.
    GaussianRaw { r: Vec<f64>, v: Vec<f64> },
    Cat {
        alpha: [f64; 2],
        p: usize,
        parity: Parity,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eta: Option<f64>,
    },
    Lincomb { coeffs: Vec<[f64; 2]>, kets: Vec<StateSpec> },
    Lossy { eta: f64, state: Box<StateSpec> },
}

/// Contents of a spec file: the states to compare and an optional trial ket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecFile {
    pub states: Vec<StateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial: Option<StateSpec>,
}

impl SpecFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Usage(format!("malformed spec: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serialisation cannot fail")
    }
}

/// A spec turned into one of the library representations.
#[derive(Debug, Clone)]
pub enum Resolved {
    Gaussian(GaussianState),
    Ket(LinearCombinationKet),
    Operator(LinearCombinationOperator),
}

impl Resolved {
    pub fn is_pure(&self) -> bool {
        match self {
            Resolved::Gaussian(g) => g.is_pure(),
            Resolved::Ket(_) => true,
            Resolved::Operator(_) => false,
        }
    }

    /// Pure-state view, if one exists.
    pub fn as_ket(&self) -> Option<KetInput> {
        match self {
            Resolved::Gaussian(g) if g.is_pure() => PureGaussianKet::new(g.clone()).ok().map(KetInput::Gaussian),
            Resolved::Ket(k) if k.kets().len() == 1 && (k.coeffs()[0].norm() - 1.0).abs() < NORM_TOL => {
                Some(KetInput::Gaussian(k.kets()[0].clone()))
            }
            Resolved::Ket(k) => Some(KetInput::Lincomb(k.clone())),
            _ => None,
        }
    }

    pub fn as_state(&self) -> StateInput {
        match self {
            Resolved::Gaussian(g) => StateInput::Gaussian(g.clone()),
            Resolved::Ket(k) => StateInput::Lincomb(k.projector()),
            Resolved::Operator(op) => StateInput::Lincomb(op.clone()),
        }
    }

    /// Linear-combination view for the lower-bound route.
    pub fn as_operator(&self) -> Result<LinearCombinationOperator> {
        match self {
            Resolved::Gaussian(g) if g.is_pure() => {
                Ok(LinearCombinationKet::from_gaussian(PureGaussianKet::new(g.clone())?).projector())
            }
            Resolved::Gaussian(_) => Err(Error::Domain("mixed Gaussian state has no linear-combination form".into())),
            Resolved::Ket(k) => Ok(k.projector()),
            Resolved::Operator(op) => Ok(op.clone()),
        }
    }
}

fn complex(a: [f64; 2]) -> Complex64 {
    Complex64::new(a[0], a[1])
}

fn field(path: &str, name: &str) -> String {
    if path.is_empty() {
        name.to_string()
    } else {
        format!("{path}.{name}")
    }
}

fn check_modes(path: &str, modes: usize) -> Result<()> {
    if modes == 0 {
        return Err(Error::Usage(format!("{}: must be at least 1", field(path, "modes"))));
    }
    Ok(())
}

fn check_eta(path: &str, eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Usage(format!("{}: {eta} is outside [0, 1]", field(path, "eta"))));
    }
    Ok(())
}

fn tag(path: &str, e: Error) -> Error {
    match e {
        Error::Usage(m) => Error::Usage(m),
        other if path.is_empty() => other,
        other => Error::Usage(format!("{path}: {other}")),
    }
}

impl StateSpec {
    pub fn new(hbar: f64, body: StateBody) -> Self {
        Self { hbar, body }
    }

    /// Builds the state without physicality checks on raw covariance matrices.
    pub fn resolve(&self) -> Result<Resolved> {
        self.resolve_at("")
    }

    fn resolve_at(&self, path: &str) -> Result<Resolved> {
        let hbar = self.hbar;
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::Usage(format!("{}: must be positive, got {hbar}", field(path, "hbar"))));
        }
        let repeat = |single: GaussianState, modes: usize| -> Result<Resolved> {
            check_modes(path, modes)?;
            Ok(Resolved::Gaussian(GaussianState::repeated(&single, modes)?))
        };
        let out = match &self.body {
            StateBody::Vacuum { modes } => repeat(GaussianState::vacuum(1, hbar), *modes),
            StateBody::Coherent { alpha, modes } => repeat(GaussianState::coherent(complex(*alpha), hbar), *modes),
            StateBody::Squeezed { s, alpha, modes } => repeat(
                GaussianState::displaced_squeezed(complex(alpha.unwrap_or([0.0, 0.0])), *s, hbar),
                *modes,
            ),
            StateBody::Thermal { nbar, modes } => repeat(GaussianState::thermal(*nbar, hbar).map_err(|e| tag(&field(path, "nbar"), e))?, *modes),
            StateBody::Squashed { nbar, modes } => repeat(GaussianState::squashed(*nbar, hbar).map_err(|e| tag(&field(path, "nbar"), e))?, *modes),
            StateBody::GaussianRaw { r, v } => {
                let n = r.len();
                if v.len() != n * n {
                    return Err(Error::Usage(format!(
                        "{}: expected {} row-major entries for a {n}x{n} matrix, got {}",
                        field(path, "v"),
                        n * n,
                        v.len()
                    )));
                }
                let state = GaussianState::new(hbar, DVector::from_column_slice(r), DMatrix::from_row_slice(n, n, v));
                Ok(Resolved::Gaussian(state.map_err(|e| tag(&field(path, "r"), e))?))
            }
            StateBody::Cat { alpha, p, parity, eta } => {
                let alpha = complex(*alpha);
                match eta {
                    None => Ok(Resolved::Ket(cat_ket(alpha, *p, *parity, hbar).map_err(|e| tag(path, e))?)),
                    Some(eta) => {
                        check_eta(path, *eta)?;
                        Ok(Resolved::Operator(lossy_cat(alpha, *p, *parity, *eta, hbar).map_err(|e| tag(path, e))?))
                    }
                }
            }
            StateBody::Lincomb { coeffs, kets } => {
                if coeffs.len() != kets.len() || kets.is_empty() {
                    return Err(Error::Usage(format!(
                        "{}: {} coefficients for {} kets",
                        field(path, "coeffs"),
                        coeffs.len(),
                        kets.len()
                    )));
                }
                let mut pure = Vec::with_capacity(kets.len());
                for (i, k) in kets.iter().enumerate() {
                    let sub = format!("{}[{i}]", field(path, "kets"));
                    match k.resolve_at(&sub)? {
                        Resolved::Gaussian(g) => pure.push(PureGaussianKet::new(g).map_err(|e| tag(&sub, e))?),
                        _ => return Err(Error::Usage(format!("{sub}: must be a pure Gaussian state"))),
                    }
                }
                let c = DVector::from_iterator(coeffs.len(), coeffs.iter().map(|c| complex(*c)));
                Ok(Resolved::Ket(LinearCombinationKet::normalized(c, pure).map_err(|e| tag(path, e))?))
            }
            StateBody::Lossy { eta, state } => {
                check_eta(path, *eta)?;
                state.apply_loss(*eta, &field(path, "state"))
            }
        };
        out.map_err(|e| tag(path, e))
    }

    /// Resolves `L_η[self]` for the families where the channel has a closed form.
    fn apply_loss(&self, eta: f64, path: &str) -> Result<Resolved> {
        match &self.body {
            StateBody::Cat { alpha, p, parity, eta: inner } => {
                // successive losses compose multiplicatively in transmission
                let total = 1.0 - (1.0 - inner.unwrap_or(0.0)) * (1.0 - eta);
                let spec = StateSpec::new(self.hbar, StateBody::Cat { alpha: *alpha, p: *p, parity: *parity, eta: Some(total) });
                spec.resolve_at(path)
            }
            StateBody::Lossy { eta: inner, state } => {
                check_eta(path, *inner)?;
                state.apply_loss(1.0 - (1.0 - inner) * (1.0 - eta), &field(path, "state"))
            }
            _ => match self.resolve_at(path)? {
                Resolved::Gaussian(g) => Ok(Resolved::Gaussian(g.loss_channel(eta)?)),
                _ => Err(Error::Usage(format!(
                    "{path}: loss is supported for Gaussian and cat states only"
                ))),
            },
        }
    }
}

/// Outcome of checking one state of a spec.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationLine {
    pub index: usize,
    pub passed: bool,
    pub detail: String,
}

/// Physicality checks for every state (and the trial ket) in a spec.
pub fn validate_spec(spec: &SpecFile) -> Vec<ValidationLine> {
    let mut entries: Vec<(usize, &StateSpec)> = spec.states.iter().enumerate().collect();
    if let Some(t) = &spec.trial {
        entries.push((spec.states.len(), t));
    }
    entries
        .into_iter()
        .map(|(index, s)| match s.resolve() {
            Err(e) => ValidationLine { index, passed: false, detail: e.to_string() },
            Ok(Resolved::Gaussian(g)) => {
                let rep = g.validate();
                ValidationLine {
                    index,
                    passed: rep.is_valid(),
                    detail: format!(
                        "gaussian modes={} symmetry_residual={:.3e} uncertainty_min_eig={:.3e} min_eig={:.3e} purity_defect={:.3e}",
                        g.num_modes(),
                        rep.symmetry_residual,
                        rep.uncertainty_min_eig,
                        rep.min_eig,
                        rep.purity_defect
                    ),
                }
            }
            Ok(Resolved::Ket(k)) => match k.norm_sqr() {
                Ok(n) => ValidationLine {
                    index,
                    passed: (n - 1.0).abs() <= NORM_TOL,
                    detail: format!("ket components={} norm_sqr={n:.12}", k.kets().len()),
                },
                Err(e) => ValidationLine { index, passed: false, detail: e.to_string() },
            },
            Ok(Resolved::Operator(op)) => match op.trace() {
                Ok(t) => ValidationLine {
                    index,
                    passed: (t.re - 1.0).abs() <= NORM_TOL && t.im.abs() <= NORM_TOL,
                    detail: format!("operator components={} trace={:.12}{:+.3e}i", op.kets().len(), t.re, t.im),
                },
                Err(e) => ValidationLine { index, passed: false, detail: e.to_string() },
            },
        })
        .collect()
}
