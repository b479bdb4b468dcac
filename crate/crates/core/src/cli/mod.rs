//! Command-line front end: `distance`, `reproduce` and `validate`.

pub mod figures;
pub mod spec;
pub mod table;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::fock::{self, FockOperator};
use crate::gaussian::PureGaussianKet;
use crate::lanczos::{
    trace_distance_lower_bound, trace_distance_pure_mixed, KetInput, LanczosOptions, StateInput,
    DEFAULT_DIFFERENCE_STEPS, DEFAULT_PURE_MIXED_STEPS,
};
use figures::{Panel, SweepOptions};
use spec::{Resolved, SpecFile};
use table::{Cell, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_COST_GUARD: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "tracedist", version, about = "Trace distances between Gaussian states and their superpositions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Lanczos,
    Oracle,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum FigureArg {
    Fig1Top,
    Fig1Bottom,
    Fig2,
    Fig3Top,
    Fig3Bottom,
    Fig4,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Distance between the two states of a JSON spec.
    Distance {
        spec: PathBuf,
        #[arg(long, value_enum, default_value = "lanczos")]
        method: Method,
        /// Lanczos steps (default 10, or 5 for Gaussian lower bounds).
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, default_value_t = fock::DEFAULT_CUTOFF)]
        cutoff: usize,
        /// Report the mixed-state lower bound instead of the pure-vs-mixed value.
        #[arg(long)]
        lower_bound: bool,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the CSV for one figure panel (or all of them) into a directory.
    Reproduce {
        #[arg(value_enum)]
        figure: FigureArg,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = 50)]
        grid: usize,
        #[arg(long, default_value_t = fock::DEFAULT_CUTOFF)]
        cutoff: usize,
        #[arg(long, default_value_t = crate::gaussian::DEFAULT_HBAR)]
        hbar: f64,
    },
    /// Check every state of a spec for physicality.
    Validate { spec: PathBuf },
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::CostGuard { .. } => EXIT_COST_GUARD,
        Error::Usage(_) | Error::Shape(_) | Error::Domain(_) | Error::Gauge(_) => EXIT_INVALID,
        _ => EXIT_FAILURE,
    }
}

/// Parses and runs the command, printing diagnostics to stderr.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Distance { spec, method, steps, cutoff, lower_bound, out } => {
            read_spec(&spec).and_then(|s| {
                let req = DistanceRequest { method, steps, cutoff, lower_bound };
                let t = distance(&s, &req)?;
                emit(&t, out.as_deref())
            })
        }
        Command::Reproduce { figure, out, grid, cutoff, hbar } => {
            reproduce_to_dir(figure, &out, &SweepOptions { grid, cutoff, hbar }).map(|paths| {
                for p in paths {
                    eprintln!("wrote {}", p.display());
                }
            })
        }
        Command::Validate { spec } => match read_spec(&spec) {
            Ok(s) => {
                let lines = spec::validate_spec(&s);
                for l in &lines {
                    println!("state {}: {} {}", l.index, if l.passed { "PASS" } else { "FAIL" }, l.detail);
                }
                if lines.iter().all(|l| l.passed) {
                    Ok(())
                } else {
                    return EXIT_INVALID;
                }
            }
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn read_spec(path: &Path) -> Result<SpecFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Usage(format!("cannot read {}: {e}", path.display())))?;
    SpecFile::from_json(&text)
}

fn emit(t: &Table, out: Option<&Path>) -> Result<()> {
    let csv = t.to_csv();
    match out {
        Some(p) => std::fs::write(p, csv).map_err(|e| Error::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

/// Writes `<panel>.csv` files into `dir`, returning their paths.
pub fn reproduce_to_dir(figure: FigureArg, dir: &Path, opts: &SweepOptions) -> Result<Vec<PathBuf>> {
    let panels: Vec<Panel> = match figure {
        FigureArg::Fig1Top => vec![Panel::Fig1Top],
        FigureArg::Fig1Bottom => vec![Panel::Fig1Bottom],
        FigureArg::Fig2 => vec![Panel::Fig2],
        FigureArg::Fig3Top => vec![Panel::Fig3Top],
        FigureArg::Fig3Bottom => vec![Panel::Fig3Bottom],
        FigureArg::Fig4 => vec![Panel::Fig4],
        FigureArg::All => Panel::ALL.to_vec(),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::Usage(format!("cannot create {}: {e}", dir.display())))?;
    let mut written = Vec::new();
    for p in panels {
        let table = figures::reproduce(p, opts)?;
        let path = dir.join(format!("{}.csv", p.name()));
        emit(&table, Some(&path))?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DistanceRequest {
    pub method: Method,
    pub steps: Option<usize>,
    pub cutoff: usize,
    pub lower_bound: bool,
}

impl Default for DistanceRequest {
    fn default() -> Self {
        Self { method: Method::Lanczos, steps: None, cutoff: fock::DEFAULT_CUTOFF, lower_bound: false }
    }
}

fn to_fock(r: &Resolved, cutoff: usize) -> Result<FockOperator> {
    match r {
        Resolved::Gaussian(g) => fock::gaussian_to_fock(g, cutoff),
        Resolved::Ket(k) => Ok(fock::projector(&fock::lincomb_ket_to_fock(k, cutoff)?)),
        Resolved::Operator(op) => fock::lincomb_to_fock(op, cutoff),
    }
}

/// Computes one CSV row comparing the two states of `spec`.
pub fn distance(spec: &SpecFile, req: &DistanceRequest) -> Result<Table> {
    if spec.states.len() != 2 {
        return Err(Error::Usage(format!("states: expected exactly 2 entries, got {}", spec.states.len())));
    }
    let a = spec.states[0].resolve()?;
    let b = spec.states[1].resolve()?;
    for (i, r) in [&a, &b].into_iter().enumerate() {
        if let Resolved::Gaussian(g) = r {
            let rep = g.validate();
            if !rep.is_valid() {
                return Err(Error::Usage(format!(
                    "states[{i}]: covariance matrix is not physical (uncertainty min eig {:.3e}, min eig {:.3e})",
                    rep.uncertainty_min_eig, rep.min_eig
                )));
            }
        }
    }

    let mut lanczos_kind = Cell::Missing;
    let mut value = Cell::Missing;
    let mut max_ritz = Cell::Missing;
    let mut steps_used = Cell::Missing;
    let mut breakdown = Cell::Missing;
    if req.method != Method::Oracle {
        let opts = LanczosOptions::default();
        let est = if req.lower_bound {
            let gaussian_pair = matches!((&a, &b), (Resolved::Gaussian(_), Resolved::Gaussian(_)));
            let steps = req.steps.unwrap_or(if gaussian_pair { DEFAULT_DIFFERENCE_STEPS } else { DEFAULT_PURE_MIXED_STEPS });
            let trial = match &spec.trial {
                Some(t) => t
                    .resolve()?
                    .as_ket()
                    .ok_or_else(|| Error::Usage("trial: must be a pure state".into()))?,
                None => {
                    let modes = match &a {
                        Resolved::Gaussian(g) => g.num_modes(),
                        Resolved::Ket(k) => k.num_modes(),
                        Resolved::Operator(op) => op.num_modes(),
                    };
                    let hbar = spec.states[0].hbar;
                    KetInput::Gaussian(PureGaussianKet::vacuum(modes, hbar))
                }
            };
            let (s1, s2) = if gaussian_pair {
                (a.as_state(), b.as_state())
            } else {
                (StateInput::Lincomb(a.as_operator()?), StateInput::Lincomb(b.as_operator()?))
            };
            trace_distance_lower_bound(&s1, &s2, &trial, steps, &opts)?
        } else {
            let psi = a.as_ket().ok_or_else(|| {
                Error::Usage(
                    "states[0]: the exact estimator needs a pure first state, since only then does the \
                     difference have a single positive eigenvalue; pass --lower-bound for mixed pairs"
                        .into(),
                )
            })?;
            trace_distance_pure_mixed(&psi, &b.as_state(), req.steps.unwrap_or(DEFAULT_PURE_MIXED_STEPS), &opts)?
        };
        lanczos_kind = (if req.lower_bound { "lower_bound" } else { "exact" }).into();
        value = est.value.into();
        max_ritz = est.max_ritz_history.last().copied().into();
        steps_used = est.steps_used.into();
        breakdown = est.breakdown_step().into();
    }

    let (mut oracle, mut deficit) = (Cell::Missing, Cell::Missing);
    if req.method != Method::Lanczos {
        let fa = to_fock(&a, req.cutoff)?;
        let fb = to_fock(&b, req.cutoff)?;
        let worst = fa.trace_deficit.max(fb.trace_deficit);
        if worst > fock::CUTOFF_WARNING {
            eprintln!("warning: cutoff {} loses {worst:.3e} of the trace", req.cutoff);
        }
        oracle = fock::trace_distance_exact(&fa, &fb)?.into();
        deficit = worst.into();
    }

    let mut t = Table::new([
        "estimator",
        "d_lanczos",
        "max_ritz",
        "steps",
        "breakdown",
        "d_oracle",
        "oracle_trace_deficit",
    ]);
    t.push(vec![lanczos_kind, value, max_ritz, steps_used, breakdown, oracle, deficit]);
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(json: &str) -> SpecFile {
        SpecFile::from_json(json).unwrap()
    }

    fn float(t: &Table, name: &str) -> f64 {
        match &t.rows[0][t.column(name).unwrap()] {
            Cell::Float(x) => *x,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn vacuum_against_thermal() {
        let s = spec(r#"{"states":[{"kind":"vacuum"},{"kind":"thermal","nbar":1}]}"#);
        let t = distance(&s, &DistanceRequest { method: Method::Both, ..Default::default() }).unwrap();
        assert!((float(&t, "d_lanczos") - 0.5).abs() < 1e-12);
        assert!((float(&t, "d_oracle") - 0.5).abs() < 1e-9);
        assert!(t.to_csv().starts_with("# estimator,"));
    }

    #[test]
    fn identical_states_give_zero() {
        let s = spec(r#"{"states":[{"kind":"coherent","alpha":[0.3,0.1]},{"kind":"coherent","alpha":[0.3,0.1]}]}"#);
        let t = distance(&s, &DistanceRequest::default()).unwrap();
        assert!(float(&t, "d_lanczos").abs() < 1e-10);
    }

    #[test]
    fn lossy_cat_methods_agree() {
        let s = spec(
            r#"{"states":[{"kind":"cat","alpha":[2,0],"p":2,"parity":"even"},
                          {"kind":"cat","alpha":[2,0],"p":2,"parity":"even","eta":0.3}]}"#,
        );
        let t = distance(&s, &DistanceRequest { method: Method::Both, ..Default::default() }).unwrap();
        assert!((float(&t, "d_lanczos") - float(&t, "d_oracle")).abs() < 1e-4);
    }

    #[test]
    fn mixed_first_state_needs_flag() {
        let s = spec(r#"{"states":[{"kind":"thermal","nbar":1},{"kind":"vacuum"}]}"#);
        let err = distance(&s, &DistanceRequest::default()).unwrap_err();
        assert_eq!(exit_code(&err), EXIT_INVALID);
        assert!(err.to_string().contains("--lower-bound"));
        let t = distance(&s, &DistanceRequest { lower_bound: true, method: Method::Both, ..Default::default() }).unwrap();
        assert!(float(&t, "d_lanczos") <= float(&t, "d_oracle") + 1e-6);
    }

    #[test]
    fn wrong_state_count() {
        let s = spec(r#"{"states":[{"kind":"vacuum"}]}"#);
        assert!(distance(&s, &DistanceRequest::default()).unwrap_err().to_string().contains("states"));
    }

    #[test]
    fn unphysical_state_is_rejected() {
        let s = spec(r#"{"states":[{"kind":"vacuum"},{"kind":"gaussian_raw","r":[0,0],"v":[0.5,0,0,0.5]}]}"#);
        let err = distance(&s, &DistanceRequest::default()).unwrap_err();
        assert!(err.to_string().contains("states[1]"));
    }

    #[test]
    fn cost_guard_maps_to_exit_three() {
        let e = Error::CostGuard { requested: 30, ceiling: 14, terms: 1e9 };
        assert_eq!(exit_code(&e), EXIT_COST_GUARD);
    }
}
