//! Refinement sweeps and their CSV form.

use std::io::{Read, Write};
use std::time::Instant;

use hpcouple_core::analysis::{ConvergenceRecord, DofRoot, ErrorBreakdown};
use hpcouple_core::geometry::LShapeConfig;
use hpcouple_core::problem::{example1, example2_hp, example2_uniform, run_with, HpGrading, ProblemSetup, SolveOptions};
use hpcouple_core::system::Factorization;

use crate::config::{Example, Mode, StudyConfig};
use crate::parallel::par_assemble_layers;

/// The meshes and degrees of step `k` (0-based) of a sweep.
pub fn step_setup(cfg: &StudyConfig, k: u32) -> hpcouple_core::Result<ProblemSetup> {
    let ratio = cfg.fe_be_ratio;
    match (cfg.example, cfg.mode) {
        (Example::SquareSmooth, Mode::H) => {
            let h = cfg.h0 * 0.5f64.powi(k as i32);
            example1(h, ratio * h, cfg.degree)
        }
        (Example::SquareSmooth, Mode::P) => example1(cfg.fe_h, ratio * cfg.fe_h, k + 1),
        (Example::LShape(c), Mode::H) => {
            let levels = (1.0 / cfg.h0).log2().round() as u32 + k;
            let h = 0.5f64.powi(levels as i32);
            example2_uniform(c, levels, ratio * h, cfg.degree)
        }
        (Example::LShape(c), Mode::P) => {
            let levels = (1.0 / cfg.fe_h).log2().round().max(0.0) as u32;
            example2_uniform(c, levels, ratio * cfg.fe_h, k + 1)
        }
        (Example::LShape(c), Mode::Hp) => example2_hp(
            c,
            HpGrading {
                layers: k + 1,
                fe_sigma: cfg.sigma_fe,
                fe_mu: cfg.mu_fe,
                be_sigma: cfg.sigma_be,
                be_mu: cfg.mu_be,
            },
        ),
        (Example::SquareSmooth, Mode::Hp) => Err(hpcouple_core::Error::Parameter(
            "hp sweeps need an L-shape example".into(),
        )),
    }
}

pub fn n_steps(cfg: &StudyConfig) -> u32 {
    match cfg.mode {
        Mode::H => cfg.max_refinements,
        Mode::P => cfg.max_p,
        Mode::Hp => cfg.max_layers,
    }
}

/// Root of `N` the hp error is expected to decay exponentially in.
pub fn dof_root(example: Example) -> DofRoot {
    match example {
        Example::LShape(LShapeConfig::Split) => DofRoot::Cube,
        _ => DofRoot::Square,
    }
}

/// One solved step with the solver diagnostics.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub record: ConvergenceRecord,
    pub residual: f64,
    pub asymmetry: f64,
    pub factorization: Factorization,
    pub below_theory: bool,
}

pub fn solve_step(cfg: &StudyConfig, setup: &ProblemSetup, step: usize) -> hpcouple_core::Result<StepResult> {
    let opts = SolveOptions {
        eta0: cfg.eta0,
        bem_scale: cfg.bem_scale,
    };
    let t = Instant::now();
    let out = run_with(setup, &opts, &par_assemble_layers)?;
    let study = format!("{}-{}", cfg.example, cfg.mode);
    let mut record = out.record(setup, &study, step);
    record.wall_time = t.elapsed().as_secs_f64();
    Ok(StepResult {
        record,
        residual: out.residual,
        asymmetry: out.asymmetry,
        factorization: out.factorization,
        below_theory: out.below_theory,
    })
}

/// Runs all steps of the sweep; `progress` sees each finished step.
pub fn run_study(
    cfg: &StudyConfig,
    mut progress: impl FnMut(&StepResult),
) -> hpcouple_core::Result<Vec<StepResult>> {
    let mut out = Vec::new();
    for k in 0..n_steps(cfg) {
        let setup = step_setup(cfg, k)?;
        let r = solve_step(cfg, &setup, k as usize)?;
        progress(&r);
        out.push(r);
    }
    Ok(out)
}

pub const CSV_HEADER: [&str; 13] = [
    "step",
    "N",
    "N_FE",
    "N_BE",
    "h_max",
    "p_max",
    "sigma",
    "mu",
    "err_total",
    "err_fe",
    "err_be",
    "err_jump",
    "rate_running",
];

/// Rate between consecutive records: algebraic in `h` or `p`, or the
/// exponential decay constant in `N^θ` for hp sweeps.
pub fn running_rate(mode: Mode, root: DofRoot, prev: &ConvergenceRecord, cur: &ConvergenceRecord) -> Option<f64> {
    let de = (prev.errors.total / cur.errors.total).ln();
    let dx = match mode {
        Mode::H => (prev.h_max / cur.h_max).ln(),
        Mode::P => (cur.p_max as f64 / prev.p_max as f64).ln(),
        Mode::Hp => {
            let t = root.exponent();
            (cur.n() as f64).powf(t) - (prev.n() as f64).powf(t)
        }
    };
    (dx.abs() > 0.0 && de.is_finite()).then(|| de / dx)
}

/// Writes the records as CSV. Wall times are left out so that reruns are
/// byte-identical.
pub fn write_csv<W: Write>(w: W, mode: Mode, root: DofRoot, records: &[ConvergenceRecord]) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(CSV_HEADER)?;
    for (i, r) in records.iter().enumerate() {
        let rate = match i {
            0 => String::new(),
            _ => running_rate(mode, root, &records[i - 1], r).map_or(String::new(), |v| format!("{v:.6}")),
        };
        wr.write_record([
            r.step.to_string(),
            r.n().to_string(),
            r.n_fe.to_string(),
            r.n_be.to_string(),
            format!("{:.12e}", r.h_max),
            r.p_max.to_string(),
            format!("{}", r.sigma),
            format!("{}", r.mu),
            format!("{:.12e}", r.errors.total),
            format!("{:.12e}", r.errors.fe_energy),
            format!("{:.12e}", r.errors.be_energy),
            format!("{:.12e}", r.errors.jump),
            rate,
        ])?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Debug)]
pub enum CsvError {
    Io(csv::Error),
    Format(String),
}

impl std::fmt::Display for CsvError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CsvError::Io(e) => write!(f, "{e}"),
            CsvError::Format(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CsvError {}

impl From<csv::Error> for CsvError {
    fn from(e: csv::Error) -> Self {
        CsvError::Io(e)
    }
}

/// Reads records written by [`write_csv`]. `N = N_FE + N_BE` is checked.
pub fn read_csv<R: Read>(r: R) -> Result<Vec<ConvergenceRecord>, CsvError> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CsvError::Format(format!("missing column '{name}'")))
    };
    let idx: Vec<usize> = CSV_HEADER[..12].iter().map(|c| col(c)).collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for (line, row) in rd.records().enumerate() {
        let row = row?;
        let field = |i: usize| row.get(idx[i]).unwrap_or("").trim();
        let bad = |i: usize| CsvError::Format(format!("row {}: bad value in '{}'", line + 1, CSV_HEADER[i]));
        let int = |i: usize| field(i).parse::<usize>().map_err(|_| bad(i));
        let real = |i: usize| field(i).parse::<f64>().map_err(|_| bad(i));
        let rec = ConvergenceRecord {
            study: String::new(),
            step: int(0)?,
            n_fe: int(2)?,
            n_be: int(3)?,
            h_max: real(4)?,
            p_max: int(5)? as u32,
            sigma: real(6)?,
            mu: real(7)?,
            layers: 0,
            errors: ErrorBreakdown {
                total: real(8)?,
                fe_energy: real(9)?,
                be_energy: real(10)?,
                jump: real(11)?,
            },
            wall_time: 0.0,
        };
        if int(1)? != rec.n() {
            return Err(CsvError::Format(format!("row {}: N != N_FE + N_BE", line + 1)));
        }
        out.push(rec);
    }
    if out.is_empty() {
        return Err(CsvError::Format("no records".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(step: usize, h: f64, p: u32, n: usize, e: f64) -> ConvergenceRecord {
        ConvergenceRecord {
            study: String::new(),
            step,
            n_fe: n,
            n_be: 3,
            h_max: h,
            p_max: p,
            sigma: 0.0,
            mu: 0.0,
            layers: 0,
            errors: ErrorBreakdown::new(e, 0.0, 0.0),
            wall_time: 1.5,
        }
    }

    #[test]
    fn csv_round_trip() {
        let recs = vec![rec(0, 0.5, 1, 10, 0.1), rec(1, 0.25, 1, 40, 0.05)];
        let mut buf = Vec::new();
        write_csv(&mut buf, Mode::H, DofRoot::Square, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("step,N,N_FE,N_BE,h_max,p_max,sigma,mu,err_total,err_fe,err_be,err_jump,rate_running\n"));
        assert!(text.lines().nth(2).unwrap().ends_with(",1.000000"));
        let back = read_csv(&buf[..]).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].n(), 43);
        assert_eq!(back[1].errors.total, 0.05);
    }

    #[test]
    fn malformed_csv_is_rejected() {
        assert!(read_csv("step,N\n".as_bytes()).is_err());
        let header = CSV_HEADER.join(",");
        assert!(read_csv(format!("{header}\n").as_bytes()).is_err());
        let bad_n = format!("{header}\n0,5,1,1,0.5,1,0,0,1,1,0,0,\n");
        assert!(read_csv(bad_n.as_bytes()).is_err());
    }

    #[test]
    fn single_step_has_no_rate() {
        let mut buf = Vec::new();
        write_csv(&mut buf, Mode::H, DofRoot::Square, &[rec(0, 0.5, 1, 10, 0.1)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().ends_with(','));
    }
}
