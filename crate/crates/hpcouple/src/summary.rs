//! Rate fits over a finished sweep.

use std::fmt::Write as _;

use hpcouple_core::analysis::{
    fit_algebraic_rate, fit_exponential_rate, fit_line, ConvergenceRecord, DofRoot, RateVariable,
};

use crate::config::Mode;

/// Guesses the sweep kind. Graded meshes (`σ > 0`) mean hp; otherwise a
/// fixed degree is an h-sweep and a fixed `h` a p-sweep. The largest element
/// of an hp mesh stays put, so `h_max` alone cannot tell hp from p.
pub fn infer_mode(records: &[ConvergenceRecord]) -> Mode {
    if records.iter().any(|r| r.sigma > 0.0) {
        return Mode::Hp;
    }
    let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
    let fixed_p = records.windows(2).all(|w| w[0].p_max == w[1].p_max);
    let fixed_h = records.windows(2).all(|w| same(w[0].h_max, w[1].h_max));
    if fixed_p && !fixed_h {
        Mode::H
    } else if fixed_h && !fixed_p {
        Mode::P
    } else {
        Mode::Hp
    }
}

/// Optional pass/fail thresholds.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Expectations {
    /// Admissible algebraic rate, inclusive.
    pub rate: Option<(f64, f64)>,
    pub min_correlation: Option<f64>,
    /// Root the hp expectations apply to.
    pub root: Option<DofRoot>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Fit {
    Algebraic {
        variable: RateVariable,
        rate: f64,
        n_rate: f64,
        correlation: f64,
    },
    Exponential {
        root: DofRoot,
        b: f64,
        correlation: f64,
    },
    /// `e ~ exp(-b p)`, the smooth-solution p-sweep.
    DegreeExponential {
        b: f64,
        correlation: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub mode: Mode,
    pub records: usize,
    pub fits: Vec<Fit>,
    /// `None` without expectations.
    pub passed: Option<bool>,
}

pub fn summarize(records: &[ConvergenceRecord], expect: &Expectations) -> hpcouple_core::Result<Summary> {
    let mode = infer_mode(records);
    let mut fits = Vec::new();
    match mode {
        Mode::H | Mode::P => {
            let variable = if mode == Mode::H {
                RateVariable::MeshSize
            } else {
                RateVariable::Degree
            };
            let r = fit_algebraic_rate(records, variable)?;
            fits.push(Fit::Algebraic {
                variable,
                rate: r.rate,
                n_rate: r.n_rate,
                correlation: r.correlation,
            });
            if mode == Mode::P {
                let p: Vec<f64> = records.iter().map(|r| r.p_max as f64).collect();
                let e: Vec<f64> = records.iter().map(|r| r.errors.total.ln()).collect();
                let f = fit_line(&p, &e)?;
                fits.push(Fit::DegreeExponential {
                    b: -f.slope,
                    correlation: f.correlation.abs(),
                });
            }
        }
        Mode::Hp => {
            let n: Vec<usize> = records.iter().map(|r| r.n()).collect();
            let e: Vec<f64> = records.iter().map(|r| r.errors.total).collect();
            for root in [DofRoot::Square, DofRoot::Cube] {
                let r = fit_exponential_rate(&n, &e, root)?;
                fits.push(Fit::Exponential {
                    root,
                    b: r.b,
                    correlation: r.correlation,
                });
            }
        }
    }
    let has_expect = expect.rate.is_some() || expect.min_correlation.is_some();
    let passed = has_expect.then(|| {
        fits.iter().all(|f| match *f {
            Fit::Algebraic { rate, correlation, .. } => {
                expect.rate.is_none_or(|(lo, hi)| rate >= lo && rate <= hi)
                    && expect.min_correlation.is_none_or(|c| correlation >= c)
            }
            Fit::Exponential { root, b, correlation } => {
                if expect.root.is_some_and(|r| r != root) {
                    return true;
                }
                b > 0.0 && expect.min_correlation.is_none_or(|c| correlation >= c)
            }
            // Informational next to the algebraic p fit.
            Fit::DegreeExponential { .. } => true,
        })
    });
    Ok(Summary {
        mode,
        records: records.len(),
        fits,
        passed,
    })
}

impl Summary {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mode {} ({} records)", self.mode, self.records);
        for f in &self.fits {
            let _ = match *f {
                Fit::Algebraic {
                    variable,
                    rate,
                    n_rate,
                    correlation,
                } => {
                    let name = match variable {
                        RateVariable::MeshSize => "h",
                        RateVariable::Degree => "p",
                    };
                    writeln!(s, "{name}-rate {rate:.3}  N-rate {n_rate:.3}  corr {correlation:.4}")
                }
                Fit::Exponential { root, b, correlation } => {
                    let name = match root {
                        DofRoot::Square => "sqrt(N)",
                        DofRoot::Cube => "cbrt(N)",
                    };
                    writeln!(s, "exp-rate in {name}: b {b:.4}  corr {correlation:.4}")
                }
                Fit::DegreeExponential { b, correlation } => {
                    writeln!(s, "exp-rate in p: b {b:.4}  corr {correlation:.4}")
                }
            };
        }
        if let Some(p) = self.passed {
            let _ = writeln!(s, "{}", if p { "PASS" } else { "FAIL" });
        }
        s
    }
}
