//! Study configuration: flat `key = value` files plus overrides.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use hpcouple_core::geometry::LShapeConfig;
use hpcouple_core::nitsche::DEFAULT_ETA0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Example {
    SquareSmooth,
    LShape(LShapeConfig),
}

impl FromStr for Example {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "square_smooth" | "example1" => Ok(Example::SquareSmooth),
            "lshape_config1" => Ok(Example::LShape(LShapeConfig::Encapsulated)),
            "lshape_config2" => Ok(Example::LShape(LShapeConfig::Split)),
            _ => err(format!(
                "unknown example '{s}' (expected square_smooth, lshape_config1 or lshape_config2)"
            )),
        }
    }
}

impl fmt::Display for Example {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Example::SquareSmooth => "square_smooth",
            Example::LShape(LShapeConfig::Encapsulated) => "lshape_config1",
            Example::LShape(LShapeConfig::Split) => "lshape_config2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    H,
    P,
    Hp,
}

impl FromStr for Mode {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "h" => Ok(Mode::H),
            "p" => Ok(Mode::P),
            "hp" => Ok(Mode::Hp),
            _ => err(format!("unknown mode '{s}' (expected h, p or hp)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::H => "h",
            Mode::P => "p",
            Mode::Hp => "hp",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub example: Example,
    pub mode: Mode,
    pub eta0: f64,
    pub sigma_fe: f64,
    pub sigma_be: f64,
    pub mu_fe: f64,
    pub mu_be: f64,
    /// hp-sweeps: layers `1..=max_layers`.
    pub max_layers: u32,
    /// p-sweeps: degrees `1..=max_p`.
    pub max_p: u32,
    /// h-sweeps: number of meshes.
    pub max_refinements: u32,
    /// `h_BE / h_FE` at the interface.
    pub fe_be_ratio: f64,
    /// Degree of the h-sweeps.
    pub degree: u32,
    /// FE mesh size of the fixed p-sweep meshes.
    pub fe_h: f64,
    /// FE mesh size of the coarsest h-sweep mesh; halved each step.
    pub h0: f64,
    pub bem_scale: Option<f64>,
    pub out: Option<PathBuf>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            example: Example::SquareSmooth,
            mode: Mode::P,
            eta0: DEFAULT_ETA0,
            sigma_fe: 0.5,
            sigma_be: 0.5,
            mu_fe: 1.0,
            mu_be: 1.0,
            max_layers: 6,
            max_p: 6,
            max_refinements: 5,
            fe_be_ratio: 0.8,
            degree: 1,
            fe_h: 0.25,
            h0: 0.5,
            bem_scale: None,
            out: None,
        }
    }
}

/// Decimal or `a/b`.
pub fn parse_ratio(s: &str) -> Result<f64, ConfigError> {
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let (a, b) = (parse_f64("ratio", a)?, parse_f64("ratio", b)?);
            if b == 0.0 {
                return err("ratio with zero denominator");
            }
            a / b
        }
        None => parse_f64("ratio", s)?,
    };
    Ok(v)
}

fn parse_f64(key: &str, s: &str) -> Result<f64, ConfigError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| ConfigError(format!("{key}: '{s}' is not a number")))
}

fn parse_u32(key: &str, s: &str) -> Result<u32, ConfigError> {
    s.trim()
        .parse::<u32>()
        .map_err(|_| ConfigError(format!("{key}: '{s}' is not a non-negative integer")))
}

impl StudyConfig {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key.trim() {
            "example" => self.example = v.parse()?,
            "mode" => self.mode = v.parse()?,
            "eta0" => self.eta0 = parse_f64(key, v)?,
            "sigma" => {
                self.sigma_fe = parse_f64(key, v)?;
                self.sigma_be = self.sigma_fe;
            }
            "sigma_fe" => self.sigma_fe = parse_f64(key, v)?,
            "sigma_be" => self.sigma_be = parse_f64(key, v)?,
            "mu" => {
                self.mu_fe = parse_f64(key, v)?;
                self.mu_be = self.mu_fe;
            }
            "mu_fe" => self.mu_fe = parse_f64(key, v)?,
            "mu_be" => self.mu_be = parse_f64(key, v)?,
            "max_layers" | "layers" => self.max_layers = parse_u32(key, v)?,
            "max_p" => self.max_p = parse_u32(key, v)?,
            "max_refinements" => self.max_refinements = parse_u32(key, v)?,
            "fe_be_ratio" => self.fe_be_ratio = parse_ratio(v)?,
            "degree" => self.degree = parse_u32(key, v)?,
            "fe_h" => self.fe_h = parse_f64(key, v)?,
            "h0" => self.h0 = parse_f64(key, v)?,
            "bem_scale" => {
                self.bem_scale = match v {
                    "auto" | "" => None,
                    _ => Some(parse_f64(key, v)?),
                }
            }
            "out" => self.out = Some(PathBuf::from(v)),
            other => return err(format!("unknown key '{other}'")),
        }
        Ok(())
    }

    /// Parses a `key = value` file; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut c = StudyConfig::default();
        c.apply(text)?;
        Ok(c)
    }

    pub fn apply(&mut self, text: &str) -> Result<(), ConfigError> {
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return err(format!("line {}: expected key = value", no + 1));
            };
            self.set(k, v)
                .map_err(|e| ConfigError(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return err("eta0 must be positive");
        }
        for (k, s) in [("sigma_fe", self.sigma_fe), ("sigma_be", self.sigma_be)] {
            if !(s > 0.0 && s < 1.0) {
                return err(format!("{k} must lie in (0, 1)"));
            }
        }
        for (k, m) in [("mu_fe", self.mu_fe), ("mu_be", self.mu_be)] {
            if !(m > 0.0 && m.is_finite()) {
                return err(format!("{k} must be positive"));
            }
        }
        if !(self.fe_be_ratio > 0.0 && self.fe_be_ratio.is_finite()) {
            return err("fe_be_ratio must be positive");
        }
        for (k, h) in [("fe_h", self.fe_h), ("h0", self.h0)] {
            if !(h > 0.0 && h <= 2.0) {
                return err(format!("{k} must lie in (0, 2]"));
            }
        }
        if self.degree == 0 {
            return err("degree must be at least 1");
        }
        let steps = match self.mode {
            Mode::H => self.max_refinements,
            Mode::P => self.max_p,
            Mode::Hp => self.max_layers,
        };
        if steps == 0 {
            return err("the sweep has no steps");
        }
        if self.mode == Mode::Hp && self.example == Example::SquareSmooth {
            return err("hp sweeps need an L-shape example");
        }
        if self.example != Example::SquareSmooth {
            for (key, h) in [("fe_h", self.fe_h), ("h0", self.h0)] {
                let k = (1.0 / h).log2();
                if (k - k.round()).abs() > 1e-9 || k < -1e-9 {
                    return err(format!("L-shape meshes need {key} = 2^-k, k >= 0"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_file_with_comments() {
        let c = StudyConfig::parse(
            "# sweep\nexample = lshape_config2\nmode=hp\nsigma = 0.3 # both sides\nmu_be=1.5\nfe_be_ratio = 4/5\n",
        )
        .unwrap();
        assert_eq!(c.example, Example::LShape(LShapeConfig::Split));
        assert_eq!(c.mode, Mode::Hp);
        assert_eq!((c.sigma_fe, c.sigma_be, c.mu_fe, c.mu_be), (0.3, 0.3, 1.0, 1.5));
        assert!((c.fe_be_ratio - 0.8).abs() < 1e-15);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_bad_input() {
        assert!(StudyConfig::parse("example = cube").is_err());
        assert!(StudyConfig::parse("no equals sign").is_err());
        assert!(StudyConfig::parse("max_p = -1").is_err());
        assert!(StudyConfig::parse("fe_be_ratio = 1/0").is_err());
        let mut c = StudyConfig {
            mode: Mode::Hp,
            ..StudyConfig::default()
        };
        assert!(c.validate().is_err());
        c.example = Example::LShape(LShapeConfig::Encapsulated);
        c.sigma_be = 1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn example_names_round_trip() {
        for s in ["square_smooth", "lshape_config1", "lshape_config2"] {
            assert_eq!(s.parse::<Example>().unwrap().to_string(), s);
        }
    }
}
