//! Run configuration: JSON file with flat keys, overridden by flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{gfd, GridSpec};
use crate::potential::Potential;
use crate::verify::suites::SuiteContext;
use crate::weights::Weight;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Dimension `n`.
    pub n: usize,
    /// Points per axis `N`.
    #[serde(rename = "N")]
    pub points: usize,
    /// Half width `L` of the box `[-L, L]^n`.
    #[serde(rename = "L")]
    pub half_width: f64,
    /// `one`, `square_norm`, `const:<c>` or a GFD manifest path.
    pub potential: String,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub theta: f64,
    pub delta: f64,
    pub eta: Option<f64>,
    pub l0: f64,
    pub lambda: Option<f64>,
    /// `one`, `decay:<gamma>`, `radial:<a>` or a GFD manifest path.
    pub weight: String,
    /// GFD manifest of the input function; a seeded random field if absent.
    pub input: Option<PathBuf>,
    /// `cube`, `dyadic`, `centered` or `phi`.
    pub variant: String,
    pub out: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 2,
            points: 64,
            half_width: 2.0,
            potential: "one".into(),
            p: 2.0,
            q: 2.0,
            r: 2.0,
            theta: 1.0,
            delta: 0.5,
            eta: None,
            l0: 1.0,
            lambda: None,
            weight: "one".into(),
            input: None,
            variant: "cube".into(),
            out: PathBuf::from("out"),
            seed: 0,
        }
    }
}

/// Reads a config file; an empty file gives the defaults.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let cfg: RunConfig = if text.trim().is_empty() {
        RunConfig::default()
    } else {
        serde_json::from_str(&text)?
    };
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.spec()?;
        if !(self.theta >= 0.0) {
            return Err(invalid("theta", format!("must be >= 0, got {}", self.theta)));
        }
        if !(self.r > 1.0) {
            return Err(invalid("r", format!("must be > 1, got {}", self.r)));
        }
        if !(self.q > 1.0) {
            return Err(invalid("q", format!("must be > 1, got {}", self.q)));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(invalid("delta", format!("must lie in (0, 1], got {}", self.delta)));
        }
        if !(self.l0 > 0.0) {
            return Err(invalid("l0", format!("must be > 0, got {}", self.l0)));
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0) {
                return Err(invalid("lambda", format!("must be > 0, got {l}")));
            }
        }
        if let Some(e) = self.eta {
            if !(e >= 0.0) {
                return Err(invalid("eta", format!("must be >= 0, got {e}")));
            }
        }
        if !["cube", "dyadic", "centered", "phi"].contains(&self.variant.as_str()) {
            return Err(invalid("variant", format!("unknown variant `{}`", self.variant)));
        }
        Ok(())
    }

    pub fn spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.n, self.points, self.half_width)
    }

    pub fn suite_context(&self) -> SuiteContext {
        SuiteContext {
            seed: self.seed,
            dim: self.n,
            points: self.points,
            half_width: self.half_width,
            theta: self.theta,
        }
    }

    pub fn potential(&self) -> Result<Potential> {
        let spec = self.spec()?;
        match self.potential.as_str() {
            "one" => Ok(Potential::one(spec)),
            "square_norm" => Potential::square_norm(spec, 1.0),
            s => {
                if let Some(c) = s.strip_prefix("const:") {
                    let c: f64 = c.parse().map_err(|_| invalid("potential", format!("bad constant `{c}`")))?;
                    return Potential::constant(spec, c);
                }
                let f = gfd::read(Path::new(s))?;
                spec.check_same(f.spec())?;
                Potential::custom(f)
            }
        }
    }

    pub fn weight(&self) -> Result<Weight> {
        let spec = self.spec()?;
        let num = |s: &str| -> Result<f64> { s.parse().map_err(|_| invalid("weight", format!("bad exponent `{s}`"))) };
        match self.weight.as_str() {
            "one" => Weight::constant(spec, 1.0),
            s if s.starts_with("decay:") => Ok(Weight::radial_power(spec, -(spec.dim as f64 + num(&s[6..])?))),
            s if s.starts_with("radial:") => Ok(Weight::radial_power(spec, num(&s[7..])?)),
            s => {
                let f = gfd::read(Path::new(s))?;
                spec.check_same(f.spec())?;
                Weight::new(f)
            }
        }
    }

    /// Whether the path-valued selectors name files that exist.
    pub fn check_paths(&self) -> Result<()> {
        for (name, p) in [("potential", &self.potential), ("weight", &self.weight)] {
            let builtin = ["one", "square_norm"].contains(&p.as_str())
                || ["const:", "decay:", "radial:"].iter().any(|k| p.starts_with(k));
            if !builtin && !Path::new(p).exists() {
                return Err(invalid(name, format!("no such builtin or file `{p}`")));
            }
        }
        if let Some(p) = &self.input {
            if !p.exists() {
                return Err(Error::Io(std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    format!("input `{}` not found", p.display()),
                )));
            }
        }
        Ok(())
    }
}
