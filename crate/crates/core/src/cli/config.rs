//! Sectioned `key = value` run configuration.
//!
//! ```text
//! [mesh]
//! nx = 32
//! ny = 32
//! [material]
//! kappa1 = 1e-3
//! [bc]
//! support = shear
//! rate = 0.5
//! ```
//!
//! Blank lines and `#` comments are ignored. Every key is optional; missing
//! keys keep their defaults.

use std::path::Path;

use crate::discretization::{Discretization, Mesh, Side, Workers};
use crate::error::{Error, Result};
use crate::materials::MaterialParams;
use crate::state::{init_state, BoundaryData, HotStrip, InitialConditions, SimState, SupportMotion};
use crate::stepper::{StepConfig, Solver};
use crate::tensor::Mat;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshSpec {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for MeshSpec {
    fn default() -> Self {
        MeshSpec {
            lx: 1.0,
            ly: 1.0,
            nx: 16,
            ny: 16,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OutputSpec {
    /// snapshot cadence in steps; 0 keeps the initial and final state only
    pub snapshot_every: usize,
}


/// Parameters of the scripted studies.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchSpec {
    /// plastic-gradient moduli of the shear-band scan
    pub kappa1: Vec<f64>,
    /// sampling times of the band width
    pub times: Vec<f64>,
    /// gradient exponent used by the shear-band scan (may be 2)
    pub q: f64,
    /// hyperstress modulus used by the shear-band scan
    pub kappa0: f64,
    /// regularization levels of the Yosida study
    pub eps: Vec<f64>,
    /// mesh resolutions of the refinement study
    pub nx: Vec<usize>,
}

impl Default for BenchSpec {
    fn default() -> Self {
        BenchSpec {
            kappa1: vec![1e-3, 2e-3, 4e-3, 1e-2],
            times: vec![0.2, 0.3, 0.4, 0.5, 0.6],
            q: 2.0,
            kappa0: 1e-6,
            eps: vec![4e-2, 2e-2, 1e-2, 5e-3],
            nx: vec![8, 16, 32, 64],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mesh: MeshSpec,
    pub params: MaterialParams,
    pub bc: BoundaryData,
    /// sides carrying the boundary springs
    pub spring_sides: Vec<Side>,
    pub ic: InitialConditions,
    pub step: StepConfig,
    pub steps: usize,
    pub workers: usize,
    pub output: OutputSpec,
    pub bench: BenchSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mesh: MeshSpec::default(),
            params: MaterialParams::default(),
            bc: BoundaryData::default(),
            spring_sides: Side::ALL.to_vec(),
            ic: InitialConditions::default(),
            step: StepConfig::default(),
            steps: 100,
            workers: 1,
            output: OutputSpec::default(),
            bench: BenchSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let m = &self.mesh;
        if !(m.lx > 0.0 && m.ly > 0.0 && m.lx.is_finite() && m.ly.is_finite()) {
            return Err(Error::config("mesh", "extents must be positive"));
        }
        if m.nx < 2 || m.ny < 2 {
            return Err(Error::config("mesh", "at least 2 elements per direction"));
        }
        self.params.validate(2)?;
        self.bc.validate()?;
        self.ic.validate()?;
        self.step.validate()?;
        if self.workers == 0 {
            return Err(Error::config("workers", "must be at least 1"));
        }
        let b = &self.bench;
        if b.kappa1.iter().chain(&b.times).chain(&b.eps).any(|v| !(*v > 0.0)) {
            return Err(Error::config("bench", "kappa1, times and eps entries must be positive"));
        }
        if !(b.q > 1.0) || !(b.kappa0 > 0.0) {
            return Err(Error::config("bench", "q must exceed 1 and kappa0 must be positive"));
        }
        if b.nx.iter().any(|n| *n < 2) {
            return Err(Error::config("bench.nx", "resolutions must be at least 2"));
        }
        Ok(())
    }

    /// Solver and initial state for this configuration.
    pub fn build(&self, workers: usize) -> Result<(Solver, SimState)> {
        let m = &self.mesh;
        let mesh = Mesh::new(m.lx, m.ly, m.nx, m.ny)?;
        let disc = Discretization::new(mesh, &self.params, &self.spring_sides, Workers::new(workers)?)?;
        let solver = Solver::new(disc, self.params.clone(), self.bc, self.step)?;
        let state = init_state(&solver.disc, &self.params, &self.ic, self.step.eps)?;
        Ok((solver, state))
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

fn num(line: usize, key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| Error::config(format!("line {line}: {key}"), format!("expected a number, got '{v}'")))
}

fn count(line: usize, key: &str, v: &str) -> Result<usize> {
    v.parse::<usize>().map_err(|_| {
        Error::config(format!("line {line}: {key}"), format!("expected a nonnegative integer, got '{v}'"))
    })
}

fn list<T>(line: usize, key: &str, v: &str, f: fn(usize, &str, &str) -> Result<T>) -> Result<Vec<T>> {
    v.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| f(line, key, s))
        .collect()
}

/// Parses and validates a configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut section = String::new();
    let mut support = "identity".to_string();
    let (mut rate, mut t_stop) = (0.0, f64::INFINITY);
    let mut hot = HotStrip {
        amplitude: 0.0,
        width: 0.1,
    };

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| Error::config(format!("line {line}"), "unterminated section header"))?;
            section = name.trim().to_string();
            if !["mesh", "material", "bc", "ic", "stepper", "output", "bench"].contains(&section.as_str()) {
                return Err(Error::config(format!("line {line}"), format!("unknown section [{section}]")));
            }
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {line}"), "expected 'key = value'"))?;
        let (key, v) = (key.trim(), value.trim());
        let p = &mut cfg.params;
        match (section.as_str(), key) {
            ("mesh", "lx") => cfg.mesh.lx = num(line, key, v)?,
            ("mesh", "ly") => cfg.mesh.ly = num(line, key, v)?,
            ("mesh", "nx") => cfg.mesh.nx = count(line, key, v)?,
            ("mesh", "ny") => cfg.mesh.ny = count(line, key, v)?,
            ("material", "rho") => p.rho = num(line, key, v)?,
            ("material", "lambda") => p.lambda = num(line, key, v)?,
            ("material", "mu") => p.mu = num(line, key, v)?,
            ("material", "kappa0") => p.kappa0 = num(line, key, v)?,
            ("material", "kappa1") => p.kappa1 = num(line, key, v)?,
            ("material", "q") => p.q = num(line, key, v)?,
            ("material", "delta") => p.delta = num(line, key, v)?,
            ("material", "r") => p.r = num(line, key, v)?,
            ("material", "sigma0") => p.sigma0 = num(line, key, v)?,
            ("material", "theta_ref") => p.theta_ref = num(line, key, v)?,
            ("material", "mu_v") => p.mu_v = num(line, key, v)?,
            ("material", "cv0") => p.cv0 = num(line, key, v)?,
            ("material", "k0") => p.k0 = num(line, key, v)?,
            ("material", "n_spring") => p.n_spring = num(line, key, v)?,
            ("material", "k_heat") => p.k_heat = num(line, key, v)?,
            ("bc", "support") => support = v.to_ascii_lowercase(),
            ("bc", "rate") => rate = num(line, key, v)?,
            ("bc", "t_stop") => t_stop = num(line, key, v)?,
            ("bc", "theta_flat") => cfg.bc.theta_flat = num(line, key, v)?,
            ("bc", "gravity") => {
                let g = list(line, key, v, num)?;
                if g.len() != 2 {
                    return Err(Error::config(format!("line {line}: gravity"), "expected two components"));
                }
                cfg.bc.gravity = [g[0], g[1]];
            }
            ("bc", "spring_sides") => {
                cfg.spring_sides = v
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty() && *s != "none")
                    .map(|s| {
                        Side::parse(s)
                            .ok_or_else(|| Error::config(format!("line {line}: spring_sides"), format!("unknown side '{s}'")))
                    })
                    .collect::<Result<_>>()?;
            }
            ("ic", "theta0") => cfg.ic.theta0 = num(line, key, v)?,
            ("ic", "v0") => {
                let u = list(line, key, v, num)?;
                if u.len() != 2 {
                    return Err(Error::config(format!("line {line}: v0"), "expected two components"));
                }
                cfg.ic.v0 = [u[0], u[1]];
            }
            ("ic", "p0") => {
                let u = list(line, key, v, num)?;
                if u.len() != 4 {
                    return Err(Error::config(format!("line {line}: p0"), "expected four row-major components"));
                }
                cfg.ic.p0 = Mat::from_row_slice(2, &u);
            }
            ("ic", "shear_velocity") => cfg.ic.shear_velocity = num(line, key, v)?,
            ("ic", "hot_amplitude") => hot.amplitude = num(line, key, v)?,
            ("ic", "hot_width") => hot.width = num(line, key, v)?,
            ("stepper", "dt") => cfg.step.dt = num(line, key, v)?,
            ("stepper", "eps") => cfg.step.eps = num(line, key, v)?,
            ("stepper", "lin_tol") => cfg.step.lin_tol = num(line, key, v)?,
            ("stepper", "heat_tol") => cfg.step.heat_tol = num(line, key, v)?,
            ("stepper", "max_iter") => cfg.step.max_iter = count(line, key, v)?,
            ("stepper", "steps") => cfg.steps = count(line, key, v)?,
            ("stepper", "workers") => cfg.workers = count(line, key, v)?,
            ("output", "snapshot_every") => cfg.output.snapshot_every = count(line, key, v)?,
            ("bench", "kappa1") => cfg.bench.kappa1 = list(line, key, v, num)?,
            ("bench", "times") => cfg.bench.times = list(line, key, v, num)?,
            ("bench", "q") => cfg.bench.q = num(line, key, v)?,
            ("bench", "kappa0") => cfg.bench.kappa0 = num(line, key, v)?,
            ("bench", "eps") => cfg.bench.eps = list(line, key, v, num)?,
            ("bench", "nx") => cfg.bench.nx = list(line, key, v, count)?,
            ("", _) => {
                return Err(Error::config(format!("line {line}: {key}"), "key outside of any section"));
            }
            (s, _) => {
                return Err(Error::config(format!("line {line}: {key}"), format!("unknown key in [{s}]")));
            }
        }
    }

    cfg.bc.y_flat = match support.as_str() {
        "identity" | "fixed" => SupportMotion::Identity,
        "shear" => SupportMotion::Shear { rate, t_stop },
        "stretch" => SupportMotion::Stretch { rate, t_stop },
        other => return Err(Error::config("bc.support", format!("unknown support motion '{other}'"))),
    };
    if !rate.is_finite() || !(t_stop >= 0.0) {
        return Err(Error::config("bc", "rate must be finite and t_stop nonnegative"));
    }
    if hot.amplitude != 0.0 {
        cfg.ic.hot_strip = Some(hot);
    }
    cfg.validate()?;
    Ok(cfg)
}
