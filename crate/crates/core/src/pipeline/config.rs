//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::phantoms::LineProfile;
use crate::solver::{LambdaSchedule, Mode, Regularizer, SolverOptions};
use crate::windows::GaborWindow;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Component {
    Points,
    Line,
    Texture,
}

impl Component {
    pub fn name(&self) -> &'static str {
        match self {
            Component::Points => "points",
            Component::Line => "line",
            Component::Texture => "texture",
        }
    }

    pub fn frame_name(&self) -> &'static str {
        match self {
            Component::Points => "wavelet",
            Component::Line => "shearlet",
            Component::Texture => "gabor",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "points" | "point" => Some(Component::Points),
            "line" | "curve" => Some(Component::Line),
            "texture" => Some(Component::Texture),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMode {
    Constrained,
    Noisy,
    Unconstrained,
}

impl SolveMode {
    pub fn name(&self) -> &'static str {
        match self {
            SolveMode::Constrained => "constrained",
            SolveMode::Noisy => "noisy",
            SolveMode::Unconstrained => "unconstrained",
        }
    }
}

/// Every key the parser accepts, with its meaning.
pub const KEYS: &[(&str, &str)] = &[
    ("n", "grid size, a power of two >= 16"),
    ("seed", "master seed (required)"),
    ("epsilon", "cluster exponent, default 0.25"),
    ("scales", "scales to solve: `all`, `a-b` or a comma list; default 1..=j_max"),
    ("include_low", "also solve the low-pass band, default false"),
    ("components", "comma list of points, line, texture; default all three"),
    ("normalize", "equalise per-band component energies, default true"),
    ("mask", "use the missing strip, default true"),
    ("h0", "strip half-width at scale 0 in pixels, default 0.75 n; h_j = h0 2^{-(1+eps+0.05) j}"),
    ("points", "point positions `r:c;r:c;...`, default three points outside every strip"),
    ("point_exponent", "spectral exponent of the point singularities, default -0.5"),
    ("rho", "line half-length in pixels, default n/4"),
    ("w_profile", "line weight: bump or constant, default bump"),
    ("texture_bands", "explicit Gabor bands `a:b;a:b;...` (unit coefficients)"),
    ("texture_scales", "scales that receive sampled bands, default 2..=j_max"),
    ("texture_min_per_scale", "minimum sampled bands per scale, default 1"),
    ("d_max", "bound on sampled texture coefficients, default 1"),
    ("gabor_window", "meyer or cosine, default meyer"),
    ("noise_level", "||eta|| / ||P_K f|| per band, default 0"),
    ("mode", "constrained, noisy or unconstrained, default constrained"),
    ("regularizer", "l1 or l2sq for the unconstrained mode, default l1"),
    ("lambda", "fixed lambda for every scale (overrides lambda_base)"),
    ("lambda_base", "lambda_j = lambda_base 2^{2j}, default 1"),
    ("max_iters", "solver iteration cap, default 2000"),
    ("tol", "relative iterate-change tolerance, default 1e-6"),
    ("burn_in", "iterations excluded from the monotonicity check, default 50"),
    ("step_ratio", "primal/dual step balance multiplier, default 1"),
    ("trials", "random tuples for the sampled kappa bound, default 64"),
    ("points_known", "treat the point component as fully known, default false"),
    ("out_dir", "artifact directory"),
];

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub scales: Vec<usize>,
    pub include_low: bool,
    pub components: Vec<Component>,
    pub normalize: bool,
    pub mask: bool,
    pub h0: f64,
    pub points: Vec<(usize, usize)>,
    pub point_exponent: f64,
    pub rho: f64,
    pub w_profile: LineProfile,
    pub texture_bands: Option<Vec<(i32, i32)>>,
    pub texture_scales: Vec<usize>,
    pub texture_min_per_scale: usize,
    pub d_max: f64,
    pub gabor_window: GaborWindow,
    pub noise_level: f64,
    pub mode: SolveMode,
    pub regularizer: Regularizer,
    pub lambda: LambdaSchedule,
    pub solver: SolverOptions,
    pub trials: usize,
    pub points_known: bool,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Defaults for grid size `n`.
    pub fn with_defaults(n: usize, seed: u64) -> Result<Self> {
        let grid = Grid::new(n).map_err(|e| Error::Config(e.to_string()))?;
        let jm = grid.j_max();
        Ok(ExperimentConfig {
            n,
            seed,
            epsilon: 0.25,
            scales: (1..=jm).collect(),
            include_low: false,
            components: vec![Component::Points, Component::Line, Component::Texture],
            normalize: true,
            mask: true,
            h0: 0.75 * n as f64,
            points: vec![(n / 8, n / 8), (7 * n / 8, 7 * n / 8), (n / 8, 5 * n / 8)],
            point_exponent: -0.5,
            rho: n as f64 / 4.0,
            w_profile: LineProfile::Bump,
            texture_bands: None,
            texture_scales: (2..=jm).collect(),
            texture_min_per_scale: 1,
            d_max: 1.0,
            gabor_window: GaborWindow::Meyer,
            noise_level: 0.0,
            mode: SolveMode::Constrained,
            regularizer: Regularizer::L1,
            lambda: LambdaSchedule::Dyadic { base: 1.0 },
            solver: SolverOptions::default(),
            trials: 64,
            points_known: false,
            out_dir: None,
        })
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.n).expect("validated at parse time")
    }

    /// Strip half-width in pixels at scale `j`.
    pub fn strip_width(&self, j: usize) -> f64 {
        self.h0 * 2f64.powf(-(1.0 + self.epsilon + 0.05) * j as f64)
    }

    pub fn solver_mode(&self, j: usize) -> Mode {
        match self.mode {
            SolveMode::Constrained => Mode::Constrained,
            SolveMode::Noisy => Mode::ConstrainedNoisy,
            SolveMode::Unconstrained => Mode::Unconstrained { lambda: self.lambda.at(j), regularizer: self.regularizer },
        }
    }

    pub fn has(&self, c: Component) -> bool {
        self.components.contains(&c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            let k = k.trim().to_string();
            if !KEYS.iter().any(|(name, _)| *name == k) {
                return Err(Error::Config(format!("line {}: unknown key `{k}`", no + 1)));
            }
            if map.insert(k.clone(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{k}`", no + 1)));
            }
        }
        let n: usize = req(&map, "n")?;
        let seed: u64 = req(&map, "seed")?;
        let mut cfg = Self::with_defaults(n, seed)?;
        let jm = cfg.grid().j_max();
        for (k, v) in &map {
            match k.as_str() {
                "n" | "seed" => {}
                "epsilon" => cfg.epsilon = num(k, v)?,
                "scales" => cfg.scales = parse_scales(v, jm)?,
                "include_low" => cfg.include_low = boolean(k, v)?,
                "components" => {
                    cfg.components = list(v, ',')
                        .map(|s| Component::parse(s).ok_or_else(|| bad(k, v)))
                        .collect::<Result<_>>()?;
                    cfg.components.sort();
                    cfg.components.dedup();
                }
                "normalize" => cfg.normalize = boolean(k, v)?,
                "mask" => cfg.mask = boolean(k, v)?,
                "h0" => cfg.h0 = num(k, v)?,
                "points" => cfg.points = pairs(k, v)?,
                "point_exponent" => cfg.point_exponent = num(k, v)?,
                "rho" => cfg.rho = num(k, v)?,
                "w_profile" => cfg.w_profile = LineProfile::parse(v).ok_or_else(|| bad(k, v))?,
                "texture_bands" => cfg.texture_bands = Some(pairs(k, v)?),
                "texture_scales" => cfg.texture_scales = parse_scales(v, jm)?,
                "texture_min_per_scale" => cfg.texture_min_per_scale = num(k, v)?,
                "d_max" => cfg.d_max = num(k, v)?,
                "gabor_window" => cfg.gabor_window = GaborWindow::parse(v).ok_or_else(|| bad(k, v))?,
                "noise_level" => cfg.noise_level = num(k, v)?,
                "mode" => {
                    cfg.mode = match v.as_str() {
                        "constrained" => SolveMode::Constrained,
                        "noisy" => SolveMode::Noisy,
                        "unconstrained" => SolveMode::Unconstrained,
                        _ => return Err(bad(k, v)),
                    }
                }
                "regularizer" => cfg.regularizer = Regularizer::parse(v).ok_or_else(|| bad(k, v))?,
                "lambda" => cfg.lambda = LambdaSchedule::Fixed(num(k, v)?),
                "lambda_base" => {
                    if !map.contains_key("lambda") {
                        cfg.lambda = LambdaSchedule::Dyadic { base: num(k, v)? }
                    }
                }
                "max_iters" => cfg.solver.max_iters = num(k, v)?,
                "tol" => cfg.solver.tol = num(k, v)?,
                "burn_in" => cfg.solver.burn_in = num(k, v)?,
                "step_ratio" => cfg.solver.step_ratio = num(k, v)?,
                "trials" => cfg.trials = num(k, v)?,
                "points_known" => cfg.points_known = boolean(k, v)?,
                "out_dir" => cfg.out_dir = Some(PathBuf::from(v)),
                _ => unreachable!("keys are checked above"),
            }
        }
        cfg.solver.seed = cfg.seed;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let grid = Grid::new(self.n).map_err(|e| Error::Config(e.to_string()))?;
        let jm = grid.j_max();
        let fail = |m: String| Err(Error::Config(m));
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return fail(format!("epsilon {} must lie in (0, 1)", self.epsilon));
        }
        if let Some(&j) = self.scales.iter().chain(&self.texture_scales).find(|&&j| j > jm) {
            return fail(format!("scale {j} exceeds j_max = {jm}"));
        }
        if self.components.is_empty() {
            return fail("no components".into());
        }
        if !(self.h0 >= 0.0) || !(self.noise_level >= 0.0) || !(self.d_max >= 0.0) {
            return fail("h0, noise_level and d_max must be >= 0".into());
        }
        if self.has(Component::Points) && self.points.is_empty() {
            return fail("point component without points".into());
        }
        if let Some(&(r, c)) = self.points.iter().find(|&&(r, c)| r >= self.n || c >= self.n) {
            return fail(format!("point ({r}, {c}) outside the grid"));
        }
        if self.has(Component::Line) && !(self.rho > 0.0 && self.rho < self.n as f64 / 2.0) {
            return fail(format!("rho {} must lie in (0, n/2)", self.rho));
        }
        if self.trials == 0 {
            return fail("trials must be >= 1".into());
        }
        if !(self.solver.step_ratio > 0.0) || !(self.solver.tol >= 0.0) {
            return fail("step_ratio must be > 0 and tol >= 0".into());
        }
        match self.lambda {
            LambdaSchedule::Fixed(l) | LambdaSchedule::Dyadic { base: l } if !(l > 0.0) => {
                return fail("lambda must be positive".into())
            }
            _ => {}
        }
        Ok(())
    }

    /// Canonical text form; parsing it gives back an equal config.
    pub fn to_text(&self) -> String {
        let join = |v: &[usize]| v.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(",");
        let mut out = vec![
            format!("n = {}", self.n),
            format!("seed = {}", self.seed),
            format!("epsilon = {}", self.epsilon),
            format!("scales = {}", join(&self.scales)),
            format!("include_low = {}", self.include_low),
            format!(
                "components = {}",
                self.components.iter().map(|c| c.name()).collect::<Vec<_>>().join(",")
            ),
            format!("normalize = {}", self.normalize),
            format!("mask = {}", self.mask),
            format!("h0 = {}", self.h0),
            format!(
                "points = {}",
                self.points.iter().map(|(r, c)| format!("{r}:{c}")).collect::<Vec<_>>().join(";")
            ),
            format!("point_exponent = {}", self.point_exponent),
            format!("rho = {}", self.rho),
            format!("w_profile = {}", if self.w_profile == LineProfile::Bump { "bump" } else { "constant" }),
            format!("texture_scales = {}", join(&self.texture_scales)),
            format!("texture_min_per_scale = {}", self.texture_min_per_scale),
            format!("d_max = {}", self.d_max),
            format!("gabor_window = {}", self.gabor_window.name()),
            format!("noise_level = {}", self.noise_level),
            format!("mode = {}", self.mode.name()),
            format!("regularizer = {}", self.regularizer.name()),
            format!("max_iters = {}", self.solver.max_iters),
            format!("tol = {}", self.solver.tol),
            format!("burn_in = {}", self.solver.burn_in),
            format!("step_ratio = {}", self.solver.step_ratio),
            format!("trials = {}", self.trials),
            format!("points_known = {}", self.points_known),
        ];
        if let Some(b) = &self.texture_bands {
            out.push(format!(
                "texture_bands = {}",
                b.iter().map(|(a, c)| format!("{a}:{c}")).collect::<Vec<_>>().join(";")
            ));
        }
        match self.lambda {
            LambdaSchedule::Fixed(l) => out.push(format!("lambda = {l}")),
            LambdaSchedule::Dyadic { base } => out.push(format!("lambda_base = {base}")),
        }
        if let Some(d) = &self.out_dir {
            out.push(format!("out_dir = {}", d.display()));
        }
        out.join("\n") + "\n"
    }
}

fn bad(k: &str, v: &str) -> Error {
    Error::Config(format!("invalid value `{v}` for `{k}`"))
}

fn req<T: std::str::FromStr>(map: &BTreeMap<String, String>, k: &str) -> Result<T> {
    let v = map.get(k).ok_or_else(|| Error::Config(format!("missing required key `{k}`")))?;
    num(k, v)
}

fn num<T: std::str::FromStr>(k: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| bad(k, v))
}

fn boolean(k: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(bad(k, v)),
    }
}

fn list(v: &str, sep: char) -> impl Iterator<Item = &str> {
    v.split(sep).map(str::trim).filter(|s| !s.is_empty())
}

fn pairs<T: std::str::FromStr>(k: &str, v: &str) -> Result<Vec<(T, T)>> {
    list(v, ';')
        .map(|p| {
            let (a, b) = p.split_once(':').ok_or_else(|| bad(k, v))?;
            Ok((num(k, a.trim())?, num(k, b.trim())?))
        })
        .collect()
}

fn parse_scales(v: &str, j_max: usize) -> Result<Vec<usize>> {
    let k = "scales";
    let mut out: Vec<usize> = if v == "all" {
        (0..=j_max).collect()
    } else if let Some((a, b)) = v.split_once('-') {
        let (a, b): (usize, usize) = (num(k, a.trim())?, num(k, b.trim())?);
        (a..=b).collect()
    } else {
        list(v, ',').map(|s| num(k, s)).collect::<Result<_>>()?
    };
    out.sort_unstable();
    out.dedup();
    Ok(out)
}
