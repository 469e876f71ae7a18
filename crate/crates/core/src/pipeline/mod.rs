//! End-to-end experiments: phantoms, per-scale degradation, separation,
//! diagnostics and reassembly.

mod config;

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;

pub use config::{Component, ExperimentConfig, SolveMode, KEYS};

use crate::diagnostics::{
    check_lambda_condition, cluster_coherence, cluster_gabor, cluster_shearlet, cluster_shearlet_single,
    cluster_wavelet, cluster_wavelet_single, error_certificate, kappa_sampled_lower_bound, kappa_upper_bound,
    relative_sparsity, Certificate, ClusterSet, CoherenceTable, KappaBounds, LambdaReport, NoiseMode, Projection,
};
use crate::error::{Error, Result};
use crate::frames::{build_gabor_frame, build_shearlet_frame, build_wavelet_frame, Frame};
use crate::grid::{Grid, Image, Part, StripMask};
use crate::io::{encode_pgm, encode_raw, read_raw, write_atomic};
use crate::multiscale::{decompose_with, reconstruct_with, SubbandStack};
use crate::phantoms::{
    degrade, gen_line, gen_points, gen_texture, noise_l1, normalize_band_energies, sample_texture, LineSegment,
    PointCloud, TextureSpec,
};
use crate::solver::{residual_report, solve_per_scale, trace_csv, ResidualReport, SeparationProblem};
use crate::windows::WindowBank;
use crate::Complex64;

/// Image output format of the artifacts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ImageFormat {
    /// Tables only.
    Csv,
    #[default]
    Raw,
    Pgm,
}

/// Phantom components and the models the clusters are built from.
#[derive(Clone, Debug)]
pub struct Phantoms {
    pub grid: Grid,
    pub images: Vec<(Component, Image)>,
    pub points: PointCloud,
    pub line: LineSegment,
    pub texture: TextureSpec,
}

impl Phantoms {
    pub fn image(&self, c: Component) -> Option<&Image> {
        self.images.iter().find(|(k, _)| *k == c).map(|(_, i)| i)
    }

    /// Writes `<component>.raw` for every component.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (c, img) in &self.images {
            write_atomic(&dir.join(format!("{}.raw", c.name())), &encode_raw(img, 0))?;
        }
        Ok(())
    }

    /// Replaces the generated images by `<component>.raw` files from `dir`.
    pub fn load_images(&mut self, dir: &Path) -> Result<()> {
        for (c, img) in &mut self.images {
            let loaded = read_raw(&dir.join(format!("{}.raw", c.name())))?;
            self.grid.check(&loaded.grid())?;
            *img = loaded;
        }
        Ok(())
    }
}

pub fn generate(cfg: &ExperimentConfig) -> Result<Phantoms> {
    cfg.validate()?;
    let grid = cfg.grid();
    let points = PointCloud::new(cfg.points.clone());
    let line = LineSegment::centered(grid, cfg.rho, cfg.w_profile);
    let texture = match &cfg.texture_bands {
        Some(b) => TextureSpec::new(grid, b.clone(), vec![Complex64::new(1.0, 0.0); b.len()], cfg.gabor_window),
        None => sample_texture(
            grid,
            cfg.epsilon,
            &cfg.texture_scales,
            cfg.texture_min_per_scale,
            cfg.d_max,
            cfg.gabor_window,
            cfg.seed,
        ),
    };
    let mut images = Vec::new();
    for &c in &cfg.components {
        let img = match c {
            Component::Points => gen_points(grid, &points, cfg.point_exponent, None)?,
            Component::Line => gen_line(grid, &line)?,
            Component::Texture => gen_texture(grid, &texture)?,
        };
        images.push((c, img));
    }
    Ok(Phantoms { grid, images, points, line, texture })
}

/// Frames in component order.
pub fn build_frames(cfg: &ExperimentConfig) -> Result<Vec<Frame>> {
    let grid = cfg.grid();
    cfg.components
        .iter()
        .map(|c| match c {
            Component::Points => build_wavelet_frame(grid, grid.j_max()),
            Component::Line => build_shearlet_frame(grid, grid.j_max()),
            Component::Texture => build_gabor_frame(grid, None, cfg.gabor_window),
        })
        .collect()
}

/// Which band of the multiscale decomposition a row refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Band {
    Low,
    Scale(usize),
}

impl Band {
    pub fn label(&self) -> String {
        match self {
            Band::Low => "low".into(),
            Band::Scale(j) => j.to_string(),
        }
    }

    /// Scale used for the strip width and lambda (`0` for the low band).
    pub fn level(&self) -> usize {
        match self {
            Band::Low => 0,
            Band::Scale(j) => *j,
        }
    }
}

/// One entry of the coherence decay table.
#[derive(Clone, Debug, PartialEq)]
pub struct PairCoherence {
    pub name: &'static str,
    pub projection: Projection,
    pub mu: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScaleDiagnostics {
    pub j: usize,
    pub cluster_sizes: Vec<usize>,
    /// `delta_m` per component, in component order.
    pub deltas: Vec<f64>,
    pub pairs: Vec<PairCoherence>,
    pub kappa: KappaBounds,
    pub kappa_lo: f64,
    pub lambda: LambdaReport,
    pub certificate: Certificate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScaleReport {
    pub band: Band,
    pub h: f64,
    pub errors: Option<ResidualReport>,
    /// Failure message when the solve did not complete.
    pub failure: Option<String>,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    /// `||P_K sum f_m* - observed|| / ||observed||`.
    pub feasibility: f64,
    pub diagnostics: Option<ScaleDiagnostics>,
    pub trace: String,
}

impl ScaleReport {
    /// Whether the observed error sum respects a valid certificate.
    pub fn certificate_holds(&self) -> Option<bool> {
        let d = self.diagnostics.as_ref()?;
        let bound = d.certificate.bound?;
        Some(self.errors.as_ref()?.abs_sum <= bound)
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub config: ExperimentConfig,
    pub components: Vec<Component>,
    pub scales: Vec<ScaleReport>,
    /// Recovered components reassembled across scales.
    pub recovered: Vec<Image>,
    /// Ground truth after energy balancing, reassembled the same way.
    pub truth: Vec<Image>,
    pub runtime: Vec<(String, f64)>,
}

impl Report {
    pub fn scale(&self, j: usize) -> Option<&ScaleReport> {
        self.scales.iter().find(|s| s.band == Band::Scale(j))
    }

    pub fn failed(&self) -> Vec<&ScaleReport> {
        self.scales.iter().filter(|s| s.failure.is_some()).collect()
    }

    pub fn errors_csv(&self) -> String {
        let mut out = String::from("j,h,err_points,err_line,err_texture,sum,abs_sum,flagged,iterations,converged,objective\n");
        for s in &self.scales {
            let mut cols = vec![s.band.label(), format!("{:.6}", s.h)];
            match &s.errors {
                Some(e) => {
                    for c in [Component::Points, Component::Line, Component::Texture] {
                        let v = self.components.iter().position(|&k| k == c).and_then(|i| e.errors[i]);
                        cols.push(v.map_or("na".into(), |v| format!("{v:.9e}")));
                    }
                    cols.push(format!("{:.9e}", e.sum));
                    cols.push(format!("{:.9e}", e.abs_sum));
                    cols.push(e.flagged.to_string());
                }
                None => cols.extend(["na", "na", "na", "na", "na", "failed"].map(String::from)),
            }
            cols.push(s.iterations.to_string());
            cols.push(s.converged.to_string());
            cols.push(format!("{:.9e}", s.objective));
            writeln!(out, "{}", cols.join(",")).unwrap();
        }
        out
    }

    pub fn coherence_csv(&self) -> String {
        let diags: Vec<&ScaleDiagnostics> = self.scales.iter().filter_map(|s| s.diagnostics.as_ref()).collect();
        coherence_csv(&self.components, &diags)
    }

    pub fn runtime_csv(&self) -> String {
        let mut out = String::from("stage,seconds\n");
        for (k, v) in &self.runtime {
            writeln!(out, "{k},{v:.3}").unwrap();
        }
        out
    }

    /// Writes every artifact atomically into `dir`.
    pub fn write(&self, dir: &Path, format: ImageFormat) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_atomic(&dir.join("config.txt"), self.config.to_text().as_bytes())?;
        write_atomic(&dir.join("errors.csv"), self.errors_csv().as_bytes())?;
        write_atomic(&dir.join("coherence.csv"), self.coherence_csv().as_bytes())?;
        write_atomic(&dir.join("runtime.csv"), self.runtime_csv().as_bytes())?;
        for s in &self.scales {
            write_atomic(&dir.join(format!("trace_{}.csv", s.band.label())), s.trace.as_bytes())?;
        }
        let images = self
            .components
            .iter()
            .zip(&self.recovered)
            .map(|(c, i)| (format!("recovered_{}", c.name()), i))
            .chain(self.components.iter().zip(&self.truth).map(|(c, i)| (format!("truth_{}", c.name()), i)));
        for (name, img) in images {
            match format {
                ImageFormat::Csv => {}
                ImageFormat::Raw => write_atomic(&dir.join(format!("{name}.raw")), &encode_raw(img, 0))?,
                ImageFormat::Pgm => write_atomic(&dir.join(format!("{name}.pgm")), &encode_pgm(img))?,
            }
        }
        Ok(())
    }
}

pub const COHERENCE_HEADER: &str = "j,pair,projection,mu,delta_1,delta_2,delta_3,kappa_lo,bound,valid";

/// Rows of the ten decay pairs plus the assembled bounds, per scale.
pub fn coherence_csv(components: &[Component], diags: &[&ScaleDiagnostics]) -> String {
    let mut out = format!("{COHERENCE_HEADER}\n");
    for d in diags {
        let delta = |c: Component| {
            components
                .iter()
                .position(|&k| k == c)
                .map_or("na".to_string(), |i| format!("{:.9e}", d.deltas[i]))
        };
        let tail = format!(
            "{},{},{},{:.9e},{},{}",
            delta(Component::Points),
            delta(Component::Line),
            delta(Component::Texture),
            d.kappa_lo,
            d.certificate.bound.map_or("na".into(), |b| format!("{b:.9e}")),
            d.certificate.valid()
        );
        let rows = d
            .pairs
            .iter()
            .map(|p| (p.name, p.projection.name(), p.mu))
            .chain([("mu_cN", "-", d.kappa.mu), ("mu_sep", "-", d.kappa.sep), ("mu_inp", "-", d.kappa.inp)]);
        for (name, proj, mu) in rows {
            writeln!(out, "{},{name},{proj},{mu:.9e},{tail}", d.j).unwrap();
        }
    }
    out
}

/// Phantoms split into balanced per-scale bands, one stack per component.
pub struct Prepared {
    pub phantoms: Phantoms,
    pub bank: WindowBank,
    pub stacks: Vec<SubbandStack>,
    pub frames: Vec<Frame>,
}

pub fn prepare(cfg: &ExperimentConfig, phantoms: Phantoms) -> Result<Prepared> {
    let grid = cfg.grid();
    if cfg.mask && cfg.has(Component::Points) {
        for &j in &cfg.scales {
            phantoms.points.check_known(&StripMask::new(grid, cfg.strip_width(j))?)?;
        }
    }
    let bank = WindowBank::new(grid, grid.j_max())?;
    let mut stacks = phantoms
        .images
        .iter()
        .map(|(_, img)| decompose_with(&bank, img))
        .collect::<Result<Vec<_>>>()?;
    if cfg.normalize {
        normalize_band_energies(&mut stacks)?;
    }
    let frames = build_frames(cfg)?;
    Ok(Prepared { phantoms, bank, stacks, frames })
}

impl Prepared {
    fn band(&self, m: usize, band: Band) -> &Image {
        match band {
            Band::Low => &self.stacks[m].low,
            Band::Scale(j) => self.stacks[m].band(j).expect("stack covers every scale"),
        }
    }

    fn mask(&self, cfg: &ExperimentConfig, band: Band) -> Result<StripMask> {
        if cfg.mask {
            StripMask::new(self.phantoms.grid, cfg.strip_width(band.level()))
        } else {
            Ok(StripMask::empty(self.phantoms.grid))
        }
    }

    fn clusters(&self, cfg: &ExperimentConfig, j: usize, union: bool) -> Result<Vec<ClusterSet>> {
        let eps = cfg.epsilon;
        let p = &self.phantoms;
        cfg.components
            .iter()
            .zip(&self.frames)
            .map(|(c, f)| match (c, union) {
                (Component::Points, true) => cluster_wavelet(f, j, eps, &p.points),
                (Component::Points, false) => cluster_wavelet_single(f, j, eps, &p.points),
                (Component::Line, true) => cluster_shearlet(f, j, eps, &p.line),
                (Component::Line, false) => cluster_shearlet_single(f, j, eps, &p.line),
                (Component::Texture, _) => cluster_gabor(f, j, eps, &p.texture),
            })
            .collect()
    }

    /// Clusters, sparsity, coherence, kappa bounds and the certificate at scale `j`.
    pub fn diagnostics(&self, cfg: &ExperimentConfig, j: usize, noise: f64) -> Result<ScaleDiagnostics> {
        let mask = self.mask(cfg, Band::Scale(j))?;
        let frames: Vec<&Frame> = self.frames.iter().collect();
        let clusters = self.clusters(cfg, j, true)?;
        let cl: Vec<&ClusterSet> = clusters.iter().collect();
        let deltas = frames
            .iter()
            .enumerate()
            .map(|(m, f)| relative_sparsity(&f.analyze(self.band(m, Band::Scale(j)))?, cl[m]))
            .collect::<Result<Vec<_>>>()?;
        let table = CoherenceTable::compute(&frames, &cl, &mask)?;
        let no_missing: Vec<bool> =
            cfg.components.iter().map(|&c| cfg.points_known && c == Component::Points).collect();
        let kappa = kappa_upper_bound(&table, &no_missing)?;
        let kappa_lo = kappa_sampled_lower_bound(&frames, &cl, &mask, &no_missing, cfg.trials, cfg.seed ^ j as u64)?;
        let lambda = check_lambda_condition(&frames, &cl, cfg.lambda.at(j))?;

        let idx = |c: Component| cfg.components.iter().position(|&k| k == c);
        let (w, s, g) = (idx(Component::Points), idx(Component::Line), idx(Component::Texture));
        let singles = self.clusters(cfg, j, false)?;
        let mut pairs = Vec::new();
        let mut from_table = |name, a: Option<usize>, b: Option<usize>, p| -> Result<()> {
            if let (Some(a), Some(b)) = (a, b) {
                pairs.push(PairCoherence { name, projection: p, mu: table.get(a, b, p)? });
            }
            Ok(())
        };
        from_table("L1pm:wavelet>shearlet", w, s, Projection::None)?;
        from_table("L2pm:shearlet>wavelet", s, w, Projection::None)?;
        from_table("L3:gabor>shearlet", g, s, Projection::None)?;
        from_table("L3:gabor>wavelet", g, w, Projection::None)?;
        let none = StripMask::empty(self.phantoms.grid);
        for (name, a, b) in [("L1:wavelet>gabor", w, g), ("L2:shearlet>gabor", s, g)] {
            if let (Some(a), Some(b)) = (a, b) {
                let mu = cluster_coherence(&singles[a], frames[a], frames[b], Projection::None, &none)?;
                pairs.push(PairCoherence { name, projection: Projection::None, mu });
            }
        }
        let mut from_table = |name, a: Option<usize>, b: Option<usize>, p| -> Result<()> {
            if let (Some(a), Some(b)) = (a, b) {
                pairs.push(PairCoherence { name, projection: p, mu: table.get(a, b, p)? });
            }
            Ok(())
        };
        from_table("L3pm:gabor>shearlet", g, s, Projection::Missing)?;
        from_table("L2pm:shearlet>gabor", s, g, Projection::Missing)?;
        from_table("L2pm:shearlet>shearlet", s, s, Projection::Missing)?;
        from_table("L3:gabor>gabor", g, g, Projection::Missing)?;

        let mode = if noise > 0.0 { NoiseMode::Noisy(noise) } else { NoiseMode::Noiseless };
        let unconstrained = cfg.mode == SolveMode::Unconstrained;
        let mut certificate = error_certificate(&deltas, kappa.mu, mode, unconstrained);
        if unconstrained && !lambda.pass {
            certificate.bound = None;
        }
        Ok(ScaleDiagnostics {
            j,
            cluster_sizes: cl.iter().map(|c| c.len()).collect(),
            deltas,
            pairs,
            kappa,
            kappa_lo,
            lambda,
            certificate,
        })
    }
}

fn bands(cfg: &ExperimentConfig) -> Vec<Band> {
    let mut out: Vec<Band> = cfg.scales.iter().map(|&j| Band::Scale(j)).collect();
    if cfg.include_low {
        out.insert(0, Band::Low);
    }
    out
}

/// Diagnostics only, for every configured scale.
pub fn run_coherence(cfg: &ExperimentConfig) -> Result<Vec<ScaleDiagnostics>> {
    let prepared = prepare(cfg, generate(cfg)?)?;
    cfg.scales
        .par_iter()
        .map(|&j| prepared.diagnostics(cfg, j, 0.0))
        .collect()
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    run_with(cfg, generate(cfg)?)
}

/// Runs the experiment on given phantoms (for instance loaded from disk).
pub fn run_with(cfg: &ExperimentConfig, phantoms: Phantoms) -> Result<Report> {
    cfg.validate()?;
    let mut runtime = Vec::new();
    let clock = Instant::now();
    let prepared = prepare(cfg, phantoms)?;
    runtime.push(("prepare".to_string(), clock.elapsed().as_secs_f64()));
    let grid = cfg.grid();
    let n_comp = cfg.components.len();
    let frames: Vec<&Frame> = prepared.frames.iter().collect();

    let clock = Instant::now();
    let bands = bands(cfg);
    let mut problems = Vec::new();
    let mut observations = Vec::new();
    for (b, band) in bands.iter().enumerate() {
        let mask = prepared.mask(cfg, *band)?;
        let mut sum = Image::zeros(grid);
        for m in 0..n_comp {
            sum.axpy(1.0, prepared.band(m, *band));
        }
        let noise_seed = cfg.seed.wrapping_add(0x9e37_79b9 * (b as u64 + 1));
        let degraded = degrade(&sum, &mask, cfg.noise_level, noise_seed)?;
        let noise = if cfg.noise_level > 0.0 {
            noise_l1(&degraded.noise, &frames)?.into_iter().fold(0.0, f64::max)
        } else {
            0.0
        };
        let mut options = cfg.solver.clone();
        options.frame_bound = Some(1.0);
        let problem =
            SeparationProblem::new(degraded.observed.clone(), mask, frames.clone(), cfg.solver_mode(band.level()), options)?;
        problems.push((band.level(), problem));
        observations.push((degraded.observed, noise));
    }
    let results = solve_per_scale(&problems, &cfg.lambda);
    runtime.push(("solve".to_string(), clock.elapsed().as_secs_f64()));

    let clock = Instant::now();
    let diagnostics: Vec<Option<Result<ScaleDiagnostics>>> = bands
        .par_iter()
        .zip(&observations)
        .map(|(band, (_, noise))| match band {
            Band::Scale(j) => Some(prepared.diagnostics(cfg, *j, *noise)),
            Band::Low => None,
        })
        .collect();
    runtime.push(("diagnostics".to_string(), clock.elapsed().as_secs_f64()));

    let mut recovered: Vec<SubbandStack> = (0..n_comp)
        .map(|_| {
            let zero = |j| (j, Image::zeros(grid));
            SubbandStack::new(grid, grid.j_max(), Image::zeros(grid), (0..=grid.j_max()).map(zero).collect())
        })
        .collect::<Result<_>>()?;
    let mut scales = Vec::new();
    for (((band, (_, result)), (observed, _)), diag) in
        bands.iter().zip(results).zip(&observations).zip(diagnostics)
    {
        let truth: Vec<Image> = (0..n_comp).map(|m| prepared.band(m, *band).clone()).collect();
        let diagnostics = match diag.transpose() {
            Ok(d) => d,
            Err(e) => {
                warn!("diagnostics failed at scale {}: {e}", band.label());
                None
            }
        };
        let h = if cfg.mask { cfg.strip_width(band.level()) } else { 0.0 };
        let report = match result {
            Ok(res) => {
                let mask = prepared.mask(cfg, *band)?;
                let sum = res.sum().expect("at least one component");
                let resid = mask.apply(&sum.sub(observed), Part::Known)?.norm();
                let on = observed.norm();
                for (m, img) in res.components.iter().enumerate() {
                    let slot = match band {
                        Band::Low => &mut recovered[m].low,
                        Band::Scale(j) => recovered[m].band_mut(*j).expect("all scales present"),
                    };
                    *slot = img.clone();
                }
                info!("band {}: {} iterations, converged {}", band.label(), res.iterations, res.converged);
                ScaleReport {
                    band: *band,
                    h,
                    errors: Some(residual_report(&res.components, &truth)?),
                    failure: None,
                    iterations: res.iterations,
                    converged: res.converged,
                    objective: res.final_objective(),
                    feasibility: if on > 0.0 { resid / on } else { resid },
                    diagnostics,
                    trace: trace_csv(&res),
                }
            }
            Err(e) => {
                warn!("solve failed at scale {}: {e}", band.label());
                ScaleReport {
                    band: *band,
                    h,
                    errors: None,
                    failure: Some(e.to_string()),
                    iterations: 0,
                    converged: false,
                    objective: f64::NAN,
                    feasibility: f64::NAN,
                    diagnostics,
                    trace: String::new(),
                }
            }
        };
        scales.push(report);
    }

    let mut truth_stacks = prepared.stacks.clone();
    for s in &mut truth_stacks {
        if !cfg.include_low {
            s.low = Image::zeros(grid);
        }
        for (j, b) in &mut s.bands {
            if !cfg.scales.contains(j) {
                *b = Image::zeros(grid);
            }
        }
    }
    let recovered = recovered
        .iter()
        .map(|s| reconstruct_with(&prepared.bank, s))
        .collect::<Result<Vec<_>>>()?;
    let truth = truth_stacks
        .iter()
        .map(|s| reconstruct_with(&prepared.bank, s))
        .collect::<Result<Vec<_>>>()?;

    let report = Report { config: cfg.clone(), components: cfg.components.clone(), scales, recovered, truth, runtime };
    if let Some(dir) = &cfg.out_dir {
        report.write(dir, ImageFormat::Raw)?;
    }
    if let Some(first) = report.failed().first() {
        warn!("{} band(s) failed, first at scale {}", report.failed().len(), first.band.label());
    }
    Ok(report)
}

/// Returns an error naming the first failed band, if any.
pub fn ensure_complete(report: &Report) -> Result<()> {
    match report.failed().first() {
        Some(s) => Err(Error::Invalid(format!(
            "scale {}: {}",
            s.band.label(),
            s.failure.as_deref().unwrap_or("failed")
        ))),
        None => Ok(()),
    }
}
