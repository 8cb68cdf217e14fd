use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use bouquet_lab::cmath::cabs;
use bouquet_lab::config::{ConfigLayer, RunConfig, OUT_ENV};
use bouquet_lab::critical::{count_zeros_winding, find_critical_points_on_ray, find_zeros_on_ray, ZeroRecord};
use bouquet_lab::error::Error;
use bouquet_lab::escape::{classify_grid, png_bytes, ppm_bytes, GridSpec, Palette};
use bouquet_lab::family::Family;
use bouquet_lab::geometry::{assemble_scheme, make_region_scheme, RegionScheme, SchemeOverrides};
use bouquet_lab::hair::{calibrate, trace_hair};
use bouquet_lab::output::{csv_bytes, emit, ensure_dir, itinerary_slug, json_bytes, CriticalRow, HairRow, ZeroRow};
use bouquet_lab::suite::{m_hat, run_suite};
use bouquet_lab::symbolic::{all_words, dynamics_scheme, itinerary_of, periodic_point_with, Branches, ItinerarySpec};

#[derive(Parser)]
#[command(name = "bouquet-lab", version, about = "Numerical laboratory for p-fold exponential sums")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Zeros on the rays V_k, one per rectangle D_m, with winding cross-checks.
    Zeros,
    /// Critical points between consecutive zeros and their real critical values.
    Critical,
    /// Trace hairs h_s on [1, tmax].
    Hair,
    /// Periodic points z(s) of pure-period itineraries.
    Periodic,
    /// Itinerary of a point under forward iteration.
    Itinerary,
    /// Escape-time image of a window.
    Render,
    /// Run the full property suite; exit 1 when any check fails.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Zeros => "zeros",
            Command::Critical => "critical",
            Command::Hair => "hair",
            Command::Periodic => "periodic",
            Command::Itinerary => "itinerary",
            Command::Render => "render",
            Command::Verify => "verify",
        }
    }
}

#[derive(Args, Clone, Default)]
struct Opts {
    /// Number of exponential terms (p >= 3).
    #[arg(long, global = true)]
    p: Option<usize>,
    /// Scale factor of the family member.
    #[arg(long, global = true)]
    lambda: Option<f64>,
    /// Symbol bound for itineraries.
    #[arg(long = "K", global = true)]
    k: Option<u32>,
    /// Trapezium abscissa c (raised to its admissible minimum).
    #[arg(long, global = true, allow_hyphen_values = true)]
    c: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    sigma: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    eta: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    tau: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    nu: Option<f64>,
    #[arg(long, global = true)]
    safety: Option<f64>,
    /// Rectangle index range a..b.
    #[arg(long, global = true)]
    m: Option<String>,
    /// Ray indices: "all" or a comma list.
    #[arg(long, global = true)]
    rays: Option<String>,
    /// Itinerary "a,b|c,d"; repeat for several.
    #[arg(long, global = true, allow_hyphen_values = true)]
    s: Vec<String>,
    #[arg(long, global = true)]
    tmax: Option<f64>,
    /// Base sample count along a hair.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// re_min,re_max,im_min,im_max
    #[arg(long, global = true, allow_hyphen_values = true)]
    window: Option<String>,
    /// N or WxH pixels.
    #[arg(long, global = true)]
    size: Option<String>,
    #[arg(long = "max-iter", global = true)]
    max_iter: Option<u32>,
    /// Escape radius (default e^c).
    #[arg(long, global = true)]
    radius: Option<f64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory (falls back to $BOUQUET_LAB_OUT, then ./out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON config file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Also write a PNG next to the PPM.
    #[arg(long, global = true)]
    png: bool,
    /// Start point re,im for the itinerary command.
    #[arg(long, global = true, allow_hyphen_values = true)]
    z: Option<String>,
    /// Iteration budget for the itinerary command.
    #[arg(long = "n-max", global = true)]
    n_max: Option<usize>,
}

impl Opts {
    fn layer(&self) -> ConfigLayer {
        ConfigLayer {
            p: self.p,
            lambda: self.lambda,
            k: self.k,
            scheme: SchemeOverrides {
                sigma: self.sigma,
                eta: self.eta,
                tau: self.tau,
                nu: self.nu,
                c: self.c,
                safety: self.safety,
            },
            m: self.m.clone(),
            rays: self.rays.clone(),
            s: (!self.s.is_empty()).then(|| self.s.clone()),
            tmax: self.tmax,
            samples: self.samples,
            window: self.window.clone(),
            size: self.size.clone(),
            max_iter: self.max_iter,
            radius: self.radius,
            workers: self.workers,
            out: self.out.clone(),
            seed: self.seed,
            png: self.png.then_some(true),
            z: self.z.clone(),
            n_max: self.n_max,
        }
    }
}

enum Failure {
    Verify(String),
    Usage(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verify(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Verify(m) | Failure::Usage(m) | Failure::Numerical(m) => m,
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

fn numerical(e: Error) -> Failure {
    Failure::Numerical(e.to_string())
}

#[derive(Serialize)]
struct Echo<'a> {
    command: &'a str,
    #[serde(flatten)]
    config: &'a RunConfig,
}

struct Run {
    command: Command,
    cfg: RunConfig,
}

impl Run {
    fn echo(&self) -> Echo<'_> {
        Echo {
            command: self.command.name(),
            config: &self.cfg,
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.cfg.out.join(name)
    }

    fn emit(&self, path: &Path, bytes: &[u8], summary: serde_json::Value) -> Outcome<String> {
        emit(path, bytes, &self.echo(), summary).map_err(numerical)
    }

    fn scheme(&self) -> Outcome<RegionScheme> {
        make_region_scheme(self.cfg.params, &self.cfg.scheme).map_err(usage)
    }

    fn itineraries(&self) -> Outcome<Vec<ItinerarySpec>> {
        self.cfg
            .s
            .iter()
            .map(|t| ItinerarySpec::parse(t, self.cfg.k).map_err(usage))
            .collect()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command, &cli.opts) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(command: Command, opts: &Opts) -> Outcome<()> {
    let file = match &opts.config {
        Some(p) => ConfigLayer::from_json_file(p).map_err(usage)?,
        None => ConfigLayer::default(),
    };
    let env_out = std::env::var_os(OUT_ENV).map(PathBuf::from);
    let cfg = RunConfig::resolve(file.merged(opts.layer()), env_out).map_err(usage)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build_global()
        .map_err(|e| Failure::Numerical(format!("thread pool: {e}")))?;
    ensure_dir(&cfg.out).map_err(usage)?;
    let run = Run { command, cfg };
    match command {
        Command::Zeros => cmd_zeros(&run),
        Command::Critical => cmd_critical(&run),
        Command::Hair => cmd_hair(&run),
        Command::Periodic => cmd_periodic(&run),
        Command::Itinerary => cmd_itinerary(&run),
        Command::Render => cmd_render(&run),
        Command::Verify => cmd_verify(&run),
    }
}

/// Zeros for every requested ray over the configured (or calibrated) m range.
fn ray_zeros(run: &Run, family: &Family, scheme: &RegionScheme) -> Outcome<(i64, (i64, i64), Vec<Vec<ZeroRecord>>)> {
    let m_hat = m_hat(family, scheme).map_err(numerical)?;
    let range = run.cfg.m.unwrap_or((m_hat + 1, m_hat + 20));
    let per_ray = run
        .cfg
        .rays
        .iter()
        .map(|&k| find_zeros_on_ray(family, scheme, k, range.0, range.1).map_err(numerical))
        .collect::<Outcome<_>>()?;
    Ok((m_hat, range, per_ray))
}

fn cmd_zeros(run: &Run) -> Outcome<()> {
    let scheme = run.scheme()?;
    let family = scheme.family().map_err(usage)?;
    let (m_hat, range, per_ray) = ray_zeros(run, &family, &scheme)?;
    let mut rows = Vec::new();
    let mut winding_mismatch = Vec::new();
    let mut rotation_mismatch = Vec::new();
    // zeros of the first listed ray carried back to V_0
    let reference: Vec<Complex64> = per_ray[0].iter().map(|z| z.z * family.ray_dir(z.ray_index).conj()).collect();
    for zeros in &per_ray {
        for (i, z) in zeros.iter().enumerate() {
            let turn = family.ray_dir(z.ray_index) * family.ray_dir(0).conj();
            let rect = scheme.d_rectangle(z.m).map_err(numerical)?;
            let contour: Vec<Complex64> = rect.iter().map(|v| v * turn).collect();
            let winding = count_zeros_winding(&family, &contour, 2048).map_err(numerical)?;
            if winding != 1 {
                winding_mismatch.push(json!({ "ray_index": z.ray_index, "m": z.m, "winding": winding }));
            }
            let expected = reference[i] * family.ray_dir(z.ray_index);
            if cabs(expected - z.z) > 1e-12 * cabs(z.z) {
                rotation_mismatch.push(json!({ "ray_index": z.ray_index, "m": z.m }));
            }
            rows.push(ZeroRow::new(z, winding));
        }
    }
    let summary = json!({
        "m_hat": m_hat, "m_range": [range.0, range.1], "rays": run.cfg.rays, "rows": rows.len(),
        "winding_checks_passed": rows.len() - winding_mismatch.len(),
        "winding_mismatch": winding_mismatch, "rotation_mismatch": rotation_mismatch,
    });
    let path = run.path("zeros.csv");
    let sha = run.emit(&path, &csv_bytes(&rows).map_err(numerical)?, summary)?;
    println!(
        "zeros: {} rows over m = {}..{} on rays {:?} (M = {m_hat}); winding checks {}/{}; {} sha256 {sha}",
        rows.len(),
        range.0,
        range.1,
        run.cfg.rays,
        rows.len() - winding_mismatch.len(),
        rows.len(),
        path.display()
    );
    if winding_mismatch.is_empty() && rotation_mismatch.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verify(format!(
            "{} winding and {} rotation mismatches",
            winding_mismatch.len(),
            rotation_mismatch.len()
        )))
    }
}

fn cmd_critical(run: &Run) -> Outcome<()> {
    let scheme = run.scheme()?;
    let family = scheme.family().map_err(usage)?;
    let (m_hat, range, per_ray) = ray_zeros(run, &family, &scheme)?;
    let mut rows = Vec::new();
    let mut interlace_failures = 0usize;
    let mut max_im_ratio: f64 = 0.0;
    for zeros in &per_ray {
        let crit = find_critical_points_on_ray(&family, zeros).map_err(numerical)?;
        for (i, c) in crit.iter().enumerate() {
            let between = zeros[i].r < c.r && c.r < zeros[i + 1].r;
            let alternates = i == 0 || crit[i - 1].f_value.signum() == -c.f_value.signum();
            if !(between && alternates) {
                interlace_failures += 1;
            }
            max_im_ratio = max_im_ratio.max(c.im_ratio);
            rows.push(CriticalRow::from(c));
        }
    }
    let summary = json!({
        "m_hat": m_hat, "m_range": [range.0, range.1], "rays": run.cfg.rays, "rows": rows.len(),
        "interlace_failures": interlace_failures, "max_im_ratio": max_im_ratio,
    });
    let path = run.path("critical.csv");
    let sha = run.emit(&path, &csv_bytes(&rows).map_err(numerical)?, summary)?;
    println!(
        "critical: {} rows; interlacing failures {interlace_failures}; max |Im f|/|f| {max_im_ratio:.2e}; {} sha256 {sha}",
        rows.len(),
        path.display()
    );
    if interlace_failures == 0 && max_im_ratio <= 1e-8 {
        Ok(())
    } else {
        Err(Failure::Verify("critical points fail to interlace with real alternating values".into()))
    }
}

fn cmd_hair(run: &Run) -> Outcome<()> {
    let specs = run.itineraries()?;
    if specs.is_empty() {
        return Err(usage("hair needs at least one --s itinerary"));
    }
    let scheme = run.scheme()?;
    let dynamics = dynamics_scheme(&scheme, run.cfg.k).map_err(numerical)?;
    let family = scheme.family().map_err(usage)?;
    let br = Branches::new(&family);
    let cal = calibrate(&br, run.cfg.k, 1e-12).map_err(numerical)?;
    let mut curves = Vec::new();
    for s in &specs {
        let curve = trace_hair(&br, s, run.cfg.tmax, run.cfg.samples, 1e-12, 0.5).map_err(numerical)?;
        let rows: Vec<HairRow> = curve.samples.iter().map(HairRow::from).collect();
        let name = format!("hair_{}.csv", itinerary_slug(&s.to_string()));
        let path = run.path(&name);
        let max_gap = curve.samples.iter().map(|x| x.cauchy_gap).fold(0.0, f64::max);
        let summary = json!({
            "itinerary": s.to_string(), "samples": rows.len(), "endpoint": [curve.endpoint.re, curve.endpoint.im],
            "max_cauchy_gap": max_gap, "calibration": cal,
        });
        let sha = run.emit(&path, &csv_bytes(&rows).map_err(numerical)?, summary)?;
        println!(
            "hair {s}: {} samples, endpoint {:.12} {:+.12}i, {}",
            rows.len(),
            curve.endpoint.re,
            curve.endpoint.im,
            path.display()
        );
        curves.push(json!({
            "itinerary": s.to_string(), "file": name, "sha256": sha, "samples": rows.len(),
            "endpoint": [curve.endpoint.re, curve.endpoint.im],
        }));
    }
    let manifest = json!({ "calibration": cal, "dynamics_c": dynamics.c, "tmax": run.cfg.tmax, "curves": curves });
    let path = run.path("hair_manifest.json");
    run.emit(&path, &json_bytes(&manifest).map_err(numerical)?, json!({ "curves": specs.len() }))?;
    println!("calibration: q = {}, M = {:.4}; manifest {}", cal.q_hat, cal.m_hat, path.display());
    Ok(())
}

fn cmd_periodic(run: &Run) -> Outcome<()> {
    let mut specs = run.itineraries()?;
    if specs.is_empty() {
        specs = all_words(run.cfg.k as i64, 2)
            .into_iter()
            .map(|w| ItinerarySpec::periodic(w, run.cfg.k).map_err(usage))
            .collect::<Outcome<_>>()?;
    }
    if let Some(s) = specs.iter().find(|s| !s.is_periodic()) {
        return Err(usage(format!("periodic needs a pure period, got {s}")));
    }
    let scheme = run.scheme()?;
    let dynamics = dynamics_scheme(&scheme, run.cfg.k).map_err(numerical)?;
    let br = Branches::new(&scheme.family().map_err(usage)?);
    let mut records = Vec::new();
    for s in &specs {
        let rec = periodic_point_with(&br, &dynamics, &s.period, 1e-14).map_err(numerical)?;
        println!(
            "periodic {s}: z = {:.15} {:+.15}i, |multiplier| = {:.6e}, closure {:.1e}",
            rec.z.re,
            rec.z.im,
            cabs(rec.multiplier),
            rec.closure_residual
        );
        records.push(rec);
    }
    let bad: Vec<String> = records
        .iter()
        .filter(|r| !(r.closure_residual < 1e-9 && cabs(r.multiplier) > 1.0))
        .map(|r| r.itinerary.to_string())
        .collect();
    let path = run.path("periodic.json");
    let summary = json!({ "dynamics_c": dynamics.c, "points": records.len(), "failing": bad });
    run.emit(&path, &json_bytes(&records).map_err(numerical)?, summary)?;
    println!("{} points, {}", records.len(), path.display());
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verify(format!("not repelling or not closed: {}", bad.join(" "))))
    }
}

fn cmd_itinerary(run: &Run) -> Outcome<()> {
    let (re, im) = run.cfg.z.ok_or_else(|| usage("itinerary needs --z re,im"))?;
    let scheme = run.scheme()?;
    let family = scheme.family().map_err(usage)?;
    let radius = run.cfg.radius.unwrap_or_else(|| libm::exp(scheme.c));
    let res = itinerary_of(&family, Complex64::new(re, im), run.cfg.n_max, radius);
    let path = run.path("itinerary.json");
    let doc = json!({ "z": [re, im], "escape_radius": radius, "result": res });
    run.emit(&path, &json_bytes(&doc).map_err(numerical)?, json!({ "digits": res.digits.len() }))?;
    println!("itinerary: {:?} ({:?}), {}", res.digits, res.status, path.display());
    Ok(())
}

fn cmd_render(run: &Run) -> Outcome<()> {
    let scheme = run.scheme()?;
    let family = scheme.family().map_err(usage)?;
    let e_c = libm::exp(scheme.c);
    let radius = run.cfg.radius.unwrap_or(e_c);
    if radius < e_c * (1.0 - 1e-12) {
        return Err(usage(format!("radius {radius} is below e^c = {e_c}")));
    }
    let spec = GridSpec {
        window: run.cfg.window,
        width: run.cfg.width,
        height: run.cfg.height,
        max_iter: run.cfg.max_iter,
        escape_radius: radius,
    };
    let grid = classify_grid(&family, &scheme, &spec, run.cfg.workers).map_err(numerical)?;
    let palette = Palette::default();
    let escaped = grid.cells.iter().filter(|c| c.escape_n.is_some()).count();
    let summary = json!({ "grid": spec, "palette": palette, "escaped": escaped, "pixels": grid.cells.len() });
    let ppm = run.path("render.ppm");
    let sha = run.emit(&ppm, &ppm_bytes(&grid, &palette), summary.clone())?;
    println!("render: {}x{} escaped {escaped}; {} sha256 {sha}", spec.width, spec.height, ppm.display());
    if run.cfg.png {
        let png = run.path("render.png");
        let sha = run.emit(&png, &png_bytes(&grid, &palette).map_err(numerical)?, summary)?;
        println!("png: {} sha256 {sha}", png.display());
    }
    Ok(())
}

fn cmd_verify(run: &Run) -> Outcome<()> {
    let scheme = assemble_scheme(run.cfg.params, &run.cfg.scheme).map_err(usage)?;
    let report = run_suite(&scheme, run.cfg.k, run.cfg.seed).map_err(numerical)?;
    for c in &report.checks {
        println!("{} {} ({:.2} s)", if c.pass { "PASS" } else { "FAIL" }, c.name, c.seconds);
    }
    let path = run.path("verify.json");
    let summary = json!({ "pass": report.pass, "failing": report.failing() });
    run.emit(&path, &json_bytes(&report).map_err(numerical)?, summary)?;
    println!("report {}", path.display());
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Verify(format!("failing checks: {}", report.failing().join(", "))))
    }
}
