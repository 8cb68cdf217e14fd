//! Escape-time classification, the fast-escape test against M^n(R), and imagery.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cmath::{cabs, from_polar_log, PI};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::geometry::{strip_index, RegionLabel, RegionScheme};
use crate::tower::Tower;

/// |z| above which orbits are carried as (log|z|, arg z).
pub const HUGE_THRESHOLD: f64 = 1e150;
/// Largest |z| at which the phase of e^{ω^k z} is still resolved.
pub const PHASE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MGrowthTable {
    pub base_r: f64,
    /// log M^n(R, f) for n = 0..=n_max.
    pub values: Vec<Tower>,
}

/// log M^n(R) by iterating the maximum modulus in log scale.
pub fn build_m_table(family: &Family, r: f64, n_max: usize) -> Result<MGrowthTable> {
    if !(r > 0.0) || family.log_max_modulus(r, 1e-12) <= libm::log(r) {
        return Err(Error::RTooSmall { r });
    }
    let mut values = vec![Tower::real(libm::log(r))];
    for n in 0..n_max {
        let prev = values[n];
        let next = match prev.to_f64() {
            Some(l) if l <= crate::cmath::LN_MAX => Tower::real(family.log_max_modulus(libm::exp(l), 1e-12)),
            // far out M(r) = λ e^r (1 + o(1)), so log M(r) = r + ln λ
            _ => prev.exp().add(family.ln_lambda()),
        };
        values.push(next);
    }
    Ok(MGrowthTable { base_r: r, values })
}

impl MGrowthTable {
    pub fn strictly_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[0] < w[1])
    }
}

/// An orbit point, exact while representable and in log form beyond.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrbitPoint {
    Plain(Complex64),
    Huge { log_mod: Tower, arg: Option<f64> },
}

impl OrbitPoint {
    pub fn log_mod(&self) -> Tower {
        match *self {
            OrbitPoint::Plain(z) => Tower::real(libm::log(cabs(z))),
            OrbitPoint::Huge { log_mod, .. } => log_mod,
        }
    }
}

/// One step of f in the log-scale model. The flag is set when the argument
/// is unknown and the lower bound cos(π/p) replaced the dominant cosine.
pub fn step_log_scale(family: &Family, pt: OrbitPoint) -> (OrbitPoint, bool) {
    match pt {
        OrbitPoint::Plain(z) => {
            let v = family.log_f(z);
            let arg = (cabs(z) < PHASE_LIMIT).then_some(v.arg);
            if v.log_mod <= libm::log(HUGE_THRESHOLD) {
                (OrbitPoint::Plain(from_polar_log(v.log_mod, v.arg)), false)
            } else {
                (
                    OrbitPoint::Huge {
                        log_mod: Tower::real(v.log_mod),
                        arg,
                    },
                    false,
                )
            }
        }
        OrbitPoint::Huge { log_mod, arg } => {
            let p = family.p();
            let (cmax, uncertain) = match arg {
                Some(t) => (
                    (0..p)
                        .map(|k| libm::cos(t + 2.0 * PI * k as f64 / p as f64))
                        .fold(f64::NEG_INFINITY, f64::max),
                    false,
                ),
                None => (family.cos_half(), true),
            };
            let next = log_mod.exp().scale(cmax).add(family.ln_lambda());
            (OrbitPoint::Huge { log_mod: next, arg: None }, uncertain)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FastEscape {
    pub qualifies: bool,
    pub l: Option<usize>,
    /// Some step used the cos(π/p) lower bound for lack of an argument.
    pub model_uncertain: bool,
}

/// Smallest L ≤ l_max with log|f^{n+L}(z)| ≥ log M^n(R) for all n ≤ horizon.
pub fn fast_escape_test(family: &Family, table: &MGrowthTable, z: Complex64, l_max: usize, horizon: usize) -> Result<FastEscape> {
    if horizon >= table.values.len() {
        return Err(Error::InvalidParams(format!(
            "horizon {horizon} exceeds the table length {}",
            table.values.len()
        )));
    }
    let mut orbit = vec![Tower::real(libm::log(cabs(z)))];
    let mut pt = OrbitPoint::Plain(z);
    let mut model_uncertain = false;
    for _ in 0..horizon + l_max {
        let (next, u) = step_log_scale(family, pt);
        model_uncertain |= u;
        orbit.push(next.log_mod());
        pt = next;
    }
    for l in 0..=l_max {
        if (0..=horizon).all(|n| !(orbit[n + l] < table.values[n])) {
            return Ok(FastEscape {
                qualifies: true,
                l: Some(l),
                model_uncertain,
            });
        }
    }
    Ok(FastEscape {
        qualifies: false,
        l: None,
        model_uncertain,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Window {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        if !(re_min < re_max && im_min < im_max) || ![re_min, re_max, im_min, im_max].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "bad window [{re_min}, {re_max}] x [{im_min}, {im_max}]"
            )));
        }
        Ok(Window {
            re_min,
            re_max,
            im_min,
            im_max,
        })
    }

    /// Point reflection z ↦ −z.
    pub fn negated(&self) -> Self {
        Window {
            re_min: -self.re_max,
            re_max: -self.re_min,
            im_min: -self.im_max,
            im_max: -self.im_min,
        }
    }

    /// Parse "re_min,re_max,im_min,im_max".
    pub fn parse(s: &str) -> Result<Self> {
        let v: Vec<f64> = s
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidParams(format!("bad window {s:?}")))?;
        if v.len() != 4 {
            return Err(Error::InvalidParams(format!("window needs 4 numbers, got {s:?}")));
        }
        Window::new(v[0], v[1], v[2], v[3])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub window: Window,
    pub width: usize,
    pub height: usize,
    pub max_iter: u32,
    pub escape_radius: f64,
}

impl GridSpec {
    /// Pixel centre; row 0 is the top edge. Offsets are taken from the window
    /// centre so that the grid of −W is the exact negation of the grid of W.
    pub fn pixel(&self, col: usize, row: usize) -> Complex64 {
        let w = &self.window;
        let dx = (w.re_max - w.re_min) / self.width as f64;
        let dy = (w.im_max - w.im_min) / self.height as f64;
        let cx = 0.5 * (w.re_min + w.re_max);
        let cy = 0.5 * (w.im_min + w.im_max);
        let ox = (col as f64 + 0.5) - 0.5 * self.width as f64;
        let oy = 0.5 * self.height as f64 - (row as f64 + 0.5);
        Complex64::new(cx + ox * dx, cy + oy * dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub escape_n: Option<u32>,
    pub final_label: RegionLabel,
    pub log_log_modulus: f64,
    pub digit0: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeGrid {
    pub spec: GridSpec,
    pub cells: Vec<Cell>,
}

/// Escape time of one point: the first n with |f^n(z)| > radius.
pub fn classify_point(family: &Family, scheme: &RegionScheme, z: Complex64, max_iter: u32, radius: f64) -> Cell {
    let ln_r = libm::log(radius);
    let digit0 = strip_index(z).ok();
    let mut w = z;
    let mut escape_n = None;
    let mut log_mod = libm::log(cabs(z));
    if cabs(z) > radius {
        escape_n = Some(0);
    } else {
        for n in 1..=max_iter {
            let s = family.scaled(w);
            let lm = s.log_mod();
            if lm > ln_r {
                escape_n = Some(n);
                log_mod = lm;
                break;
            }
            w = from_polar_log(lm, s.arg());
            log_mod = lm;
        }
    }
    Cell {
        escape_n,
        final_label: scheme.classify_with(family, w),
        log_log_modulus: libm::log(log_mod.max(f64::MIN_POSITIVE)),
        digit0,
    }
}

pub fn classify_grid(family: &Family, scheme: &RegionScheme, spec: &GridSpec, workers: usize) -> Result<EscapeGrid> {
    if spec.width == 0 || spec.height == 0 {
        return Err(Error::InvalidParams("grid must have positive size".into()));
    }
    if !(spec.escape_radius >= libm::exp(scheme.c) * (1.0 - 1e-12)) {
        return Err(Error::InvalidParams(format!(
            "escape radius {} is below e^c = {}",
            spec.escape_radius,
            libm::exp(scheme.c)
        )));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
    let rows: Vec<Vec<Cell>> = pool.install(|| {
        (0..spec.height)
            .into_par_iter()
            .map(|row| {
                (0..spec.width)
                    .map(|col| classify_point(family, scheme, spec.pixel(col, row), spec.max_iter, spec.escape_radius))
                    .collect()
            })
            .collect()
    });
    Ok(EscapeGrid {
        spec: *spec,
        cells: rows.into_iter().flatten().collect(),
    })
}

/// Colour scheme: bounded pixels black; escaping pixels take a hue from the
/// first strip digit and a brightness from the escape time mod `cycle`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Palette {
    pub cycle: u32,
}

impl Default for Palette {
    fn default() -> Self {
        Palette { cycle: 6 }
    }
}

const HUES: [[u16; 3]; 6] = [
    [255, 196, 64],
    [64, 160, 255],
    [255, 96, 96],
    [96, 224, 128],
    [200, 120, 255],
    [64, 224, 224],
];

impl Palette {
    pub fn color(&self, cell: &Cell) -> [u8; 3] {
        match cell.escape_n {
            None => [0, 0, 0],
            Some(n) => {
                let hue = match cell.digit0 {
                    Some(d) => HUES[d.rem_euclid(HUES.len() as i64) as usize],
                    None => [255, 255, 255],
                };
                let cycle = self.cycle.max(1);
                let level = 256 - (n % cycle) as u16 * (200 / cycle as u16);
                let mut out = [0u8; 3];
                for (o, h) in out.iter_mut().zip(hue) {
                    *o = ((h * level) >> 8) as u8;
                }
                out
            }
        }
    }
}

/// Raw RGB bytes, row-major from the top.
pub fn rgb_bytes(grid: &EscapeGrid, palette: &Palette) -> Vec<u8> {
    grid.cells.iter().flat_map(|c| palette.color(c)).collect()
}

pub fn ppm_bytes(grid: &EscapeGrid, palette: &Palette) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", grid.spec.width, grid.spec.height).into_bytes();
    out.extend(rgb_bytes(grid, palette));
    out
}

pub fn png_bytes(grid: &EscapeGrid, palette: &Palette) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, grid.spec.width as u32, grid.spec.height as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let io = |e: png::EncodingError| Error::io("<png>", std::io::Error::other(e.to_string()));
        let mut w = enc.write_header().map_err(io)?;
        w.write_image_data(&rgb_bytes(grid, palette)).map_err(io)?;
    }
    Ok(out)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let d = Sha256::digest(bytes);
    d.iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes the PPM (and a PNG when the path has a .png sibling requested);
/// returns the sha256 of the PPM bytes.
pub fn render_image(grid: &EscapeGrid, palette: &Palette, path: &Path, png: bool) -> Result<String> {
    let ppm = ppm_bytes(grid, palette);
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&ppm).map_err(|e| Error::io(path, e))?;
    if png {
        let pp = path.with_extension("png");
        std::fs::write(&pp, png_bytes(grid, palette)?).map_err(|e| Error::io(&pp, e))?;
    }
    Ok(sha256_hex(&ppm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::FamilyParams;

    fn setup(p: usize) -> (Family, RegionScheme) {
        let params = FamilyParams::new(p, 1.0).unwrap();
        (Family::new(params).unwrap(), RegionScheme::defaults(params).unwrap())
    }

    #[test]
    fn m_table_examples() {
        let (f, _) = setup(3);
        let t = build_m_table(&f, 10.0, 5).unwrap();
        assert_eq!(t.values.len(), 6);
        assert!(t.strictly_increasing());
        assert!(t.values[1].to_f64().unwrap() >= 10.0 - 1e-3);
        assert!(matches!(build_m_table(&f, -1.0, 3), Err(Error::RTooSmall { .. })));
    }

    #[test]
    fn fast_escape_examples() {
        let (f, _) = setup(3);
        let t = build_m_table(&f, 50.0, 6).unwrap();
        let r = fast_escape_test(&f, &t, Complex64::new(50.0, 0.0), 2, 5).unwrap();
        assert!(r.qualifies && r.l.unwrap() <= 2);
        let z = fast_escape_test(&f, &t, Complex64::new(0.0, 0.0), 2, 4).unwrap();
        assert!(!z.qualifies);
        // 0 → 3 → 19.7 → 3.6e8 catches up only with a lag of 3
        assert_eq!(fast_escape_test(&f, &t, Complex64::new(0.0, 0.0), 3, 4).unwrap().l, Some(3));
    }

    #[test]
    fn pixel_examples() {
        let (f, s) = setup(3);
        let r = libm::exp(s.c);
        let c = classify_point(&f, &s, Complex64::new(30.0, 0.0), 50, r);
        assert!(matches!(c.escape_n, Some(0) | Some(1)));
        // 0 → 3 → 19.7 → 3.6e8 leaves any radius e^c below 3.6e8
        let c = classify_point(&f, &s, Complex64::new(0.0, 0.0), 50, r);
        assert_eq!(c.escape_n, Some(3));
        assert_eq!(c.digit0, Some(0));
    }

    #[test]
    fn ppm_header_and_worker_independence() {
        let (f, s) = setup(3);
        let spec = GridSpec {
            window: Window::new(-4.0, 4.0, -4.0, 4.0).unwrap(),
            width: 40,
            height: 30,
            max_iter: 30,
            escape_radius: libm::exp(s.c),
        };
        let a = classify_grid(&f, &s, &spec, 1).unwrap();
        let b = classify_grid(&f, &s, &spec, 3).unwrap();
        let pa = ppm_bytes(&a, &Palette::default());
        assert_eq!(pa, ppm_bytes(&b, &Palette::default()));
        assert!(pa.starts_with(b"P6\n40 30\n255\n"));
        assert_eq!(pa.len(), 13 + 40 * 30 * 3);
    }

    #[test]
    fn even_p_mirror() {
        let (f, s) = setup(4);
        let spec = GridSpec {
            window: Window::new(-3.0, 5.0, -2.0, 6.0).unwrap(),
            width: 33,
            height: 21,
            max_iter: 30,
            escape_radius: libm::exp(s.c),
        };
        let neg = GridSpec {
            window: spec.window.negated(),
            ..spec
        };
        let a = classify_grid(&f, &s, &spec, 1).unwrap();
        let b = classify_grid(&f, &s, &neg, 1).unwrap();
        let n = a.cells.len();
        for i in 0..n {
            assert_eq!(a.cells[i].escape_n, b.cells[n - 1 - i].escape_n);
        }
    }
}
