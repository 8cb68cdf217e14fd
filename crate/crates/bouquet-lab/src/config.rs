//! Run configuration: a JSON file layer merged under command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::escape::Window;
use crate::family::FamilyParams;
use crate::geometry::SchemeOverrides;

/// Environment variable consulted when no output directory is given.
pub const OUT_ENV: &str = "BOUQUET_LAB_OUT";

/// One layer of settings; every field optional so layers can be merged.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigLayer {
    pub p: Option<usize>,
    pub lambda: Option<f64>,
    #[serde(rename = "K")]
    pub k: Option<u32>,
    pub scheme: SchemeOverrides,
    /// Rectangle index range "a..b" (inclusive).
    pub m: Option<String>,
    /// "all" or a comma separated list of ray indices.
    pub rays: Option<String>,
    /// Itineraries in "a,b|c,d" form.
    pub s: Option<Vec<String>>,
    pub tmax: Option<f64>,
    pub samples: Option<usize>,
    /// "re_min,re_max,im_min,im_max".
    pub window: Option<String>,
    /// "N" or "WxH".
    pub size: Option<String>,
    pub max_iter: Option<u32>,
    pub radius: Option<f64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub png: Option<bool>,
    /// Starting point "re,im" for the itinerary command.
    pub z: Option<String>,
    pub n_max: Option<usize>,
}

macro_rules! take_over {
    ($base:ident, $over:ident, $($f:ident),*) => {
        $( if $over.$f.is_some() { $base.$f = $over.$f; } )*
    };
}

impl ConfigLayer {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidParams(format!("{}: {e}", path.display())))
    }

    /// Fields set in `over` replace those in `self`.
    pub fn merged(mut self, over: ConfigLayer) -> Self {
        take_over!(
            self, over, p, lambda, k, m, rays, s, tmax, samples, window, size, max_iter, radius, workers,
            out, seed, png, z, n_max
        );
        let (b, o) = (&mut self.scheme, over.scheme);
        take_over!(b, o, sigma, eta, tau, nu, c, safety);
        self
    }
}

/// Validated settings for one run; echoed into every output sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub params: FamilyParams,
    pub scheme: SchemeOverrides,
    #[serde(rename = "K")]
    pub k: u32,
    pub m: Option<(i64, i64)>,
    pub rays: Vec<usize>,
    pub s: Vec<String>,
    pub tmax: f64,
    pub samples: usize,
    pub window: Window,
    pub width: usize,
    pub height: usize,
    pub max_iter: u32,
    pub radius: Option<f64>,
    pub workers: usize,
    pub out: PathBuf,
    pub seed: u64,
    pub png: bool,
    pub z: Option<(f64, f64)>,
    pub n_max: usize,
}

pub fn parse_m_range(text: &str) -> Result<(i64, i64)> {
    let bad = || Error::InvalidParams(format!("m range must look like a..b, got {text:?}"));
    let (a, b) = text.split_once("..").ok_or_else(bad)?;
    let a: i64 = a.trim().parse().map_err(|_| bad())?;
    let b: i64 = b.trim().parse().map_err(|_| bad())?;
    if a < 1 || b < a {
        return Err(Error::InvalidParams(format!("m range {a}..{b} must satisfy 1 <= a <= b")));
    }
    Ok((a, b))
}

pub fn parse_rays(text: &str, p: usize) -> Result<Vec<usize>> {
    if text.trim() == "all" {
        return Ok((0..p).collect());
    }
    let mut out = Vec::new();
    for part in text.split(',') {
        let k: usize = part
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParams(format!("bad ray index {part:?}")))?;
        if k >= p {
            return Err(Error::InvalidParams(format!("ray index {k} must be below p = {p}")));
        }
        out.push(k);
    }
    Ok(out)
}

pub fn parse_size(text: &str) -> Result<(usize, usize)> {
    let bad = || Error::InvalidParams(format!("size must be N or WxH, got {text:?}"));
    let (w, h) = match text.split_once(['x', 'X']) {
        Some((w, h)) => (w.trim().parse().map_err(|_| bad())?, h.trim().parse().map_err(|_| bad())?),
        None => {
            let n = text.trim().parse().map_err(|_| bad())?;
            (n, n)
        }
    };
    if w == 0 || h == 0 {
        return Err(bad());
    }
    Ok((w, h))
}

pub fn parse_point(text: &str) -> Result<(f64, f64)> {
    let bad = || Error::InvalidParams(format!("point must look like re,im, got {text:?}"));
    let (a, b) = text.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

impl RunConfig {
    /// Applies defaults and validates every field. `env_out` is the value of
    /// the output-directory environment variable, if set.
    pub fn resolve(layer: ConfigLayer, env_out: Option<PathBuf>) -> Result<Self> {
        let params = FamilyParams::new(layer.p.unwrap_or(3), layer.lambda.unwrap_or(1.0))?;
        let k = layer.k.unwrap_or(3);
        if k == 0 {
            return Err(Error::InvalidParams("K must be at least 1".into()));
        }
        let m = layer.m.as_deref().map(parse_m_range).transpose()?;
        let rays = parse_rays(layer.rays.as_deref().unwrap_or("0"), params.p)?;
        let window = match layer.window.as_deref() {
            Some(w) => Window::parse(w)?,
            None => Window::new(-8.0, 8.0, -8.0, 8.0)?,
        };
        let (width, height) = parse_size(layer.size.as_deref().unwrap_or("512"))?;
        let tmax = layer.tmax.unwrap_or(30.0);
        if !(tmax > 1.0 && tmax.is_finite()) {
            return Err(Error::InvalidParams(format!("tmax must exceed 1, got {tmax}")));
        }
        if let Some(r) = layer.radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidParams(format!("radius must be positive, got {r}")));
            }
        }
        let max_iter = layer.max_iter.unwrap_or(50);
        if max_iter == 0 {
            return Err(Error::InvalidParams("max-iter must be positive".into()));
        }
        let workers = layer
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        if workers == 0 {
            return Err(Error::InvalidParams("workers must be positive".into()));
        }
        let s = layer.s.unwrap_or_default();
        for text in &s {
            text.parse::<crate::symbolic::ItinerarySpec>()?;
        }
        Ok(RunConfig {
            params,
            scheme: layer.scheme,
            k,
            m,
            rays,
            s,
            tmax,
            samples: layer.samples.unwrap_or(32).max(2),
            window,
            width,
            height,
            max_iter,
            radius: layer.radius,
            workers,
            out: layer.out.or(env_out).unwrap_or_else(|| PathBuf::from("out")),
            seed: layer.seed.unwrap_or(0),
            png: layer.png.unwrap_or(false),
            z: layer.z.as_deref().map(parse_point).transpose()?,
            n_max: layer.n_max.unwrap_or(20),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let file: ConfigLayer = serde_json::from_str(r#"{"p": 5, "lambda": 2.0, "scheme": {"c": 30.0}, "seed": 4}"#).unwrap();
        let flags = ConfigLayer {
            p: Some(4),
            scheme: SchemeOverrides {
                tau: Some(9.0),
                ..Default::default()
            },
            ..Default::default()
        };
        let m = file.merged(flags);
        assert_eq!(m.p, Some(4));
        assert_eq!(m.lambda, Some(2.0));
        assert_eq!(m.seed, Some(4));
        assert_eq!(m.scheme.c, Some(30.0));
        assert_eq!(m.scheme.tau, Some(9.0));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<ConfigLayer>(r#"{"pp": 3}"#).is_err());
    }

    #[test]
    fn output_dir_falls_back_to_env_value() {
        let c = RunConfig::resolve(ConfigLayer::default(), Some("/tmp/x".into())).unwrap();
        assert_eq!(c.out, PathBuf::from("/tmp/x"));
        let layer = ConfigLayer {
            out: Some("here".into()),
            ..Default::default()
        };
        assert_eq!(RunConfig::resolve(layer, Some("/tmp/x".into())).unwrap().out, PathBuf::from("here"));
    }

    #[test]
    fn parsers() {
        assert_eq!(parse_m_range("5..25").unwrap(), (5, 25));
        assert!(parse_m_range("0..3").is_err());
        assert!(parse_m_range("7..3").is_err());
        assert_eq!(parse_rays("all", 4).unwrap(), vec![0, 1, 2, 3]);
        assert!(parse_rays("3", 3).is_err());
        assert_eq!(parse_size("640x480").unwrap(), (640, 480));
        assert_eq!(parse_size("64").unwrap(), (64, 64));
        assert_eq!(parse_point("1.5,-2").unwrap(), (1.5, -2.0));
    }

    #[test]
    fn invalid_p_is_rejected() {
        let layer = ConfigLayer {
            p: Some(2),
            ..Default::default()
        };
        assert!(matches!(RunConfig::resolve(layer, None), Err(Error::InvalidParams(_))));
    }
}
