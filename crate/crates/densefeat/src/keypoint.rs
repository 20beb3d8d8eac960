//! Keypoint record shared by every detector, and its text file format.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

/// Which side of the response an extremum sits on. `NoPolarity` is used by
/// samplers that never look at a response map (the dense grid).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Max,
    Min,
    NoPolarity,
}

impl Polarity {
    pub fn token(self) -> &'static str {
        match self {
            Polarity::Max => "max",
            Polarity::Min => "min",
            Polarity::NoPolarity => "none",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        match s {
            "max" => Some(Polarity::Max),
            "min" => Some(Polarity::Min),
            "none" => Some(Polarity::NoPolarity),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorId {
    Dense,
    DenseIp,
    DenseL2Norm,
    Harris,
    Frobenius,
    Hessian,
    Dog,
    Zernike,
    Mser,
    Ssr,
    MserEdge,
    SsrEdge,
    FastEdge,
}

pub const ALL_DETECTORS: [DetectorId; 13] = [
    DetectorId::Dense,
    DetectorId::DenseIp,
    DetectorId::DenseL2Norm,
    DetectorId::Harris,
    DetectorId::Frobenius,
    DetectorId::Hessian,
    DetectorId::Dog,
    DetectorId::Zernike,
    DetectorId::Mser,
    DetectorId::Ssr,
    DetectorId::MserEdge,
    DetectorId::SsrEdge,
    DetectorId::FastEdge,
];

impl DetectorId {
    pub fn token(self) -> &'static str {
        match self {
            DetectorId::Dense => "dense",
            DetectorId::DenseIp => "dense-ip",
            DetectorId::DenseL2Norm => "dense-l2norm",
            DetectorId::Harris => "harris",
            DetectorId::Frobenius => "frobenius",
            DetectorId::Hessian => "hessian",
            DetectorId::Dog => "dog",
            DetectorId::Zernike => "zernike",
            DetectorId::Mser => "mser",
            DetectorId::Ssr => "ssr",
            DetectorId::MserEdge => "mser-edge",
            DetectorId::SsrEdge => "ssr-edge",
            DetectorId::FastEdge => "fast-edge",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        ALL_DETECTORS.iter().copied().find(|d| d.token() == s)
    }

    /// Detectors that place patches at stack levels rather than selecting a
    /// characteristic scale. Their keypoints are drawn as squares by the
    /// visualizer; scale-selecting detectors are drawn as circles.
    pub fn is_fixed_scale(self) -> bool {
        matches!(
            self,
            DetectorId::Dense
                | DetectorId::DenseIp
                | DetectorId::DenseL2Norm
                | DetectorId::Zernike
                | DetectorId::MserEdge
                | DetectorId::SsrEdge
                | DetectorId::FastEdge
        )
    }
}

impl fmt::Display for DetectorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// A detected location. `x`/`y` are always at original-image resolution;
/// `sigma` is the detection radius in original pixels; `scale_index` is the
/// stack or ladder level the point came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    pub x: f32,
    pub y: f32,
    pub sigma: f32,
    pub response: f32,
    pub scale_index: u32,
    pub detector: DetectorId,
    pub polarity: Polarity,
}

pub const KEYPOINT_HEADER: &str = "densefeat-kp 1";

/// Serializes keypoints in the shared text format: a header line, a count
/// line, then "x y sigma response scale_index detector_id polarity" per
/// point with 6-decimal fixed-point reals.
pub fn format_keypoints(kps: &[Keypoint]) -> String {
    let mut out = String::with_capacity(32 + kps.len() * 64);
    out.push_str(KEYPOINT_HEADER);
    out.push('\n');
    out.push_str(&kps.len().to_string());
    out.push('\n');
    for kp in kps {
        out.push_str(&format!(
            "{:.6} {:.6} {:.6} {:.6} {} {} {}\n",
            kp.x,
            kp.y,
            kp.sigma,
            kp.response,
            kp.scale_index,
            kp.detector.token(),
            kp.polarity.token()
        ));
    }
    out
}

pub fn write_keypoints(path: &Path, kps: &[Keypoint]) -> Result<()> {
    crate::io::write_file(path, format_keypoints(kps).as_bytes())
}

pub fn read_keypoints(path: &Path) -> Result<Vec<Keypoint>> {
    let bytes = crate::io::read_file(path)?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| Error::text(path, 1, "keypoint file is not valid UTF-8"))?;
    let mut lines = text.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::text(path, 1, "empty file"))?;
    if header.trim_end() != KEYPOINT_HEADER {
        return Err(Error::text(path, 1, format!("bad header {header:?}")));
    }
    let (_, count_line) = lines
        .next()
        .ok_or_else(|| Error::text(path, 2, "missing count line"))?;
    let count: usize = count_line
        .trim()
        .parse()
        .map_err(|_| Error::text(path, 2, format!("bad count {count_line:?}")))?;

    let mut kps = Vec::with_capacity(count);
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 7 {
            return Err(Error::text(
                path,
                lineno,
                format!("expected 7 fields, found {}", f.len()),
            ));
        }
        let real = |s: &str, what: &str| -> Result<f32> {
            let v: f32 = s
                .parse()
                .map_err(|_| Error::text(path, lineno, format!("bad {what} {s:?}")))?;
            if !v.is_finite() {
                return Err(Error::text(path, lineno, format!("non-finite {what}")));
            }
            Ok(v)
        };
        let kp = Keypoint {
            x: real(f[0], "x")?,
            y: real(f[1], "y")?,
            sigma: real(f[2], "sigma")?,
            response: real(f[3], "response")?,
            scale_index: f[4]
                .parse()
                .map_err(|_| Error::text(path, lineno, format!("bad scale_index {:?}", f[4])))?,
            detector: DetectorId::from_token(f[5])
                .ok_or_else(|| Error::text(path, lineno, format!("unknown detector {:?}", f[5])))?,
            polarity: Polarity::from_token(f[6])
                .ok_or_else(|| Error::text(path, lineno, format!("unknown polarity {:?}", f[6])))?,
        };
        if kp.sigma <= 0.0 {
            return Err(Error::text(path, lineno, "sigma must be positive"));
        }
        kps.push(kp);
    }
    if kps.len() != count {
        return Err(Error::text(
            path,
            2,
            format!("count line says {count}, file has {} keypoints", kps.len()),
        ));
    }
    Ok(kps)
}
