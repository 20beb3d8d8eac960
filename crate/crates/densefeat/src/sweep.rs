//! Parameter sweeps: one retrieval evaluation per parameter value, reported
//! as a TSV table and a line chart of score against mean descriptor count.

use std::path::{Path, PathBuf};

use crate::config::{Config, PipelineConfig};
use crate::error::{Error, Result};
use crate::eval::{evaluate_with, Manifest};
use crate::keypoint::DetectorId;

/// The one parameter each detector family sweeps to vary its descriptor
/// count, as (config section, key).
pub fn sweep_param(id: DetectorId) -> (&'static str, &'static str) {
    match id {
        DetectorId::Dense => ("dense", "delta_xy"),
        DetectorId::DenseIp => ("dense-ip", "cell"),
        DetectorId::DenseL2Norm => ("dense-l2norm", "tau"),
        DetectorId::Harris => ("harris", "tau"),
        DetectorId::Frobenius => ("frobenius", "tau"),
        DetectorId::Hessian => ("hessian", "tau"),
        DetectorId::Dog => ("dog", "tau"),
        DetectorId::Zernike => ("zernike", "n_z"),
        DetectorId::Mser => ("mser", "delta"),
        DetectorId::Ssr => ("ssr", "k"),
        DetectorId::MserEdge => ("mser-edge", "delta"),
        DetectorId::SsrEdge => ("ssr-edge", "k"),
        DetectorId::FastEdge => ("fast-edge", "tau"),
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub detector: DetectorId,
    /// Values as written in the spec file; they pass through to the config
    /// override and the TSV verbatim.
    pub values: Vec<String>,
    /// Base pipeline configuration the sweep perturbs.
    pub config: PathBuf,
}

/// A sweep spec is a config file with a [sweep] section: detector, values,
/// the base config path, and optionally the parameter name (which must match
/// the detector's sweep parameter; it exists so specs read unambiguously).
pub fn load_sweep_spec(path: &Path) -> Result<SweepSpec> {
    let cfg = Config::load(path)?;
    let base = path.parent().unwrap_or(Path::new(""));
    let token = cfg
        .get("sweep", "detector")
        .ok_or_else(|| Error::config("[sweep] detector is required".to_string()))?;
    let detector = DetectorId::from_token(token)
        .ok_or_else(|| Error::config(format!("[sweep] detector: unknown detector '{token}'")))?;
    let (_, key) = sweep_param(detector);
    if let Some(param) = cfg.get("sweep", "param") {
        if param != key {
            return Err(Error::config(format!(
                "[sweep] param: {} sweeps '{key}', not '{param}'",
                detector.token()
            )));
        }
    }
    let values: Vec<String> = cfg
        .get("sweep", "values")
        .ok_or_else(|| Error::config("[sweep] values is required".to_string()))?
        .split_whitespace()
        .map(str::to_string)
        .collect();
    if values.is_empty() {
        return Err(Error::config("[sweep] values is empty".to_string()));
    }
    for v in &values {
        if v.parse::<f64>().is_err() {
            return Err(Error::config(format!(
                "[sweep] values: '{v}' is not a number"
            )));
        }
    }
    let config = cfg
        .path_opt("sweep", "config", base)
        .ok_or_else(|| Error::config("[sweep] config: a base pipeline config is required".to_string()))?;
    Ok(SweepSpec {
        detector,
        values,
        config,
    })
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: String,
    pub mean_descriptors: f64,
    pub map: Option<f64>,
}

/// Runs one evaluation per value by overriding the detector's sweep key in
/// the base config. Row order follows the spec's value order.
pub fn run_sweep(manifest: &Manifest, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let base_cfg = Config::load(&spec.config)?;
    let base_dir = spec.config.parent().unwrap_or(Path::new("")).to_path_buf();
    let (section, key) = sweep_param(spec.detector);
    let mut rows = Vec::with_capacity(spec.values.len());
    for value in &spec.values {
        let mut cfg = base_cfg.clone();
        cfg.set(section, key, value.clone());
        let pcfg = PipelineConfig::from_config(&cfg, Some(spec.detector))?;
        let report = evaluate_with(manifest, &cfg, &base_dir, &pcfg)?;
        rows.push(SweepRow {
            value: value.clone(),
            mean_descriptors: report.mean_descriptors,
            map: report.map,
        });
    }
    Ok(rows)
}

/// Byte-stable TSV: a commented header naming the swept key, then one row per
/// value.
pub fn render_tsv(detector: DetectorId, rows: &[SweepRow]) -> String {
    let (_, key) = sweep_param(detector);
    let mut out = format!("# {key}\tmean_descriptors\tmAP\n");
    for r in rows {
        let map = match r.map {
            Some(m) => format!("{m:.6}"),
            None => "undefined".to_string(),
        };
        out.push_str(&format!("{}\t{:.6}\t{map}\n", r.value, r.mean_descriptors));
    }
    out
}

/// Chart points: (mean descriptor count, mAP), skipping undefined rows.
pub fn chart_points(rows: &[SweepRow]) -> Vec<(f64, f64)> {
    rows.iter()
        .filter_map(|r| r.map.map(|m| (r.mean_descriptors, m)))
        .collect()
}
