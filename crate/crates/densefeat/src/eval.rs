//! Retrieval evaluation: dataset manifests, the per-image pipeline from
//! detection to normalized image vector, dot-product ranking, and mean
//! average precision.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{Config, PipelineConfig};
use crate::descriptor::{
    extract_patch, l2_filter, pca_apply, pca_train, rootsift, sift, Descriptor,
    PcaModel, ScalingRule,
};
use crate::driver::DetectorDriver;
use crate::encode::{
    kmeans_train, l2_normalize, power_law, read_codebook, vlad_encode, Codebook, ImageVector,
};
use crate::error::{Error, Result};
use crate::img::{downsample_to_area, load_image, GrayImage};

pub const CODEBOOK_KMEANS_ITERS: usize = 25;

#[derive(Debug, Clone)]
pub struct ManifestEntry {
    /// Path as written in the manifest; report lines use this form.
    pub name: String,
    /// Resolved against the manifest's directory.
    pub path: PathBuf,
    pub group: i64,
    pub is_query: bool,
}

#[derive(Debug, Clone)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

/// One "path<TAB>group_id" line per image, '#' comments, UTF-8. The first
/// entry of each group is that group's query.
pub fn parse_manifest(text: &str, path: &Path, base: &Path) -> Result<Manifest> {
    let mut entries: Vec<ManifestEntry> = Vec::new();
    let mut seen_groups: HashSet<i64> = HashSet::new();
    let mut seen_paths: HashSet<PathBuf> = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, group) = line
            .split_once('\t')
            .ok_or_else(|| Error::text(path, lineno, "expected 'path<TAB>group_id'"))?;
        let (name, group) = (name.trim(), group.trim());
        if name.is_empty() {
            return Err(Error::text(path, lineno, "empty image path"));
        }
        let group: i64 = group
            .parse()
            .map_err(|_| Error::text(path, lineno, format!("group id '{group}' is not an integer")))?;
        let resolved = base.join(name);
        if !seen_paths.insert(resolved.clone()) {
            return Err(Error::text(path, lineno, format!("duplicate image path '{name}'")));
        }
        let is_query = seen_groups.insert(group);
        entries.push(ManifestEntry {
            name: name.to_string(),
            path: resolved,
            group,
            is_query,
        });
    }
    if entries.is_empty() {
        return Err(Error::text(path, 1, "manifest lists no images"));
    }
    Ok(Manifest { entries })
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let bytes = crate::io::read_file(path)?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| Error::text(path, 1, "manifest is not valid UTF-8"))?;
    let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
    parse_manifest(text, path, &base)
}

/// AP = (1/|R|) * sum over relevant hits of precision at the hit's rank.
/// Relevant items missing from `ranked` contribute zero. The ranking must not
/// contain `query`.
pub fn average_precision(ranked: &[usize], relevant: &HashSet<usize>, query: usize) -> f64 {
    debug_assert!(!ranked.contains(&query));
    debug_assert!(!relevant.is_empty());
    let mut hits = 0usize;
    let mut sum = 0.0f64;
    for (i, id) in ranked.iter().enumerate() {
        if relevant.contains(id) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / relevant.len() as f64
}

/// Detects, extracts, describes, and norm-filters one image, returning
/// rootsift descriptors ready for encoding or codebook training.
pub fn image_descriptors(
    img: &GrayImage,
    driver: &DetectorDriver,
    pcfg: &PipelineConfig,
    image_path: Option<&Path>,
) -> Result<Vec<Descriptor>> {
    let kps = driver.detect(img, image_path)?;
    let mut raw = Vec::with_capacity(kps.len());
    for kp in &kps {
        let family = ScalingRule::for_detector(kp.detector);
        if let Some(patch) = extract_patch(img, kp, family, pcfg.patch_size)? {
            raw.push(sift(&patch));
        }
    }
    l2_filter(raw, pcfg.norm_filter)
        .into_iter()
        .map(rootsift)
        .collect()
}

fn rows_of(descs: Vec<Descriptor>, pca: Option<&PcaModel>) -> Result<Vec<Vec<f32>>> {
    descs
        .into_iter()
        .map(|d| {
            Ok(match pca {
                Some(model) => pca_apply(model, &d)?.values,
                None => d.values,
            })
        })
        .collect()
}

/// Codebook plus the optional descriptor rotation, as configured under
/// [codebook] and [pipeline].
#[derive(Debug)]
pub struct PipelineArtifacts {
    pub book: Codebook,
    pub pca: Option<PcaModel>,
}

fn read_image_list(path: &Path) -> Result<Vec<PathBuf>> {
    let bytes = crate::io::read_file(path)?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| Error::text(path, 1, "image list is not valid UTF-8"))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let p = base.join(line);
        if out.contains(&p) {
            return Err(Error::text(path, i + 1, format!("duplicate image '{line}'")));
        }
        out.push(p);
    }
    if out.is_empty() {
        return Err(Error::text(path, 1, "image list is empty"));
    }
    Ok(out)
}

/// Loads or trains the codebook (and the rotation when enabled). The training
/// image set is supposed to be disjoint from the evaluation dataset; overlap
/// produces warnings, not errors.
pub fn prepare_artifacts(
    cfg: &Config,
    base: &Path,
    pcfg: &PipelineConfig,
    driver: &DetectorDriver,
    manifest: &Manifest,
) -> Result<(PipelineArtifacts, Vec<String>)> {
    let file = cfg.path_opt("codebook", "file", base);
    let images = cfg.path_opt("codebook", "images", base);
    let mut warnings = Vec::new();
    match (file, images) {
        (Some(_), Some(_)) => Err(Error::config(
            "[codebook]: give either file or images, not both".to_string(),
        )),
        (None, None) => Err(Error::config(
            "[codebook]: either a trained codebook file or a training image list is required"
                .to_string(),
        )),
        (Some(file), None) => {
            if pcfg.pca {
                return Err(Error::config(
                    "[pipeline] pca: the rotation is trained alongside the codebook, so pca \
                     needs [codebook] images rather than a pre-trained file"
                        .to_string(),
                ));
            }
            let book = read_codebook(&file)?;
            Ok((PipelineArtifacts { book, pca: None }, warnings))
        }
        (None, Some(list)) => {
            let paths = read_image_list(&list)?;
            let dataset: HashSet<&Path> = manifest.entries.iter().map(|e| e.path.as_path()).collect();
            for p in &paths {
                if dataset.contains(p.as_path()) {
                    warnings.push(format!("codebook training image also in dataset: {}", p.display()));
                }
            }
            let pools: Vec<Vec<Descriptor>> = paths
                .par_iter()
                .map(|p| {
                    let img = downsample_to_area(&load_image(p)?, pcfg.downsample_area);
                    image_descriptors(&img, driver, pcfg, Some(p))
                })
                .collect::<Result<_>>()?;
            let pool: Vec<Descriptor> = pools.into_iter().flatten().collect();
            let k = cfg.usize_or("codebook", "k", 256)?;
            let seed = cfg.u64_or("codebook", "seed", 1)?;
            let pca = if pcfg.pca { Some(pca_train(&pool)?) } else { None };
            let rows = rows_of(pool, pca.as_ref())?;
            let book = kmeans_train(&rows, k, seed, CODEBOOK_KMEANS_ITERS)?;
            Ok((PipelineArtifacts { book, pca }, warnings))
        }
    }
}

/// The full per-image pipeline: descriptors, optional rotation, VLAD,
/// power-law, l2 normalization. Also returns the post-filter descriptor count.
pub fn encode_image(
    img: &GrayImage,
    driver: &DetectorDriver,
    pcfg: &PipelineConfig,
    artifacts: &PipelineArtifacts,
    image_path: Option<&Path>,
) -> Result<(ImageVector, usize)> {
    let descs = image_descriptors(img, driver, pcfg, image_path)?;
    let rows = rows_of(descs, artifacts.pca.as_ref())?;
    let count = rows.len();
    let v = vlad_encode(&rows, &artifacts.book);
    let v = power_law(&v, pcfg.power_beta)?;
    Ok((l2_normalize(&v), count))
}

fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    /// (manifest name, AP) per query in manifest order; None when the group
    /// has no other member.
    pub per_query: Vec<(String, Option<f64>)>,
    pub map: Option<f64>,
    pub mean_descriptors: f64,
    pub warnings: Vec<String>,
}

impl EvalReport {
    /// Tab-separated report; byte-stable across runs for fixed inputs.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for w in &self.warnings {
            out.push_str(&format!("warning\t{w}\n"));
        }
        for (name, ap) in &self.per_query {
            match ap {
                Some(ap) => out.push_str(&format!("query\t{name}\t{ap:.6}\n")),
                None => out.push_str(&format!("query\t{name}\tundefined\n")),
            }
        }
        match self.map {
            Some(m) => out.push_str(&format!("mAP\t{m:.6}\n")),
            None => out.push_str("mAP\tundefined\n"),
        }
        out.push_str(&format!("mean_descriptors\t{:.6}\n", self.mean_descriptors));
        out
    }
}

/// Ranks every database image for every query by dot product (ties broken by
/// ascending database index) and aggregates AP over queries with at least one
/// relevant image.
pub fn evaluate_retrieval(manifest: &Manifest, cfg: &Config, base: &Path) -> Result<EvalReport> {
    let pcfg = PipelineConfig::from_config(cfg, None)?;
    evaluate_with(manifest, cfg, base, &pcfg)
}

/// Same as `evaluate_retrieval` with the [pipeline] block already resolved,
/// so sweeps can vary the detector without rewriting config text.
pub fn evaluate_with(
    manifest: &Manifest,
    cfg: &Config,
    base: &Path,
    pcfg: &PipelineConfig,
) -> Result<EvalReport> {
    let driver = DetectorDriver::from_config(pcfg.detector, cfg, base)?;
    let (artifacts, warnings) = prepare_artifacts(cfg, base, pcfg, &driver, manifest)?;

    let encoded: Vec<(ImageVector, usize)> = manifest
        .entries
        .par_iter()
        .map(|e| {
            let img = downsample_to_area(&load_image(&e.path)?, pcfg.downsample_area);
            encode_image(&img, &driver, pcfg, &artifacts, Some(&e.path))
        })
        .collect::<Result<_>>()?;

    let mean_descriptors =
        encoded.iter().map(|(_, c)| *c as f64).sum::<f64>() / encoded.len() as f64;

    let groups: BTreeMap<i64, Vec<usize>> = {
        let mut m: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for (i, e) in manifest.entries.iter().enumerate() {
            m.entry(e.group).or_default().push(i);
        }
        m
    };

    let mut per_query = Vec::new();
    let mut aps = Vec::new();
    for (qi, entry) in manifest.entries.iter().enumerate() {
        if !entry.is_query {
            continue;
        }
        let relevant: HashSet<usize> = groups[&entry.group]
            .iter()
            .copied()
            .filter(|&j| j != qi)
            .collect();
        if relevant.is_empty() {
            per_query.push((entry.name.clone(), None));
            continue;
        }
        let mut ranked: Vec<usize> = (0..encoded.len()).filter(|&j| j != qi).collect();
        let sims: Vec<f64> = ranked
            .iter()
            .map(|&j| dot(&encoded[qi].0.values, &encoded[j].0.values))
            .collect();
        let by_sim: BTreeMap<usize, f64> = ranked.iter().copied().zip(sims).collect();
        ranked.sort_by(|&a, &b| {
            by_sim[&b]
                .partial_cmp(&by_sim[&a])
                .expect("similarities are finite")
                .then(a.cmp(&b))
        });
        let ap = average_precision(&ranked, &relevant, qi);
        per_query.push((entry.name.clone(), Some(ap)));
        aps.push(ap);
    }

    let map = if aps.is_empty() {
        None
    } else {
        Some(aps.iter().sum::<f64>() / aps.len() as f64)
    };
    Ok(EvalReport {
        per_query,
        map,
        mean_descriptors,
        warnings,
    })
}
