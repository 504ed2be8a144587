//! Dataset generation: paired noisy images, masks and the manifest.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{compute_channel_stats, DatasetManifest, RecordEntry};
use crate::error::{Error, Result};
use crate::rng::{self, seeded};
use crate::synth::{
    composite, render_annotation, save_mask_png, AnnotationKind, Image, Sampler, StampLibrary,
    SynthConfig,
};

pub const MANIFEST_VERSION: &str = "1";

#[derive(Debug, Clone, Default)]
pub struct BuildOptions {
    /// Overwrite an existing non-empty output directory.
    pub force: bool,
    /// Placement and rasterization tunables.
    pub synth: SynthConfig,
    /// Stamp library; the built-in glyph set when absent.
    pub library: Option<StampLibrary>,
}

const SUBDIRS: [&str; 5] = ["clean", "noisy_a", "noisy_b", "mask_a", "mask_b"];

/// Build `n_pairs` records from the clean images in `clean_dir`.
///
/// Each record draws its own seed from the master seed, picks a clean image
/// with replacement, samples two independent placements and writes
/// `{clean,noisy_a,noisy_b,mask_a,mask_b}/<record_id>.png` plus its manifest
/// entry. Channel statistics are computed over the distinct clean images so
/// both training schemes share one normalization.
pub fn build_dataset(
    clean_dir: &Path,
    kind: AnnotationKind,
    n_pairs: usize,
    master_seed: u64,
    out_dir: &Path,
    options: &BuildOptions,
) -> Result<DatasetManifest> {
    if n_pairs == 0 {
        return Err(Error::validation("n_pairs must be at least 1"));
    }
    let clean_paths = list_clean_images(clean_dir)?;
    let clean_images: Vec<(String, Image)> = clean_paths
        .iter()
        .map(|p| {
            let group = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Image::load_png(p).map(|img| (group, img))
        })
        .collect::<Result<_>>()?;

    prepare_out_dir(out_dir, options.force)?;

    let library = options
        .library
        .clone()
        .unwrap_or_else(StampLibrary::builtin);
    library.require_kind(kind)?;
    let sampler = Sampler::new(options.synth.clone());

    let records: Vec<RecordEntry> = (0..n_pairs)
        .into_par_iter()
        .map(|idx| {
            let record_id = format!("r{idx:06}");
            let seed = rng::derive_seed(master_seed, idx as u64);
            generate_record(
                &record_id,
                seed,
                &clean_images,
                kind,
                &library,
                &sampler,
                out_dir,
            )
        })
        .collect::<Result<_>>()?;

    let stats_input: Vec<Image> = clean_images.iter().map(|(_, img)| img.clone()).collect();
    let manifest = DatasetManifest {
        version: MANIFEST_VERSION.to_string(),
        master_seed,
        annotation_kind: kind,
        records,
        channel_stats: compute_channel_stats(&stats_input)?,
        splits: Default::default(),
        split_fractions: None,
        split_seed: None,
    };
    manifest.save(out_dir)?;
    Ok(manifest)
}

/// Synthesize one record. Pure given (seed, clean set, library, config), so
/// records can be regenerated in isolation and in parallel.
fn generate_record(
    record_id: &str,
    seed: u64,
    clean_images: &[(String, Image)],
    kind: AnnotationKind,
    library: &StampLibrary,
    sampler: &Sampler,
    out_dir: &Path,
) -> Result<RecordEntry> {
    let mut rng = seeded(seed);
    let clean_idx = rng::uniform_usize(&mut rng, clean_images.len());
    let (group, clean) = &clean_images[clean_idx];
    let dims = clean.dims();

    let mut stamp_once = || -> Result<(Image, ndarray::Array2<u8>)> {
        let placement = sampler.sample_from_library(kind, dims, library, &mut rng)?;
        let overlay = render_annotation(&placement, library, dims, sampler.config())?;
        composite(clean, &overlay)
    };
    let (noisy_a, mask_a) = stamp_once()?;
    let (noisy_b, mask_b) = stamp_once()?;

    let rel = |sub: &str| format!("{sub}/{record_id}.png");
    clean.save_png(&out_dir.join(rel("clean")))?;
    noisy_a.save_png(&out_dir.join(rel("noisy_a")))?;
    noisy_b.save_png(&out_dir.join(rel("noisy_b")))?;
    save_mask_png(&mask_a, &out_dir.join(rel("mask_a")))?;
    save_mask_png(&mask_b, &out_dir.join(rel("mask_b")))?;

    Ok(RecordEntry {
        record_id: record_id.to_string(),
        clean_path: rel("clean"),
        noisy_a_path: rel("noisy_a"),
        noisy_b_path: rel("noisy_b"),
        mask_a_path: rel("mask_a"),
        mask_b_path: rel("mask_b"),
        per_record_seed: seed,
        clean_group: group.clone(),
    })
}

fn list_clean_images(clean_dir: &Path) -> Result<Vec<PathBuf>> {
    if !clean_dir.is_dir() {
        return Err(Error::config(format!(
            "clean image directory {} does not exist",
            clean_dir.display()
        )));
    }
    let mut paths: Vec<PathBuf> = std::fs::read_dir(clean_dir)
        .map_err(|e| Error::io(clean_dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::config(format!(
            "clean image directory {} contains no PNG files",
            clean_dir.display()
        )));
    }
    Ok(paths)
}

fn prepare_out_dir(out_dir: &Path, force: bool) -> Result<()> {
    if out_dir.exists() {
        let occupied = std::fs::read_dir(out_dir)
            .map_err(|e| Error::io(out_dir, e))?
            .next()
            .is_some();
        if occupied {
            if !force {
                return Err(Error::Collision {
                    path: out_dir.to_path_buf(),
                });
            }
            std::fs::remove_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        }
    }
    for sub in SUBDIRS {
        let dir = out_dir.join(sub);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    Ok(())
}
