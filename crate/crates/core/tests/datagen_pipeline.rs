//! End-to-end dataset generation checks: determinism, seed isolation,
//! manifest completeness and normalized loading.

use std::collections::BTreeMap;
use std::path::Path;

use annoclean_core::datagen::{
    self, build_dataset, generate_clean_dir, load_sample, split, BuildOptions, CleanImageConfig,
    DatasetManifest, NormalizationMode, SplitFractions,
};
use annoclean_core::synth::AnnotationKind;
use sha2::{Digest, Sha256};

fn hash_tree(root: &Path) -> String {
    fn walk(dir: &Path, base: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        entries.sort();
        for path in entries {
            if path.is_dir() {
                walk(&path, base, out);
            } else {
                let rel = path.strip_prefix(base).unwrap().to_string_lossy().replace('\\', "/");
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    let mut files = Vec::new();
    walk(root, root, &mut files);
    let mut hasher = Sha256::new();
    for (rel, bytes) in files {
        hasher.update(rel.as_bytes());
        hasher.update([0u8]);
        hasher.update(&bytes);
        hasher.update([0xFFu8]);
    }
    format!("{:x}", hasher.finalize())
}

fn make_clean(dir: &Path, count: usize) {
    let cfg = CleanImageConfig {
        height: 48,
        width: 48,
        max_brightness: 0.9,
    };
    generate_clean_dir(&cfg, count, 11, dir).unwrap();
}

#[test]
fn build_is_byte_deterministic_and_seed_isolated() {
    let tmp = tempfile::tempdir().unwrap();
    let clean = tmp.path().join("clean_src");
    make_clean(&clean, 3);

    let out1 = tmp.path().join("ds1");
    let out2 = tmp.path().join("ds2");
    let opts = BuildOptions::default();
    build_dataset(&clean, AnnotationKind::RadialLine, 10, 42, &out1, &opts).unwrap();
    build_dataset(&clean, AnnotationKind::RadialLine, 10, 42, &out2, &opts).unwrap();
    assert_eq!(hash_tree(&out1), hash_tree(&out2));

    // Records are a pure function of their per-record seed: growing the
    // dataset leaves the earlier records' files untouched.
    let out3 = tmp.path().join("ds3");
    build_dataset(&clean, AnnotationKind::RadialLine, 13, 42, &out3, &opts).unwrap();
    for sub in ["clean", "noisy_a", "noisy_b", "mask_a", "mask_b"] {
        for idx in 0..10 {
            let rel = format!("{sub}/r{idx:06}.png");
            let a = std::fs::read(out1.join(&rel)).unwrap();
            let b = std::fs::read(out3.join(&rel)).unwrap();
            assert_eq!(a, b, "{rel} differs between n_pairs=10 and n_pairs=13");
        }
    }

    // A different master seed changes the tree.
    let out4 = tmp.path().join("ds4");
    build_dataset(&clean, AnnotationKind::RadialLine, 10, 43, &out4, &opts).unwrap();
    assert_ne!(hash_tree(&out1), hash_tree(&out4));
}

#[test]
fn collision_respects_force_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let clean = tmp.path().join("clean_src");
    make_clean(&clean, 2);
    let out = tmp.path().join("ds");
    let opts = BuildOptions::default();
    build_dataset(&clean, AnnotationKind::BodyMarker, 3, 1, &out, &opts).unwrap();
    let err = build_dataset(&clean, AnnotationKind::BodyMarker, 3, 1, &out, &opts).unwrap_err();
    assert!(matches!(err, annoclean_core::Error::Collision { .. }));
    let forced = BuildOptions {
        force: true,
        ..Default::default()
    };
    build_dataset(&clean, AnnotationKind::BodyMarker, 3, 1, &out, &forced).unwrap();
}

#[test]
fn manifest_is_complete_and_every_record_loads() {
    let tmp = tempfile::tempdir().unwrap();
    let clean = tmp.path().join("clean_src");
    make_clean(&clean, 3);
    let out = tmp.path().join("ds");
    let mut manifest = build_dataset(
        &clean,
        AnnotationKind::VascularFlow,
        8,
        5,
        &out,
        &BuildOptions::default(),
    )
    .unwrap();
    split(&mut manifest, SplitFractions::default(), 5).unwrap();
    manifest.save(&out).unwrap();

    let reloaded = DatasetManifest::load(&out).unwrap();
    assert_eq!(reloaded, manifest);
    reloaded.validate_files(&out).unwrap();

    let mut seeds = std::collections::BTreeSet::new();
    for r in &reloaded.records {
        assert!(seeds.insert(r.per_record_seed), "duplicate per-record seed");
        let sample = load_sample(&reloaded, &out, &r.record_id, NormalizationMode::Linear).unwrap();
        assert!(sample.noisy_a.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(sample.mask_a.iter().all(|&m| m == 0 || m == 1));
        // The mask is exactly the set of changed pixels for hard-alpha
        // builtin stamps on gamut-capped clean images.
        let (h, w) = sample.mask_a.dim();
        for i in 0..h {
            for j in 0..w {
                let changed = (0..3).any(|c| {
                    (sample.noisy_a[(i, j, c)] - sample.clean[(i, j, c)]).abs() > 0.0
                });
                assert_eq!(changed, sample.mask_a[(i, j)] == 1, "pixel ({i}, {j})");
            }
        }
    }

    let missing = load_sample(&reloaded, &out, "r999999", NormalizationMode::Linear);
    assert!(missing.is_err());
}

#[test]
fn smn_loading_round_trips_against_linear() {
    let tmp = tempfile::tempdir().unwrap();
    let clean = tmp.path().join("clean_src");
    make_clean(&clean, 2);
    let out = tmp.path().join("ds");
    let manifest = build_dataset(
        &clean,
        AnnotationKind::RadialLine,
        4,
        9,
        &out,
        &BuildOptions::default(),
    )
    .unwrap();

    let linear = load_sample(&manifest, &out, "r000002", NormalizationMode::Linear).unwrap();
    let smn = load_sample(&manifest, &out, "r000002", NormalizationMode::Smn).unwrap();
    let mut denorm = smn.clean.clone();
    NormalizationMode::Smn.invert(&manifest.channel_stats, &mut denorm);
    for (a, b) in denorm.iter().zip(linear.clean.iter()) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn stats_in_manifest_match_direct_computation() {
    let tmp = tempfile::tempdir().unwrap();
    let clean = tmp.path().join("clean_src");
    make_clean(&clean, 3);
    let out = tmp.path().join("ds");
    let manifest = build_dataset(
        &clean,
        AnnotationKind::BodyMarker,
        5,
        2,
        &out,
        &BuildOptions::default(),
    )
    .unwrap();

    let mut paths: Vec<_> = std::fs::read_dir(&clean)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    paths.sort();
    let images: Vec<_> = paths
        .iter()
        .map(|p| annoclean_core::Image::load_png(p).unwrap())
        .collect();
    let direct = datagen::compute_channel_stats(&images).unwrap();
    assert_eq!(manifest.channel_stats, direct);

    // The fraction provenance lands in the manifest after splitting.
    let mut m = manifest;
    split(&mut m, SplitFractions::default(), 1).unwrap();
    let fr: BTreeMap<String, f64> = m.split_fractions.unwrap();
    assert_eq!(fr["train"], 0.8);
    assert_eq!(m.split_seed, Some(1));
}
