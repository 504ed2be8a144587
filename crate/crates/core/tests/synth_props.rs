//! Property tests for the synthesis invariants: determinism, support
//! soundness, in-bounds rendering and range preservation.

use annoclean_core::datagen::{generate_clean_image, CleanImageConfig};
use annoclean_core::rng::seeded;
use annoclean_core::synth::{
    composite, render_annotation, AnnotationKind, Sampler, StampLibrary, SynthConfig,
};
use proptest::prelude::*;

fn kind_strategy() -> impl Strategy<Value = AnnotationKind> {
    prop_oneof![
        Just(AnnotationKind::BodyMarker),
        Just(AnnotationKind::RadialLine),
        Just(AnnotationKind::VascularFlow),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn overlay_and_composite_invariants(seed in any::<u64>(), kind in kind_strategy(), dim in 48usize..96) {
        let lib = StampLibrary::builtin();
        let cfg = SynthConfig::default();
        let sampler = Sampler::new(cfg.clone());
        let clean_cfg = CleanImageConfig { height: dim, width: dim, max_brightness: 0.9 };
        let clean = generate_clean_image(&clean_cfg, seed ^ 0xC0FFEE);

        let placement = sampler
            .sample_from_library(kind, (dim, dim), &lib, &mut seeded(seed))
            .unwrap();
        let overlay = render_annotation(&placement, &lib, (dim, dim), &cfg).unwrap();
        let (noisy, mask) = composite(&clean, &overlay).unwrap();

        // Determinism: the same seed reproduces everything bit-identically.
        let placement2 = sampler
            .sample_from_library(kind, (dim, dim), &lib, &mut seeded(seed))
            .unwrap();
        prop_assert_eq!(&placement, &placement2);
        let overlay2 = render_annotation(&placement2, &lib, (dim, dim), &cfg).unwrap();
        prop_assert_eq!(&overlay, &overlay2);
        let (noisy2, _) = composite(&clean, &overlay2).unwrap();
        prop_assert_eq!(&noisy, &noisy2);

        // The overlay never writes anything at all outside its mask, and
        // the mask is exactly the alpha support.
        let layer = overlay.layer();
        for i in 0..dim {
            for j in 0..dim {
                let alpha = layer[(i, j, 3)];
                prop_assert_eq!(mask[(i, j)] == 1, alpha > 0.0);
                // Support soundness, forward direction: a changed pixel
                // implies mask = 1.
                let changed = (0..3).any(|c| noisy.pixels()[(i, j, c)] != clean.pixels()[(i, j, c)]);
                if changed {
                    prop_assert_eq!(mask[(i, j)], 1, "changed pixel at ({}, {}) not in mask", i, j);
                }
                // Reverse direction for fully opaque stamp pixels whose
                // color differs from the underlying content.
                if alpha == 1.0 {
                    let differs = (0..3).any(|c| layer[(i, j, c)] != clean.pixels()[(i, j, c)]);
                    if differs {
                        prop_assert!(changed, "opaque differing pixel at ({}, {}) unchanged", i, j);
                    }
                }
            }
        }

        // Range preservation.
        prop_assert!(noisy.pixels().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn masks_of_extreme_placements_stay_in_bounds(seed in any::<u64>()) {
        // Small images force placements against the borders; the render
        // must still confine all support to the canvas (anything outside
        // would panic the raster or corrupt neighbouring rows).
        let lib = StampLibrary::builtin();
        let cfg = SynthConfig {
            endpoint_dist_min: 8.0,
            ..SynthConfig::default()
        };
        let sampler = Sampler::new(cfg.clone());
        let dim = 32usize;
        for kind in AnnotationKind::ALL {
            let placement = sampler
                .sample_from_library(kind, (dim, dim), &lib, &mut seeded(seed))
                .unwrap();
            let overlay = render_annotation(&placement, &lib, (dim, dim), &cfg).unwrap();
            prop_assert_eq!(overlay.dims(), (dim, dim));
        }
    }
}
