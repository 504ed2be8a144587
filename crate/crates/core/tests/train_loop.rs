//! Training-loop behaviour: convex convergence fixtures, determinism,
//! checkpoint round trips and resume, and scheme separation.

use annoclean_core::model::{build_model, ModelSpec, PaddingPolicy, Registry};
use annoclean_core::rng::{normal_f64, seeded, uniform_f64};
use annoclean_core::train::{
    assemble_batch, epoch_order, load_checkpoint_full, save_checkpoint, train, train_resumed,
    InMemorySource, LossSpec, RmspropConfig, Scheme, TrainConfig,
};
use ndarray::{Array3, Array4};

fn bias_spec() -> ModelSpec {
    ModelSpec {
        arch: "global_bias".into(),
        ..ModelSpec::default()
    }
}

fn constant_source(n: usize, value: f32, noise_std: f64, seed: u64) -> InMemorySource {
    let mut rng = seeded(seed);
    let records = (0..n)
        .map(|_| {
            let noisy_target = value + (normal_f64(&mut rng) * noise_std) as f32;
            let input = Array3::from_elem((3, 8, 8), value);
            (
                input.clone(),
                Array3::from_elem((3, 8, 8), noisy_target),
                Array3::from_elem((3, 8, 8), value),
            )
        })
        .collect();
    InMemorySource { records }
}

fn bias_config(scheme: Scheme, loss: LossSpec, epochs: usize) -> TrainConfig {
    TrainConfig {
        scheme,
        loss,
        optimizer: RmspropConfig {
            learning_rate: 2e-3,
            momentum: 0.9,
            weight_decay: 0.0,
            ..RmspropConfig::default()
        },
        batch_size: 64,
        epochs,
        max_steps: None,
        normalization: Default::default(),
        seed: object_seed(),
    }
}

fn object_seed() -> u64 {
    41
}

#[test]
fn bias_model_converges_to_constant_target() {
    let source = constant_source(512, 0.7, 0.0, 1);
    let model = build_model(&bias_spec(), 0).unwrap();
    let out = train(
        model,
        &source,
        &bias_config(Scheme::N2c, LossSpec::mse(), 60),
        None,
    )
    .unwrap();
    let bias = out.model.net.params().value(0)[0];
    assert!((bias - 0.7).abs() < 1e-3, "bias = {bias}");
    // The loss curve is recorded at every step.
    assert_eq!(out.curve.len(), 60 * (512usize.div_ceil(64)));
}

#[test]
fn bias_model_recovers_mean_under_l2_on_noisy_targets() {
    let n = 4000;
    let source = constant_source(n, 0.5, 0.1, 2);
    // Oracle: the sample mean of the generated targets.
    let sample_mean: f64 = source
        .records
        .iter()
        .map(|(_, t, _)| t[(0, 0, 0)] as f64)
        .sum::<f64>()
        / n as f64;
    let model = build_model(&bias_spec(), 0).unwrap();
    let out = train(
        model,
        &source,
        &bias_config(Scheme::N2n, LossSpec::mse(), 25),
        None,
    )
    .unwrap();
    let bias = out.model.net.params().value(0)[0] as f64;
    assert!(
        (bias - sample_mean).abs() < 2e-2,
        "bias {bias} vs sample mean {sample_mean}"
    );
}

#[test]
fn training_is_bitwise_deterministic() {
    let source = constant_source(64, 0.4, 0.05, 3);
    let config = bias_config(Scheme::N2n, LossSpec::l1(), 3);
    let a = train(build_model(&bias_spec(), 7).unwrap(), &source, &config, None).unwrap();
    let b = train(build_model(&bias_spec(), 7).unwrap(), &source, &config, None).unwrap();
    assert_eq!(a.model.net.params(), b.model.net.params());
    assert_eq!(a.curve.entries, b.curve.entries);
}

#[test]
fn resume_reproduces_uninterrupted_run_bitwise() {
    let spec = ModelSpec {
        depth: 1,
        base_channels: 4,
        ..ModelSpec::default()
    };
    let mut rng = seeded(9);
    let records: Vec<_> = (0..24)
        .map(|_| {
            let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
                Array3::from_shape_fn((3, 16, 16), |_| uniform_f64(rng) as f32)
            };
            (mk(&mut rng), mk(&mut rng), mk(&mut rng))
        })
        .collect();
    let source = InMemorySource { records };
    let config = TrainConfig {
        scheme: Scheme::N2n,
        loss: LossSpec::l1(),
        optimizer: RmspropConfig {
            learning_rate: 1e-3,
            ..RmspropConfig::default()
        },
        batch_size: 8,
        epochs: 4,
        max_steps: None,
        normalization: Default::default(),
        seed: 5,
    };

    // Straight 4-epoch run.
    let straight = train(build_model(&spec, 3).unwrap(), &source, &config, None).unwrap();

    // Two epochs, checkpoint, then resume for the remaining two.
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("epoch_2.ckpt");
    let mut half_config = config.clone();
    half_config.epochs = 2;
    let mut saved = None;
    let half = train(
        build_model(&spec, 3).unwrap(),
        &source,
        &half_config,
        Some(&mut |epoch, model, opt_state, _curve| {
            if epoch == 2 {
                save_checkpoint(model, Some(opt_state), &ckpt)?;
                saved = Some(());
            }
            Ok(())
        }),
    )
    .unwrap();
    assert!(saved.is_some());
    drop(half);

    let (resumed_model, opt_state) = load_checkpoint_full(&ckpt).unwrap();
    assert_eq!(resumed_model.meta.epochs, 2);
    let resumed = train_resumed(
        resumed_model,
        opt_state.as_ref(),
        2,
        &source,
        &config,
        None,
    )
    .unwrap();

    assert_eq!(straight.model.net.params(), resumed.model.net.params());
    // The resumed curve covers exactly the remaining steps.
    let steps_per_epoch = 24usize.div_ceil(8) as u64;
    assert_eq!(resumed.curve.entries.first().unwrap().0, 2 * steps_per_epoch);
    assert_eq!(
        resumed.curve.entries.last().unwrap().0,
        straight.curve.entries.last().unwrap().0
    );
}

#[test]
fn schemes_share_batches_and_differ_only_in_targets() {
    let source = constant_source(40, 0.3, 0.2, 11);
    // The visit order is a pure function of (seed, epoch).
    let order_a = epoch_order(source.records.len(), 17, 0);
    let order_b = epoch_order(source.records.len(), 17, 0);
    assert_eq!(order_a, order_b);
    assert_ne!(order_a, epoch_order(source.records.len(), 17, 1));

    let idxs = &order_a[..8];
    let (in_n2n, tgt_n2n) = assemble_batch(&source, idxs, Scheme::N2n).unwrap();
    let (in_n2c, tgt_n2c) = assemble_batch(&source, idxs, Scheme::N2c).unwrap();
    assert_eq!(in_n2n, in_n2c);
    assert_ne!(tgt_n2n, tgt_n2c);
    // The clean target is the constant image; the noisy target is not.
    assert!(tgt_n2c.iter().all(|&v| v == 0.3));
}

#[test]
fn checkpoint_round_trip_preserves_forward_bitwise() {
    let spec = ModelSpec {
        depth: 2,
        base_channels: 6,
        ..ModelSpec::default()
    };
    let model = build_model(&spec, 21).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    save_checkpoint(&model, None, &path).unwrap();
    let (loaded, opt) = load_checkpoint_full(&path).unwrap();
    assert!(opt.is_none());
    assert_eq!(model.net.params(), loaded.net.params());

    let mut rng = seeded(2);
    let batch = Array4::from_shape_fn((1, 3, 32, 32), |_| uniform_f64(&mut rng) as f32);
    let a = model.forward(&batch, PaddingPolicy::Strict, false).unwrap();
    let b = loaded.forward(&batch, PaddingPolicy::Strict, false).unwrap();
    assert_eq!(a, b);
}

/// Rewrite the JSON header of a checkpoint file in place.
fn tamper_header(path: &std::path::Path, edit: impl Fn(&mut serde_json::Value)) {
    let bytes = std::fs::read(path).unwrap();
    let header_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let mut header: serde_json::Value = serde_json::from_slice(&bytes[16..16 + header_len]).unwrap();
    edit(&mut header);
    let new_header = serde_json::to_vec(&header).unwrap();
    let mut out = Vec::new();
    out.extend_from_slice(&bytes[..8]);
    out.extend_from_slice(&(new_header.len() as u64).to_le_bytes());
    out.extend_from_slice(&new_header);
    out.extend_from_slice(&bytes[16 + header_len..]);
    std::fs::write(path, out).unwrap();
}

#[test]
fn corrupt_and_mismatched_checkpoints_are_rejected() {
    let spec = ModelSpec {
        depth: 1,
        base_channels: 4,
        ..ModelSpec::default()
    };
    let model = build_model(&spec, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();

    // Bad magic.
    let garbled = dir.path().join("garbled.ckpt");
    std::fs::write(&garbled, b"not a checkpoint at all").unwrap();
    let err = load_checkpoint_full(&garbled).unwrap_err();
    assert!(err.to_string().contains("magic"), "{err}");

    // Edited channel count: the stored tensors no longer fit the rebuilt
    // architecture, and the error names the first mismatching layer.
    let edited = dir.path().join("edited.ckpt");
    save_checkpoint(&model, None, &edited).unwrap();
    tamper_header(&edited, |h| {
        h["spec"]["base_channels"] = serde_json::json!(8);
    });
    let err = load_checkpoint_full(&edited).unwrap_err();
    match err {
        annoclean_core::Error::ShapeMismatch { layer, .. } => {
            assert_eq!(layer, "enc0.conv0.weight");
        }
        other => panic!("expected shape mismatch, got {other}"),
    }

    // Unknown architecture name: the error lists what is registered.
    let unknown = dir.path().join("unknown.ckpt");
    save_checkpoint(&model, None, &unknown).unwrap();
    tamper_header(&unknown, |h| {
        h["arch"] = serde_json::json!("deeplabv3");
        h["spec"]["arch"] = serde_json::json!("deeplabv3");
    });
    let err = load_checkpoint_full(&unknown).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("deeplabv3") && msg.contains("custom_unet"), "{msg}");

    // The same load succeeds against a registry that has the name.
    let mut registry = Registry::with_defaults();
    registry
        .register("deeplabv3", annoclean_core::model::unet::build)
        .unwrap();
    annoclean_core::train::load_checkpoint_with(&unknown, Some(&registry)).unwrap();
}

#[test]
fn diverging_run_aborts_with_step_index() {
    // An absurd learning rate blows the f32 activations past infinity
    // within a couple of steps.
    let spec = ModelSpec {
        depth: 1,
        base_channels: 4,
        ..ModelSpec::default()
    };
    let mut rng = seeded(6);
    let records: Vec<_> = (0..8)
        .map(|_| {
            let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
                Array3::from_shape_fn((3, 16, 16), |_| uniform_f64(rng) as f32)
            };
            (mk(&mut rng), mk(&mut rng), mk(&mut rng))
        })
        .collect();
    let source = InMemorySource { records };
    let config = TrainConfig {
        scheme: Scheme::N2c,
        loss: LossSpec::mse(),
        optimizer: RmspropConfig {
            learning_rate: 1e30,
            ..RmspropConfig::default()
        },
        batch_size: 8,
        epochs: 5,
        max_steps: None,
        normalization: Default::default(),
        seed: 0,
    };
    let model = build_model(&spec, 0).unwrap();
    let err = train(model, &source, &config, None).unwrap_err();
    match err {
        annoclean_core::Error::NonFiniteLoss { step } => assert!(step >= 1),
        other => panic!("expected non-finite loss abort, got {other}"),
    }
}
