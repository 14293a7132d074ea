//! Checkpoint file format: round-trips, magic/version validation, and
//! truncation detection.

use irl_core::model::{Loss, Model, ModelConfig, Variant};
use irl_core::training::{
    load_checkpoint, params_equal, save_checkpoint, Checkpoint, TrainError, TrainStateMeta,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sample_checkpoint() -> Checkpoint {
    let cfg = ModelConfig::new(4, 2, 8, Variant::Up, Loss::L1, Loss::L2, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut model = Model::new_master(cfg, &mut rng).unwrap();
    model.freeze_built();
    model.attach_branch(1, &mut rng).unwrap();
    let meta = TrainStateMeta { stage: 1, step: 42, best_psnr: 31.5, seed: 7, adam_t: vec![] };
    Checkpoint::from_model(&model, meta, Vec::new(), None)
}

#[test]
fn round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stage_1.ckpt");
    let ckpt = sample_checkpoint();
    save_checkpoint(&ckpt, &path).unwrap();
    let loaded = load_checkpoint(&path).unwrap();

    assert_eq!(loaded.built_branches, 2);
    assert_eq!(loaded.frozen, vec![true, false]);
    assert_eq!(loaded.train_state.step, 42);
    assert_eq!(loaded.train_state.best_psnr, 31.5);

    let a = ckpt.to_model().unwrap();
    let b = loaded.to_model().unwrap();
    assert!(params_equal(&a, &b));
    // frozen flags survive the rebuild
    assert!(b.branches[0].frozen());
    assert!(!b.branches[1].frozen());
}

#[test]
fn foreign_magic_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bogus.ckpt");
    std::fs::write(&path, b"NOTSR0\0rest of the file").unwrap();
    match load_checkpoint(&path) {
        Err(TrainError::CorruptMagic) => {}
        other => panic!("expected CorruptMagic, got {other:?}"),
    }
}

#[test]
fn truncated_payload_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stage_1.ckpt");
    save_checkpoint(&sample_checkpoint(), &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 64]).unwrap();
    match load_checkpoint(&path) {
        Err(TrainError::TruncatedPayload { .. }) => {}
        other => panic!("expected TruncatedPayload, got {other:?}"),
    }
}

#[test]
fn version_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stage_1.ckpt");
    save_checkpoint(&sample_checkpoint(), &path).unwrap();
    let mut bytes = std::fs::read(&path).unwrap();
    // bump "version":1 in the JSON header
    let json_start = 7 + 8;
    let needle = b"\"version\":1";
    let pos = bytes[json_start..]
        .windows(needle.len())
        .position(|w| w == needle)
        .expect("version field")
        + json_start;
    bytes[pos + needle.len() - 1] = b'9';
    std::fs::write(&path, &bytes).unwrap();
    match load_checkpoint(&path) {
        Err(TrainError::VersionMismatch { got: 9, expected: 1 }) => {}
        other => panic!("expected VersionMismatch, got {other:?}"),
    }
}

#[test]
fn empty_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.ckpt");
    std::fs::write(&path, b"").unwrap();
    assert!(matches!(load_checkpoint(&path), Err(TrainError::CorruptMagic)));
}
