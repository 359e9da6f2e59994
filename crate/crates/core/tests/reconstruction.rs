mod common;

use glyphfactor::data::FontCollection;
use glyphfactor::dct::squared_l2_glyph_distance;
use glyphfactor::eval::{evaluate, EvalConfig, Split, System};
use glyphfactor::kmeans::kmeans;
use glyphfactor::model::{Arch, FontLatent, FontModel, ModelParams};
use glyphfactor::reconstruct::{
    decode_glyphs, export_latents, interpolate, nn_reconstruct, reconstruct, LatentTable, ReconstructionRequest,
};
use glyphfactor::rng::seeded;
use glyphfactor::synth::synthetic_collection;
use glyphfactor::train::{TrainConfig, Trainer};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

use common::reduced;

fn small_model() -> (FontModel, ModelParams<f32>) {
    let model = FontModel::new(reduced(Arch::Conv, 16, 4, 5, 32)).unwrap();
    let params = model.init_params::<f32, _>(&mut seeded(3));
    (model, params)
}

fn latent(k: usize, seed: u64) -> FontLatent<f32> {
    let mut rng = seeded(seed);
    FontLatent {
        z: (0..k).map(|_| rng.sample::<f32, _>(StandardNormal)).collect(),
    }
}

#[test]
fn interpolation_endpoints_are_direct_decodes() {
    let (model, params) = small_model();
    let (a, b) = (latent(4, 1), latent(4, 2));
    let chars: Vec<usize> = (0..5).collect();
    let frames = interpolate(&model, &params, &a, &b, 5, &chars).unwrap();
    assert_eq!(frames.len(), 5);
    assert_eq!(frames[0], decode_glyphs(&model, &params, &a, &chars).unwrap());
    assert_eq!(frames[4], decode_glyphs(&model, &params, &b, &chars).unwrap());
    assert!(interpolate(&model, &params, &a, &b, 1, &chars).is_err());
}

#[test]
fn equal_endpoints_give_identical_frames() {
    let (model, params) = small_model();
    let a = latent(4, 5);
    let frames = interpolate(&model, &params, &a, &a, 4, &[0, 3]).unwrap();
    assert!(frames.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn interpolation_is_continuous() {
    let (model, params) = small_model();
    let (a, b) = (latent(4, 7), latent(4, 8));
    let frames = interpolate(&model, &params, &a, &b, 64, &[0, 1, 2]).unwrap();
    let dist = |x: &Vec<Vec<f32>>, y: &Vec<Vec<f32>>| -> f64 {
        x.iter().zip(y).map(|(p, q)| squared_l2_glyph_distance(p, q).unwrap()).sum()
    };
    let ends = dist(&frames[0], &frames[63]);
    let worst = frames.windows(2).map(|w| dist(&w[0], &w[1])).fold(0.0, f64::max);
    assert!(ends > 0.0 && worst < ends, "adjacent {worst} vs endpoints {ends}");
}

#[test]
fn reconstruction_shape_range_and_repeatability() {
    let (model, params) = small_model();
    let data = synthetic_collection(2, 5, 16, 4).unwrap();
    let req = ReconstructionRequest::from_font(&data, 1, &[0, 2]).unwrap();
    let a = reconstruct(&model, &params, &req).unwrap();
    assert_eq!(a.len(), 5);
    assert!(a.iter().all(|g| g.len() == 256 && g.iter().all(|v| (0.0..=1.0).contains(v))));
    assert_eq!(a, reconstruct(&model, &params, &req).unwrap());
    assert!(ReconstructionRequest::from_font(&data, 1, &[]).and_then(|r| reconstruct(&model, &params, &r)).is_err());
}

#[test]
fn trained_model_uses_its_observations() {
    let data = synthetic_collection(4, 5, 16, 6).unwrap();
    let tc = TrainConfig {
        step_size: 1e-3,
        fonts_per_batch: 4,
        max_steps: 20,
        eval_interval: 100,
        ..TrainConfig::default()
    };
    let mut t = Trainer::new(reduced(Arch::Conv, 16, 4, 5, 16), tc, &data, None).unwrap();
    t.run(|_| {}).unwrap();
    let all = ReconstructionRequest::from_font(&data, 0, &[0, 1, 2, 3, 4]).unwrap();
    let some = ReconstructionRequest::from_font(&data, 0, &[1]).unwrap();
    let za = t.model().encode(t.params(), &all.observed.iter().map(|(i, g)| (*i, g.as_slice())).collect::<Vec<_>>()).unwrap();
    let zs = t.model().encode(t.params(), &some.observed.iter().map(|(i, g)| (*i, g.as_slice())).collect::<Vec<_>>()).unwrap();
    assert_ne!(za.mean, zs.mean);
    assert_ne!(reconstruct(t.model(), t.params(), &all).unwrap(), reconstruct(t.model(), t.params(), &some).unwrap());
}

#[test]
fn latents_export_deterministically() {
    let (model, params) = small_model();
    let base = synthetic_collection(3, 5, 16, 8).unwrap();
    // Append a copy of font 1 under another id.
    let mut raw = base.raw().to_vec();
    raw.extend_from_slice(base.font(1));
    let ids: Vec<String> = base.font_ids().iter().cloned().chain(["copy".to_string()]).collect();
    let data = FontCollection::new(raw, 5, 16, 16, ids, base.char_labels().to_vec()).unwrap();
    let t1 = export_latents(&model, &params, &data).unwrap();
    let t2 = export_latents(&model, &params, &data).unwrap();
    assert_eq!(t1, t2);
    assert_eq!(t1.len(), 4);
    assert_eq!(t1.latents[1], t1.latents[3]);
    assert_eq!(LatentTable::from_csv(&t1.to_csv()).unwrap(), t1);
}

#[test]
fn kmeans_recovers_separated_blobs() {
    let mut rng = seeded(9);
    let mut points = Vec::new();
    let mut truth = Vec::new();
    for (label, centre) in [(0usize, -5.0f64), (1, 5.0)] {
        for _ in 0..40 {
            points.push((0..3).map(|_| centre + rng.sample::<f64, _>(StandardNormal) * 0.5).collect::<Vec<_>>());
            truth.push(label);
        }
    }
    let km = kmeans(&points, 2, &mut seeded(1), 100).unwrap();
    let same = km.assignments.iter().zip(&truth).filter(|(a, b)| a == b).count();
    assert!(same == 80 || same == 0, "partition mismatch: {same}/80");
    assert!(km.history.windows(2).all(|w| w[1] <= w[0] + 1e-9));
}

fn exhaustive(train: &FontCollection, test: &FontCollection, j: usize, obs: &[usize]) -> usize {
    let d = |f: usize| -> f64 { obs.iter().map(|&i| squared_l2_glyph_distance(test.glyph(j, i), train.glyph(f, i)).unwrap()).sum() };
    let mut best = 0;
    for f in 1..train.num_fonts() {
        let (a, b) = (d(f), d(best));
        if a < b || (a == b && train.font_ids()[f] < train.font_ids()[best]) {
            best = f;
        }
    }
    best
}

#[test]
fn nn_error_falls_with_more_observations() {
    let train = synthetic_collection(30, 26, 16, 10).unwrap();
    let test = synthetic_collection(20, 26, 16, 11).unwrap();
    let cfg = EvalConfig {
        observation_counts: vec![1, 4, 12],
        trials_per_font: 4,
        seed: 2,
        split: Split::Full,
    };
    let r = evaluate(&System::NearestNeighbor, &test, &train, &cfg).unwrap();
    let m: Vec<f64> = r.cells.iter().map(|c| c.mean_error).collect();
    assert!(m[0] >= m[1] && m[1] >= m[2], "{m:?}");
    for (c, n) in r.cells.iter().zip([1, 4, 12]) {
        assert_eq!(c.n_glyphs, 20 * 4 * (26 - n));
    }
}

#[test]
fn identical_test_and_train_give_zero_error() {
    let data = synthetic_collection(5, 6, 16, 12).unwrap();
    let cfg = EvalConfig {
        observation_counts: vec![1, 2],
        trials_per_font: 2,
        ..EvalConfig::default()
    };
    let r = evaluate(&System::NearestNeighbor, &data, &data, &cfg).unwrap();
    assert!(r.cells.iter().all(|c| c.mean_error == 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn nn_matches_exhaustive_search(
        n_train in 1usize..=10,
        seed in 0u64..1000,
        obs in proptest::collection::btree_set(0usize..6, 1..5),
    ) {
        let train = synthetic_collection(n_train, 6, 8, seed).unwrap();
        let test = synthetic_collection(3, 6, 8, seed + 1).unwrap();
        let obs: Vec<usize> = obs.into_iter().collect();
        for j in 0..3 {
            let req = ReconstructionRequest::from_font(&test, j, &obs).unwrap();
            let (m, out) = nn_reconstruct(&train, &req).unwrap();
            let best = exhaustive(&train, &test, j, &obs);
            prop_assert_eq!(m.font_index, best);
            prop_assert_eq!(out.len(), 6);
            for (i, g) in out.iter().enumerate() {
                prop_assert_eq!(g.as_slice(), train.glyph(best, i));
                prop_assert!(g.iter().all(|v| (0.0..=1.0).contains(v)));
            }
        }
    }

    #[test]
    fn eval_counts_and_bounds(counts in proptest::collection::vec(1usize..6, 1..4), trials in 1usize..3, seed in 0u64..50) {
        let train = synthetic_collection(4, 6, 8, seed).unwrap();
        let test = synthetic_collection(3, 6, 8, seed + 100).unwrap();
        let cfg = EvalConfig { observation_counts: counts.clone(), trials_per_font: trials, seed, split: Split::Full };
        let r = evaluate(&System::NearestNeighbor, &test, &train, &cfg).unwrap();
        prop_assert_eq!(r.cells.len(), counts.len());
        for (c, &n) in r.cells.iter().zip(&counts) {
            prop_assert_eq!(c.observations, n);
            prop_assert_eq!(c.n_glyphs, 3 * trials * (6 - n));
            prop_assert!(c.mean_error >= 0.0 && c.mean_error <= 64.0);
        }
    }

    #[test]
    fn reconstruct_output_in_unit_range(seed in 0u64..1000, z_scale in 0.1f32..20.0) {
        let (model, params) = small_model();
        let mut z = latent(4, seed);
        z.z.iter_mut().for_each(|v| *v *= z_scale);
        let out = decode_glyphs(&model, &params, &z, &[0, 4]).unwrap();
        prop_assert_eq!(out.len(), 2);
        prop_assert!(out.iter().all(|g| g.len() == 256 && g.iter().all(|v| (0.0..=1.0).contains(v))));
    }
}
