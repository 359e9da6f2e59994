mod common;

use common::*;
use glyphfactor::model::{Arch, FontLatent, FontModel, ModelConfig};
use glyphfactor::rng::seeded;

#[test]
fn full_scale_layout() {
    let model = FontModel::new(ModelConfig::default()).unwrap();
    assert_eq!(model.num_generated_layers(), 4);
    // kernel [256][256][5][5] plus 256 biases, down to [64][32][5][5] plus 32
    assert_eq!(
        model.hyper_output_widths(),
        vec![256 * 256 * 25 + 256, 256 * 128 * 25 + 128, 128 * 64 * 25 + 64, 64 * 32 * 25 + 32]
    );
    assert_eq!(model.hyper_output_widths()[0], 1_638_656);
    let layout = model.param_layout();
    let shape = |name: &str| layout.iter().find(|(n, _)| n == name).map(|(_, s)| s.clone());
    assert_eq!(shape("embeddings"), Some(vec![26, 32]));
    assert_eq!(shape("hyper.tconv0.layer02.weight"), Some(vec![1_638_656, 128]));
    assert_eq!(shape("hyper.tconv0.layer00.weight"), Some(vec![128, 32]));
    assert_eq!(shape("hyper.tconv3.layer02.weight"), Some(vec![64 * 32 * 25 + 32, 128]));
    let (_, post) = model.encoder_networks();
    assert_eq!(post.output_shape().len(), 64);

    let fc = FontModel::new(ModelConfig { arch: Arch::Fc, ..ModelConfig::default() }).unwrap();
    assert_eq!(fc.decoder_network().output_shape().len(), 4096);
    assert_eq!(fc.num_generated_layers(), 0);
}

#[test]
fn init_is_seeded() {
    let model = FontModel::new(reduced(Arch::Conv, 16, 4, 3, 16)).unwrap();
    let a = seeded_params(&model, 1);
    assert_eq!(a, seeded_params(&model, 1));
    assert_ne!(a, seeded_params(&model, 2));
    model.check_params(&a).unwrap();
    assert!(a.iter().filter(|(n, _)| n.ends_with(".scale")).all(|(_, t)| t.data.iter().all(|&v| v == 1.0)));
}

#[test]
fn decode_shapes_and_determinism() {
    for arch in [Arch::Conv, Arch::Fc] {
        let model = FontModel::new(reduced(arch, 16, 4, 3, 16)).unwrap();
        let params = seeded_params(&model, 3);
        let z = random_latent(4, 9);
        let out = model.decode_font(&params, &z, &[0, 1, 2]).unwrap();
        assert_eq!(out.len(), 3);
        assert!(out.iter().all(|g| g.len() == 256 && g.iter().all(|v| v.is_finite())));
        assert_eq!(out, model.decode_font(&params, &z, &[0, 1, 2]).unwrap());
        assert_eq!(out[1], model.decode(&params, &z, 1).unwrap());
        assert!(model.decode(&params, &z, 3).is_err());
        assert!(model.decode(&params, &FontLatent { z: vec![0.0; 3] }, 0).is_err());
    }
}

#[test]
fn identical_embeddings_decode_identically() {
    let model = FontModel::new(reduced(Arch::Conv, 16, 4, 3, 16)).unwrap();
    let mut params = seeded_params(&model, 4);
    let e0 = params.embedding(0).to_vec();
    params.embedding_mut(2).copy_from_slice(&e0);
    let z = random_latent(4, 1);
    assert_eq!(model.decode(&params, &z, 0).unwrap(), model.decode(&params, &z, 2).unwrap());
    assert_ne!(model.decode(&params, &z, 0).unwrap(), model.decode(&params, &z, 1).unwrap());
}

#[test]
fn latent_changes_output_through_generated_filters() {
    let model = FontModel::new(reduced(Arch::Conv, 16, 4, 3, 16)).unwrap();
    let params = seeded_params(&model, 5);
    let a = model.decode(&params, &random_latent(4, 1), 0).unwrap();
    let b = model.decode(&params, &random_latent(4, 2), 0).unwrap();
    assert_ne!(a, b);
    let (k, bias) = model.hyper_filters(&params, &random_latent(4, 1), 0).unwrap();
    let w = model.config().widths.clone();
    assert_eq!(k.shape, vec![w.base_channels, w.decoder_channels[0], 5, 5]);
    assert_eq!(bias.shape, vec![w.decoder_channels[0]]);
    assert!(model.hyper_filters(&params, &random_latent(4, 1), 4).is_err());
}

#[test]
fn encoder_is_a_set_function() {
    for arch in [Arch::Conv, Arch::Fc] {
        // 16×16: after three 2×2 pools an 8×8 input leaves 1×1 maps, which
        // instance norm flattens to constants.
        let div = if arch == Arch::Fc { 8 } else { 32 };
        let model = FontModel::new(reduced(arch, 16, 4, 5, div)).unwrap();
        let params = seeded_params(&model, 6);
        let glyphs = random_glyphs(5, 256, 7);
        let obs: Vec<(usize, &[f64])> = vec![(0, &glyphs[0]), (3, &glyphs[3]), (4, &glyphs[4])];
        let base = model.encode(&params, &obs).unwrap();
        let perm: Vec<(usize, &[f64])> = vec![obs[2], obs[0], obs[1]];
        let dup: Vec<(usize, &[f64])> = vec![obs[1], obs[0], obs[1], obs[2], obs[2]];
        for other in [perm, dup] {
            let p = model.encode(&params, &other).unwrap();
            assert_eq!(p, base);
        }
        let fewer = model.encode(&params, &obs[..2]).unwrap();
        assert_ne!(fewer, base, "{arch}");
        assert!(model.encode::<f64>(&params, &[]).is_err());
    }
}

#[test]
fn encoder_depends_on_character_identity() {
    let model = FontModel::new(reduced(Arch::Conv, 16, 4, 3, 32)).unwrap();
    let params = seeded_params(&model, 8);
    let g = random_glyphs(1, 256, 2).pop().unwrap();
    let a = model.encode(&params, &[(0, &g)]).unwrap();
    let b = model.encode(&params, &[(1, &g)]).unwrap();
    assert_ne!(a, b);
}

#[test]
fn single_precision_tracks_double() {
    let model = FontModel::new(reduced(Arch::Conv, 16, 4, 2, 16)).unwrap();
    let p64 = seeded_params(&model, 10);
    let p32 = p64.cast::<f32>();
    let z = random_latent(4, 3);
    let z32 = FontLatent { z: z.z.iter().map(|&v| v as f32).collect() };
    let a = model.decode(&p64, &z, 1).unwrap();
    let b = model.decode(&p32, &z32, 1).unwrap();
    let scale = a.iter().map(|v| v.abs()).fold(0.0, f64::max);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - *y as f64).abs() < 1e-4 * scale.max(1.0));
    }
}

#[test]
fn reconstruction_gradient_reaches_every_decoder_tensor() {
    let model = FontModel::new(reduced(Arch::Conv, 8, 4, 3, 32)).unwrap();
    let params = seeded_params(&model, 11);
    let targets: Vec<(usize, Vec<f64>)> = random_glyphs(3, 64, 1).into_iter().enumerate().collect();
    let (_, grads, gz) = recon_grad(&model, &params, &random_latent(4, 5).z, &targets);
    assert!(gz.iter().any(|&v| v != 0.0));
    for (name, t) in grads.iter() {
        if name.starts_with("encoder.") {
            assert!(t.data.iter().all(|&v| v == 0.0), "{name}");
        } else {
            assert!(t.sum_squares() > 0.0, "no gradient reaches {name}");
        }
    }
    let _ = seeded(0);
}
