//! Overfits a reduced model to a handful of procedural fonts and reports the
//! reconstruction error against the per-character mean-glyph baseline.
//!
//! usage: overfit [glyph_size] [width_divisor] [step_size] [steps] [batch] [gamma] [arch]
use glyphfactor::model::{Arch, ModelConfig, Widths};
use glyphfactor::reconstruct::{reconstruct, ReconstructionRequest};
use glyphfactor::synth::synthetic_collection;
use glyphfactor::train::{TrainConfig, Trainer};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let arg = |i: usize, d: &str| args.get(i).cloned().unwrap_or_else(|| d.to_string());
    let size: usize = arg(1, "16").parse().unwrap();
    let div: usize = arg(2, "16").parse().unwrap();
    let lr: f64 = arg(3, "1e-3").parse().unwrap();
    let steps: u64 = arg(4, "2000").parse().unwrap();
    let batch: usize = arg(5, "8").parse().unwrap();
    let gamma: f64 = arg(6, "0.001").parse().unwrap();
    let arch: Arch = arg(7, "conv").parse().unwrap();
    let data = synthetic_collection(8, 26, size, 7).unwrap();
    let mc = ModelConfig {
        latent_dim: 32,
        glyph_size: size,
        arch,
        widths: Widths::divided(div),
        gamma,
        ..ModelConfig::default()
    };
    let tc = TrainConfig {
        step_size: lr,
        fonts_per_batch: batch,
        max_steps: steps,
        eval_interval: steps + 1,
        seed: 1,
        ..TrainConfig::default()
    };
    let mut t = Trainer::new(mc, tc, &data, None).unwrap();
    let start = std::time::Instant::now();
    let mut log = Vec::new();
    t.run(|r| {
        log.push(r.train_elbo);
        if r.step % 100 == 0 {
            eprintln!("{r}");
        }
    })
    .unwrap();
    let secs = start.elapsed().as_secs_f64();
    let n = data.glyph_len();
    let mut mean = vec![0.0f64; 26 * n];
    for j in 0..8 {
        for (m, &v) in mean.iter_mut().zip(data.font(j)) {
            *m += v as f64 / 8.0;
        }
    }
    let (mut base, mut err) = (0.0, 0.0);
    for j in 0..8 {
        let req = ReconstructionRequest::from_font(&data, j, &(0..26).collect::<Vec<_>>()).unwrap();
        let out = reconstruct(t.model(), t.params(), &req).unwrap();
        for i in 0..26 {
            let g = data.glyph(j, i);
            base += g.iter().zip(&mean[i * n..]).map(|(&a, &b)| (a as f64 - b).powi(2)).sum::<f64>();
            err += g.iter().zip(&out[i]).map(|(&a, &b)| (a as f64 - b as f64).powi(2)).sum::<f64>();
        }
    }
    let w = 50.min(log.len());
    let head: f64 = log[..w].iter().sum::<f64>() / w as f64;
    let tail: f64 = log[log.len() - w..].iter().sum::<f64>() / w as f64;
    println!(
        "arch={arch} size={size} div={div} gamma={gamma} lr={lr} steps={steps} batch={batch} secs={secs:.1} elbo {head:.1} -> {tail:.1} recon/glyph={:.3} baseline/glyph={:.3} ratio={:.3}",
        err / 208.0,
        base / 208.0,
        err / base
    );
}
