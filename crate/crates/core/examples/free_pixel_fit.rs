//! Fits each synthetic glyph directly (one free parameter per pixel, no
//! network) by Adam ascent on the Cauchy log-likelihood of its DCT
//! coefficients, then compares the squared-L2 error with the per-character
//! mean-glyph predictor. Shows how far the loss alone gets in a given number
//! of steps at a given γ.
//!
//! usage: free_pixel_fit [step_size] [gamma] [init] [steps]
use glyphfactor::dct::Dct2;
use glyphfactor::synth::synthetic_collection;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let arg = |i: usize, d: &str| args.get(i).cloned().unwrap_or_else(|| d.to_string());
    let lr: f64 = arg(1, "1e-2").parse().unwrap();
    let gamma: f64 = arg(2, "0.001").parse().unwrap();
    let init: f64 = arg(3, "1").parse().unwrap();
    let steps: i32 = arg(4, "2000").parse().unwrap();
    let (size, fonts, chars) = (16, 8, 26);
    let n = size * size;
    let data = synthetic_collection(fonts, chars, size, 7).unwrap();
    let plan = Dct2::<f64>::new(size, size);
    let (mut err, mut base) = (0.0, 0.0);
    for i in 0..chars {
        let mean: Vec<f64> = (0..n).map(|p| (0..fonts).map(|f| data.glyph(f, i)[p] as f64).sum::<f64>() / fonts as f64).collect();
        for j in 0..fonts {
            let target: Vec<f64> = data.glyph(j, i).iter().map(|&v| v as f64).collect();
            let coeffs = plan.forward(&target);
            let (mut x, mut m, mut v) = (vec![init; n], vec![0.0; n], vec![0.0; n]);
            for s in 1..=steps {
                let (_, g) = plan.cauchy_with_grad(&coeffs, &x, gamma);
                for p in 0..n {
                    m[p] = 0.9 * m[p] + 0.1 * g[p];
                    v[p] = 0.999 * v[p] + 0.001 * g[p] * g[p];
                    let mh = m[p] / (1.0 - 0.9f64.powi(s));
                    let vh = v[p] / (1.0 - 0.999f64.powi(s));
                    x[p] += lr * mh / (vh.sqrt() + 1e-8);
                }
            }
            err += x.iter().zip(&target).map(|(a, b)| (a.clamp(0.0, 1.0) - b).powi(2)).sum::<f64>();
            base += mean.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        }
    }
    let g = (fonts * chars) as f64;
    println!(
        "lr={lr} gamma={gamma} init={init} steps={steps} err/glyph={:.3} mean-glyph/glyph={:.3} ratio={:.3}",
        err / g,
        base / g,
        err / base
    );
}
