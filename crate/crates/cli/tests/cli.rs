use std::path::{Path, PathBuf};

use glyphfactor::data::load_sprite_sheet_dir;
use glyphfactor::dct::squared_l2_glyph_distance;
use glyphfactor::eval::{observed_subset, parse_csv};
use glyphfactor_cli::{run, EXIT_DATA, EXIT_DIVERGENCE, EXIT_OK, EXIT_USAGE};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn cli(args: &[&str]) -> i32 {
    let mut argv = vec!["glyphfactor"];
    argv.extend_from_slice(args);
    run(argv)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn baseline_nn_matches_brute_force() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nn.csv");
    let (train_dir, test_dir) = (fixtures().join("train"), fixtures().join("test"));
    let code = cli(&[
        "baseline-nn", "--train", p(&train_dir), "--test", p(&test_dir),
        "--observations", "1,2,4,8", "--trials", "2", "--seed", "3", "--out", p(&out),
    ]);
    assert_eq!(code, EXIT_OK);
    let rows = parse_csv(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 4);

    // Exhaustive search over every train font for every draw.
    let train = load_sprite_sheet_dir(&train_dir, 26, 64).unwrap();
    let test = load_sprite_sheet_dir(&test_dir, 26, 64).unwrap();
    for (row, count) in rows.iter().zip([1, 2, 4, 8]) {
        let (mut sum, mut n) = (0.0, 0);
        for j in 0..test.num_fonts() {
            for trial in 0..2 {
                let obs = observed_subset(3, &test.font_ids()[j], trial, count, 26);
                let dist = |f: usize| -> f64 {
                    obs.iter().map(|&i| squared_l2_glyph_distance(test.glyph(j, i), train.glyph(f, i)).unwrap()).sum()
                };
                let best = (0..train.num_fonts())
                    .min_by(|&a, &b| dist(a).total_cmp(&dist(b)).then(train.font_ids()[a].cmp(&train.font_ids()[b])))
                    .unwrap();
                for i in (0..26).filter(|i| !obs.contains(i)) {
                    sum += squared_l2_glyph_distance(test.glyph(j, i), train.glyph(best, i)).unwrap();
                    n += 1;
                }
            }
        }
        assert_eq!(row.0, "nn");
        assert_eq!(row.2.observations, count);
        assert_eq!(row.2.n_glyphs, n);
        assert!((row.2.mean_error - sum / n as f64).abs() < 1e-9 * sum, "{count}: {} vs {}", row.2.mean_error, sum / n as f64);
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(cli(&["train", "--dev", "x", "--out", "y"]), EXIT_USAGE);
    assert_eq!(cli(&["baseline-nn", "--bogus"]), EXIT_USAGE);
    assert_eq!(cli(&[]), EXIT_USAGE);
    let train = fixtures().join("train");
    assert_eq!(cli(&["baseline-nn", "--train", p(&train), "--test", "/no/such/dir"]), EXIT_USAGE);
    assert_eq!(cli(&["baseline-nn", "--train", p(&train), "--test", p(&train), "--observations", "26"]), EXIT_USAGE);
}

#[test]
fn data_errors_exit_two() {
    let train = fixtures().join("train");
    assert_eq!(
        cli(&["baseline-nn", "--train", p(&train), "--test", p(&train), "--glyph-size", "32"]),
        EXIT_DATA
    );
    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.bin");
    std::fs::write(&junk, b"not glyphs").unwrap();
    assert_eq!(cli(&["baseline-nn", "--train", p(&train), "--test", p(&junk)]), EXIT_DATA);
}

#[test]
fn mine_hard_split_keeps_ceil_fraction() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("hard.txt");
    let code = cli(&[
        "mine-hard-split", "--train", p(&fixtures().join("train")), "--candidates", p(&fixtures().join("test")),
        "--fraction", "0.1", "--out", p(&out),
    ]);
    assert_eq!(code, EXIT_OK);
    let m = glyphfactor::data::SplitManifest::load(&out).unwrap();
    assert_eq!(m.font_ids.len(), 1); // ceil(0.1 · 3)
    assert_eq!(m.split_name, "hard");
}

#[test]
fn help_documents_defaults() {
    // --help exits 0; the flag text is checked through clap's renderer.
    assert_eq!(cli(&["train", "--help"]), EXIT_OK);
    use clap::CommandFactory;
    let mut cmd = glyphfactor_cli::Cli::command();
    let train = cmd.find_subcommand_mut("train").unwrap().render_long_help().to_string();
    for needle in ["--latent-dim", "[default: 32]", "[default: 0.00001]", "[default: 0.7]", "[default: conv]", "[default: 0.001]"] {
        assert!(train.contains(needle), "train help lacks {needle}:\n{train}");
    }
    let mine = cmd.find_subcommand_mut("mine-hard-split").unwrap().render_long_help().to_string();
    assert!(mine.contains("[default: 0.1]"));
    let cluster = cmd.find_subcommand_mut("cluster-latents").unwrap().render_long_help().to_string();
    assert!(cluster.contains("[default: 10]"));
    let eval = cmd.find_subcommand_mut("evaluate").unwrap().render_long_help().to_string();
    assert!(eval.contains("[default: 1,2,4,8]") && eval.contains("[default: full]"));
}

fn train_small(dir: &Path, extra: &[&str]) -> (i32, PathBuf) {
    let ckpt = dir.join("model.fvae");
    let mut args = vec![
        "train", "--data", p(&fixtures().join("train")).to_owned_str(), "--dev", p(&fixtures().join("test")).to_owned_str(),
        "--width-divisor", "32", "--latent-dim", "4", "--max-steps", "2", "--eval-interval", "1",
        "--fonts-per-batch", "2", "--lr", "1e-3", "--seed", "5", "--out", p(&ckpt).to_owned_str(),
    ];
    args.extend_from_slice(extra);
    (cli(&args), ckpt)
}

trait Leak {
    fn to_owned_str(&self) -> &'static str;
}

impl Leak for str {
    fn to_owned_str(&self) -> &'static str {
        Box::leak(self.to_string().into_boxed_str())
    }
}

#[test]
fn train_then_use_the_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let (code, ckpt) = train_small(dir.path(), &[]);
    assert_eq!(code, EXIT_OK);
    let log = std::fs::read_to_string(dir.path().join("model.log")).unwrap();
    assert_eq!(log.lines().count(), 2);
    assert!(log.lines().all(|l| glyphfactor::train::TrainRecord::parse(l).unwrap().dev_elbo.is_some()));

    let test = fixtures().join("test");
    let csv = dir.path().join("eval.csv");
    assert_eq!(
        cli(&["evaluate", "--ckpt", p(&ckpt), "--test", p(&test), "--train", p(&fixtures().join("train")),
              "--observations", "1,4", "--trials", "1", "--out", p(&csv)]),
        EXIT_OK
    );
    let rows = parse_csv(&std::fs::read_to_string(&csv).unwrap()).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.0 == "model-conv" && r.2.mean_error <= 4096.0));

    let sheet = test.join("test-000.png");
    let recon = dir.path().join("recon.png");
    assert_eq!(cli(&["reconstruct", "--ckpt", p(&ckpt), "--font", p(&sheet), "--observed", "A,B", "--out", p(&recon)]), EXIT_OK);
    assert_eq!(glyphfactor::data::load_sprite_sheet(&recon, 26, 64).unwrap().len(), 26 * 4096);
    assert_eq!(cli(&["reconstruct", "--ckpt", p(&ckpt), "--font", p(&sheet), "--observed", "AB", "--out", p(&recon)]), EXIT_USAGE);

    let frames = dir.path().join("frames");
    std::fs::create_dir(&frames).unwrap();
    assert_eq!(
        cli(&["interpolate", "--ckpt", p(&ckpt), "--font-a", p(&sheet), "--font-b", p(&test.join("test-001.png")),
              "--steps", "3", "--out", p(&frames)]),
        EXIT_OK
    );
    assert_eq!(load_sprite_sheet_dir(&frames, 26, 64).unwrap().num_fonts(), 3);

    let latents = dir.path().join("z.csv");
    assert_eq!(cli(&["export-latents", "--ckpt", p(&ckpt), "--data", p(&test), "--out", p(&latents)]), EXIT_OK);
    let table = glyphfactor::reconstruct::LatentTable::load(&latents).unwrap();
    assert_eq!((table.len(), table.dim()), (3, 4));

    let clusters = dir.path().join("clusters.csv");
    let cents = dir.path().join("centroids.csv");
    assert_eq!(
        cli(&["cluster-latents", "--in", p(&latents), "--k", "2", "--out", p(&clusters), "--centroids", p(&cents)]),
        EXIT_OK
    );
    assert_eq!(std::fs::read_to_string(&clusters).unwrap().lines().count(), 4);
    assert_eq!(std::fs::read_to_string(&cents).unwrap().lines().count(), 3);
    assert_eq!(cli(&["cluster-latents", "--in", p(&latents), "--k", "4", "--out", p(&clusters)]), EXIT_USAGE);
}

#[test]
fn config_file_supplies_flags_and_command_line_wins() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# nn settings\nobservations = 1\ntrials = 1\nseed = 9\n").unwrap();
    let out = dir.path().join("nn.csv");
    let (train, test) = (fixtures().join("train"), fixtures().join("test"));
    let code = cli(&["--config", p(&cfg), "baseline-nn", "--train", p(&train), "--test", p(&test), "--trials", "2", "--out", p(&out)]);
    assert_eq!(code, EXIT_OK);
    let rows = parse_csv(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].2.n_glyphs, 3 * 2 * 25);
    std::fs::write(&cfg, "no-equals-sign\n").unwrap();
    assert_eq!(cli(&["--config", p(&cfg), "baseline-nn", "--train", p(&train), "--test", p(&test)]), EXIT_USAGE);
}

#[test]
fn repeated_runs_are_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(train_small(a.path(), &[]).0, EXIT_OK);
    assert_eq!(train_small(b.path(), &["--threads", "1"]).0, EXIT_OK);
    let read = |d: &Path| std::fs::read(d.join("model.fvae")).unwrap();
    let (ca, cb) = (read(a.path()), read(b.path()));
    let strip = |bytes: &[u8]| {
        let mut c = glyphfactor::train::Checkpoint::from_bytes(bytes).unwrap();
        c.elapsed_secs = 0.0;
        c
    };
    assert_eq!(strip(&ca), strip(&cb));
}

#[test]
fn divergence_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = train_small(dir.path(), &["--lr", "1e30", "--max-steps", "60", "--eval-interval", "1000"]);
    assert_eq!(code, EXIT_DIVERGENCE);
}
