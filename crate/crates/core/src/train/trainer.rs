use std::fmt;
use std::time::Instant;

use rand::seq::index::sample as sample_indices;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::adam::{Adam, AdamState};
use super::checkpoint::Checkpoint;
use super::elbo::{elbo_grad_for_font, elbo_with_noise};
use crate::data::{sample_observation_mask, FontCollection, ObservationMask, SplitManifest};
use crate::dct::Dct2;
use crate::error::{Error, Result};
use crate::model::{FontModel, ModelConfig, ModelParams};
use crate::par::map_ordered;
use crate::rng::{seeded, Rng, RngState};

const DIVERGENCE_STREAK: u32 = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub step_size: f64,
    pub drop_prob: f64,
    pub fonts_per_batch: usize,
    pub mc_samples: usize,
    pub max_steps: u64,
    /// Evaluations without improvement before stopping.
    pub patience: u32,
    pub seed: u64,
    pub eval_interval: u64,
    /// Seed for the dev masks and noise; fixed so evaluations are comparable.
    pub eval_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            step_size: 1e-5,
            drop_prob: 0.7,
            fonts_per_batch: 16,
            mc_samples: 1,
            max_steps: 100_000,
            patience: 10,
            seed: 0,
            eval_interval: 1000,
            eval_seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::param(format!("step_size must be positive, got {}", self.step_size)));
        }
        if !(0.0..1.0).contains(&self.drop_prob) {
            return Err(Error::param(format!("drop_prob must be in [0, 1), got {}", self.drop_prob)));
        }
        if self.mc_samples == 0 {
            return Err(Error::param("mc_samples must be at least 1"));
        }
        if self.fonts_per_batch == 0 {
            return Err(Error::param("fonts_per_batch must be at least 1"));
        }
        if self.eval_interval == 0 {
            return Err(Error::param("eval_interval must be at least 1"));
        }
        Ok(())
    }
}

/// One line of the training log.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainRecord {
    pub step: u64,
    pub train_elbo: f64,
    pub dev_elbo: Option<f64>,
    pub wall_secs: f64,
}

impl fmt::Display for TrainRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step={} train_elbo={:.6} dev_elbo=", self.step, self.train_elbo)?;
        match self.dev_elbo {
            Some(d) => write!(f, "{d:.6}")?,
            None => write!(f, "-")?,
        }
        write!(f, " wall={:.3}", self.wall_secs)
    }
}

impl TrainRecord {
    pub fn parse(line: &str) -> Result<Self> {
        let mut fields = std::collections::HashMap::new();
        for tok in line.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::Decode(format!("bad log field {tok:?}")))?;
            fields.insert(k, v);
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(|| Error::Decode(format!("log line lacks {k}")));
        let num = |k: &str| -> Result<f64> { get(k)?.parse().map_err(|_| Error::Decode(format!("bad {k}"))) };
        Ok(TrainRecord {
            step: get("step")?.parse().map_err(|_| Error::Decode("bad step".into()))?,
            train_elbo: num("train_elbo")?,
            dev_elbo: match get("dev_elbo")? {
                "-" => None,
                _ => Some(num("dev_elbo")?),
            },
            wall_secs: num("wall")?,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub record: TrainRecord,
    /// Early stopping or `max_steps` was reached.
    pub finished: bool,
}

/// Training state over a borrowed training collection.
pub struct Trainer<'a> {
    model: FontModel,
    config: TrainConfig,
    adam: Adam,
    train: &'a FontCollection,
    dev: Option<FontCollection>,
    plan: Dct2<f32>,
    params: ModelParams<f32>,
    best_params: Option<ModelParams<f32>>,
    moments: AdamState,
    rng: Rng,
    step: u64,
    best_dev: Option<f64>,
    evals_since_best: u32,
    nonfinite_streak: u32,
    finished: bool,
    elapsed_before: f64,
    started: Instant,
}

fn check_data(model: &ModelConfig, data: &FontCollection, what: &str) -> Result<()> {
    if data.num_chars() != model.char_count || data.height() != model.glyph_size || data.width() != model.glyph_size {
        return Err(Error::param(format!(
            "{what} collection has {} characters of {}x{}, model expects {} of {}x{}",
            data.num_chars(),
            data.height(),
            data.width(),
            model.char_count,
            model.glyph_size,
            model.glyph_size
        )));
    }
    Ok(())
}

impl<'a> Trainer<'a> {
    /// Fresh parameters initialized from `train_config.seed`. `dev` is the
    /// (already subset) early-stopping collection; without it training runs
    /// to `max_steps`.
    pub fn new(
        model_config: ModelConfig,
        train_config: TrainConfig,
        train: &'a FontCollection,
        dev: Option<FontCollection>,
    ) -> Result<Self> {
        train_config.validate()?;
        let model = FontModel::new(model_config)?;
        let mut rng = seeded(train_config.seed);
        let params = model.init_params::<f32, _>(&mut rng);
        let moments = AdamState::new(&params);
        Self::assemble(model, train_config, train, dev, params, None, moments, rng, 0, None, 0, 0, false, 0.0)
    }

    /// Continues from a checkpoint; the trajectory matches the uninterrupted run.
    pub fn resume(ckpt: Checkpoint, train: &'a FontCollection, dev: Option<FontCollection>) -> Result<Self> {
        let model = FontModel::new(ckpt.model_config)?;
        model.check_params(&ckpt.params)?;
        Self::assemble(
            model,
            ckpt.train_config,
            train,
            dev,
            ckpt.params,
            ckpt.best_params,
            ckpt.adam,
            ckpt.rng.restore(),
            ckpt.step,
            ckpt.best_dev,
            ckpt.evals_since_best,
            ckpt.nonfinite_streak,
            ckpt.finished,
            ckpt.elapsed_secs,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        model: FontModel,
        config: TrainConfig,
        train: &'a FontCollection,
        dev: Option<FontCollection>,
        params: ModelParams<f32>,
        best_params: Option<ModelParams<f32>>,
        moments: AdamState,
        rng: Rng,
        step: u64,
        best_dev: Option<f64>,
        evals_since_best: u32,
        nonfinite_streak: u32,
        finished: bool,
        elapsed_before: f64,
    ) -> Result<Self> {
        config.validate()?;
        check_data(model.config(), train, "training")?;
        if let Some(d) = &dev {
            check_data(model.config(), d, "dev")?;
        }
        let g = model.config().glyph_size;
        Ok(Trainer {
            adam: Adam::new(config.step_size),
            plan: Dct2::new(g, g),
            model,
            config,
            train,
            dev: dev.filter(|d| d.num_fonts() > 0),
            params,
            best_params,
            moments,
            rng,
            step,
            best_dev,
            evals_since_best,
            nonfinite_streak,
            finished,
            elapsed_before,
            started: Instant::now(),
        })
    }

    pub fn model(&self) -> &FontModel {
        &self.model
    }

    pub fn params(&self) -> &ModelParams<f32> {
        &self.params
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn best_dev(&self) -> Option<f64> {
        self.best_dev
    }

    pub fn is_finished(&self) -> bool {
        self.finished || self.step >= self.config.max_steps
    }

    fn draw_noise(&mut self) -> Vec<Vec<f32>> {
        let k = self.model.latent_dim();
        (0..self.config.mc_samples)
            .map(|_| (0..k).map(|_| self.rng.sample(StandardNormal)).collect())
            .collect()
    }

    /// One Adam step on a fresh minibatch, followed by a dev evaluation when due.
    pub fn step(&mut self) -> Result<StepOutcome> {
        let chars = self.model.config().char_count;
        let batch = self.config.fonts_per_batch.min(self.train.num_fonts());
        let fonts = sample_indices(&mut self.rng, self.train.num_fonts(), batch).into_vec();
        let mut jobs: Vec<(usize, ObservationMask, Vec<Vec<f32>>)> = Vec::with_capacity(batch);
        for &j in &fonts {
            let mask = sample_observation_mask(chars, self.config.drop_prob, &mut self.rng)?;
            let noise = self.draw_noise();
            jobs.push((j, mask, noise));
        }
        let (model, params, plan, train) = (&self.model, &self.params, &self.plan, self.train);
        let results = map_ordered(&jobs, |(j, mask, noise)| {
            elbo_grad_for_font(model, params, train.font(*j), mask, noise, plan)
        });

        let mut total = params.zeros_like();
        let mut elbo_sum = 0.0;
        for r in results {
            let r = r?;
            elbo_sum += r.elbo;
            total.add_assign(&r.grads);
        }
        let train_elbo = elbo_sum / batch as f64;
        let this_step = self.step;
        if !train_elbo.is_finite() || !total.is_finite() {
            self.nonfinite_streak += 1;
            if self.nonfinite_streak >= DIVERGENCE_STREAK {
                return Err(Error::Divergence {
                    step: this_step,
                    message: format!(
                        "loss or gradient non-finite for {} consecutive steps (last ELBO {train_elbo})",
                        self.nonfinite_streak
                    ),
                });
            }
        } else {
            self.nonfinite_streak = 0;
            // Descent on the negative mean ELBO.
            total.scale(-1.0 / batch as f32);
            self.adam.step(&mut self.params, &total, &mut self.moments);
        }
        self.step += 1;

        let mut dev_elbo = None;
        if self.step.is_multiple_of(self.config.eval_interval) && self.dev.is_some() {
            let score = self.evaluate_dev()?;
            dev_elbo = Some(score);
            if score.is_finite() && self.best_dev.is_none_or(|b| score > b) {
                self.best_dev = Some(score);
                self.best_params = Some(self.params.clone());
                self.evals_since_best = 0;
            } else {
                self.evals_since_best += 1;
            }
            if self.evals_since_best >= self.config.patience {
                self.finished = true;
            }
        }
        let record = TrainRecord {
            step: this_step,
            train_elbo,
            dev_elbo,
            wall_secs: self.elapsed_before + self.started.elapsed().as_secs_f64(),
        };
        Ok(StepOutcome {
            record,
            finished: self.is_finished(),
        })
    }

    /// Mean masked ELBO over the dev collection (font-id order), with masks
    /// and noise drawn from the fixed evaluation seed.
    pub fn evaluate_dev(&self) -> Result<f64> {
        let Some(dev) = &self.dev else {
            return Err(Error::EmptyInput("no dev fonts for evaluation".into()));
        };
        let mut rng = seeded(self.config.eval_seed);
        let k = self.model.latent_dim();
        let chars = self.model.config().char_count;
        let mut jobs = Vec::with_capacity(dev.num_fonts());
        for j in dev.order_by_id() {
            let mask = sample_observation_mask(chars, self.config.drop_prob, &mut rng)?;
            let noise: Vec<Vec<f32>> = (0..self.config.mc_samples)
                .map(|_| (0..k).map(|_| rng.sample(StandardNormal)).collect())
                .collect();
            jobs.push((j, mask, noise));
        }
        let results = map_ordered(&jobs, |(j, mask, noise)| {
            elbo_with_noise(&self.model, &self.params, dev.font(*j), mask, noise, &self.plan)
        });
        let mut sum = 0.0;
        for r in results {
            sum += r?;
        }
        Ok(sum / jobs.len() as f64)
    }

    /// Steps until finished, reporting every record.
    pub fn run(&mut self, mut on_record: impl FnMut(&TrainRecord)) -> Result<()> {
        while !self.is_finished() {
            let out = self.step()?;
            on_record(&out.record);
        }
        Ok(())
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            model_config: self.model.config().clone(),
            train_config: self.config.clone(),
            params: self.params.clone(),
            best_params: self.best_params.clone(),
            adam: self.moments.clone(),
            rng: RngState::capture(&self.rng),
            step: self.step,
            best_dev: self.best_dev,
            evals_since_best: self.evals_since_best,
            nonfinite_streak: self.nonfinite_streak,
            finished: self.finished,
            elapsed_secs: self.elapsed_before + self.started.elapsed().as_secs_f64(),
        }
    }
}

/// Trains to completion, early-stopping on the `hard_dev` fonts of `dev_data`.
pub fn train(
    train_data: &FontCollection,
    dev_data: &FontCollection,
    hard_dev: &SplitManifest,
    model_config: ModelConfig,
    train_config: TrainConfig,
    on_record: impl FnMut(&TrainRecord),
) -> Result<Checkpoint> {
    hard_dev.validate_against(dev_data)?;
    let dev = dev_data.subset(&hard_dev.font_ids)?;
    let mut trainer = Trainer::new(model_config, train_config, train_data, Some(dev))?;
    trainer.run(on_record)?;
    Ok(trainer.checkpoint())
}
