use rand::Rng;

use crate::error::{Error, Result};

/// Which character types of one font the encoder may see.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObservationMask {
    observed: Vec<bool>,
}

impl ObservationMask {
    pub fn new(observed: Vec<bool>) -> Result<Self> {
        if !observed.iter().any(|&o| o) {
            return Err(Error::param("observation mask has no observed characters"));
        }
        Ok(ObservationMask { observed })
    }

    pub fn all(num_chars: usize) -> Self {
        assert!(num_chars > 0);
        ObservationMask {
            observed: vec![true; num_chars],
        }
    }

    pub fn from_indices(num_chars: usize, indices: &[usize]) -> Result<Self> {
        let mut observed = vec![false; num_chars];
        for &i in indices {
            if i >= num_chars {
                return Err(Error::param(format!("character index {i} out of range 0..{num_chars}")));
            }
            observed[i] = true;
        }
        Self::new(observed)
    }

    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    pub fn is_observed(&self, ch: usize) -> bool {
        self.observed[ch]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.observed
    }

    pub fn observed_indices(&self) -> Vec<usize> {
        (0..self.observed.len()).filter(|&i| self.observed[i]).collect()
    }

    pub fn count(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }
}

/// Drops each character independently with `drop_prob`, redrawing whole masks
/// until at least one character survives.
pub fn sample_observation_mask<R: Rng + ?Sized>(
    num_chars: usize,
    drop_prob: f64,
    rng: &mut R,
) -> Result<ObservationMask> {
    if num_chars == 0 {
        return Err(Error::param("mask needs at least one character"));
    }
    if !(0.0..1.0).contains(&drop_prob) {
        return Err(Error::param(format!("drop probability must be in [0, 1), got {drop_prob}")));
    }
    loop {
        let observed: Vec<bool> = (0..num_chars).map(|_| rng.random::<f64>() >= drop_prob).collect();
        if observed.iter().any(|&o| o) {
            return Ok(ObservationMask { observed });
        }
    }
}
