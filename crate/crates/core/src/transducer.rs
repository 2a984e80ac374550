//! Finite-sample smoothed conformal transducers and predictors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::domain::LabelId;
use crate::error::{Error, Result};
use crate::idealized::Mode;

/// A labelled example.
#[derive(Debug, Clone, PartialEq)]
pub struct Example<O> {
    pub object: O,
    pub label: LabelId,
}

impl<O> Example<O> {
    pub fn new(object: O, label: LabelId) -> Self {
        Example { object, label }
    }
}

/// A conformity measure: a bag of examples mapped to one score per example,
/// equivariant under permutations. Larger scores mean more conforming.
pub trait ConformityScorer<O: Clone + Sync>: Sync {
    fn scores(&self, bag: &[Example<O>]) -> Result<Vec<f64>>;

    /// Binds the scorer to a training sequence so that many candidates can
    /// be scored against it. The default simply re-scores the extended bag.
    fn prepare<'a>(&'a self, training: &'a [Example<O>]) -> Result<Box<dyn PreparedScorer<O> + 'a>>
    where
        Self: Sized,
    {
        Ok(Box::new(Rescore { scorer: self, training }))
    }
}

/// A scorer bound to a training sequence.
pub trait PreparedScorer<O>: Sync {
    /// Scores of `training ++ [candidate]`, candidate last.
    fn scores_with(&self, candidate: &Example<O>) -> Result<Vec<f64>>;
}

struct Rescore<'a, S, O> {
    scorer: &'a S,
    training: &'a [Example<O>],
}

impl<S: ConformityScorer<O>, O: Clone + Sync> PreparedScorer<O> for Rescore<'_, S, O> {
    fn scores_with(&self, candidate: &Example<O>) -> Result<Vec<f64>> {
        let mut bag = self.training.to_vec();
        bag.push(candidate.clone());
        self.scorer.scores(&bag)
    }
}

/// Gives every example the same score.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConstantScorer(pub f64);

impl<O: Clone + Sync> ConformityScorer<O> for ConstantScorer {
    fn scores(&self, bag: &[Example<O>]) -> Result<Vec<f64>> {
        Ok(vec![self.0; bag.len()])
    }
}

/// For discrete objects: the frequency of the example's label among bag
/// examples sharing its object, a finite-sample analogue of Q(y | x).
#[derive(Debug, Clone, Copy, Default)]
pub struct FrequencyScorer;

impl ConformityScorer<usize> for FrequencyScorer {
    fn scores(&self, bag: &[Example<usize>]) -> Result<Vec<f64>> {
        let mut counts: std::collections::HashMap<(usize, usize), usize> = std::collections::HashMap::new();
        let mut totals: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
        for z in bag {
            *counts.entry((z.object, z.label.0)).or_default() += 1;
            *totals.entry(z.object).or_default() += 1;
        }
        Ok(bag.iter().map(|z| counts[&(z.object, z.label.0)] as f64 / totals[&z.object] as f64).collect())
    }
}

/// Scores of the training examples and the candidate, computed jointly.
pub fn conformity_scores<O: Clone + Sync, S: ConformityScorer<O>>(
    scorer: &S,
    training: &[Example<O>],
    candidate: &Example<O>,
) -> Result<Vec<f64>> {
    scorer.prepare(training)?.scores_with(candidate)
}

fn check_tau(tau: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidTau(tau.to_string()));
    }
    Ok(())
}

/// Smoothed p-value from a score vector whose last entry is the candidate.
pub fn p_value_from_scores(scores: &[f64], tau: f64) -> f64 {
    let test = *scores.last().expect("candidate score");
    let below = scores.iter().filter(|&&s| s < test).count();
    let equal = scores.iter().filter(|&&s| s == test).count();
    (below as f64 + tau * equal as f64) / scores.len() as f64
}

/// Label-conditional smoothed p-value: only training examples carrying
/// `label` are compared with the candidate.
pub fn p_value_label_conditional_from_scores(scores: &[f64], labels: &[LabelId], label: LabelId, tau: f64) -> f64 {
    let test = *scores.last().expect("candidate score");
    let (mut below, mut equal, mut same) = (0usize, 0usize, 0usize);
    for (s, l) in scores.iter().zip(labels) {
        if *l != label {
            continue;
        }
        same += 1;
        if *s < test {
            below += 1;
        } else if *s == test {
            equal += 1;
        }
    }
    (below as f64 + tau * equal as f64 + tau) / (same + 1) as f64
}

/// The smoothed p-value of `label` for `object`.
pub fn p_value<O: Clone + Sync, S: ConformityScorer<O>>(
    training: &[Example<O>],
    object: &O,
    label: LabelId,
    scorer: &S,
    tau: f64,
) -> Result<f64> {
    check_tau(tau)?;
    let scores = conformity_scores(scorer, training, &Example::new(object.clone(), label))?;
    Ok(p_value_from_scores(&scores, tau))
}

/// The label-conditional smoothed p-value of `label` for `object`.
pub fn p_value_label_conditional<O: Clone + Sync, S: ConformityScorer<O>>(
    training: &[Example<O>],
    object: &O,
    label: LabelId,
    scorer: &S,
    tau: f64,
) -> Result<f64> {
    check_tau(tau)?;
    let scores = conformity_scores(scorer, training, &Example::new(object.clone(), label))?;
    let labels: Vec<LabelId> = training.iter().map(|z| z.label).collect();
    Ok(p_value_label_conditional_from_scores(&scores, &labels, label, tau))
}

/// Γ^ε = {y : p^y > ε}.
pub fn prediction_set(pvalues: &[f64], epsilon: f64) -> Vec<LabelId> {
    pvalues.iter().enumerate().filter(|(_, &p)| p > epsilon).map(|(y, _)| LabelId(y)).collect()
}

/// p-values for a batch of test objects.
#[derive(Debug, Clone, PartialEq)]
pub struct PValueTable {
    rows: Vec<Vec<f64>>,
    taus: Vec<Vec<f64>>,
    seed: u64,
}

impl PValueTable {
    /// `taus[i]` holds one value when τ is shared across labels, or one
    /// per label otherwise.
    pub fn new(rows: Vec<Vec<f64>>, taus: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        if rows.len() != taus.len() {
            return Err(Error::DimensionMismatch { expected: rows.len(), got: taus.len() });
        }
        let width = rows.first().map_or(0, Vec::len);
        for (row, tau) in rows.iter().zip(&taus) {
            if row.len() != width {
                return Err(Error::DimensionMismatch { expected: width, got: row.len() });
            }
            if tau.len() != 1 && tau.len() != width {
                return Err(Error::DimensionMismatch { expected: width, got: tau.len() });
            }
            if let Some(p) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::InvalidParameter(format!("p-value {p} outside [0, 1]")));
            }
        }
        Ok(PValueTable { rows, taus, seed })
    }

    pub fn n_objects(&self) -> usize {
        self.rows.len()
    }

    pub fn n_labels(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn tau(&self, i: usize) -> &[f64] {
        &self.taus[i]
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn prediction_sets(&self, epsilon: f64) -> Vec<Vec<LabelId>> {
        self.rows.iter().map(|r| prediction_set(r, epsilon)).collect()
    }
}

/// How the smoothing variable is drawn for a test object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TauSharing {
    /// One τ per test object, shared by all candidate labels.
    #[default]
    PerObject,
    /// An independent τ per (object, label).
    PerLabel,
}

/// Settings for [`predict_batch`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchConfig {
    pub n_labels: usize,
    pub epsilon: Option<f64>,
    pub seed: u64,
    pub mode: Mode,
    pub tau_sharing: TauSharing,
}

impl BatchConfig {
    pub fn new(n_labels: usize, seed: u64) -> Self {
        BatchConfig { n_labels, epsilon: None, seed, mode: Mode::Unconditional, tau_sharing: TauSharing::PerObject }
    }
}

/// p-values and, when ε is given, prediction sets.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchPrediction {
    pub pvalues: PValueTable,
    pub sets: Option<Vec<Vec<LabelId>>>,
}

/// The τ values for test object `index`.
pub fn draw_taus(seed: u64, index: usize, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    (0..count).map(|_| rng.random::<f64>()).collect()
}

/// Full conformal prediction for every test object.
pub fn predict_batch<O, S>(
    training: &[Example<O>],
    test_objects: &[O],
    scorer: &S,
    config: &BatchConfig,
) -> Result<BatchPrediction>
where
    O: Clone + Send + Sync,
    S: ConformityScorer<O>,
{
    if config.n_labels == 0 {
        return Err(Error::InvalidParameter("label set is empty".into()));
    }
    if let Some(e) = config.epsilon {
        if !(e > 0.0 && e < 1.0) {
            return Err(Error::InvalidEpsilon(e.to_string()));
        }
    }
    let prepared = scorer.prepare(training)?;
    let labels: Vec<LabelId> = training.iter().map(|z| z.label).collect();
    let n_taus = match config.tau_sharing {
        TauSharing::PerObject => 1,
        TauSharing::PerLabel => config.n_labels,
    };
    let results: Vec<(Vec<f64>, Vec<f64>)> = test_objects
        .par_iter()
        .enumerate()
        .map(|(i, object)| {
            let taus = draw_taus(config.seed, i, n_taus);
            let row = (0..config.n_labels)
                .map(|y| {
                    let tau = taus[y.min(n_taus - 1)];
                    let scores = prepared.scores_with(&Example::new(object.clone(), LabelId(y)))?;
                    Ok(match config.mode {
                        Mode::Unconditional => p_value_from_scores(&scores, tau),
                        Mode::LabelConditional => {
                            p_value_label_conditional_from_scores(&scores, &labels, LabelId(y), tau)
                        }
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok((row, taus))
        })
        .collect::<Result<_>>()?;
    let (rows, taus): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let pvalues = PValueTable::new(rows, taus, config.seed)?;
    let sets = config.epsilon.map(|e| pvalues.prediction_sets(e));
    Ok(BatchPrediction { pvalues, sets })
}
