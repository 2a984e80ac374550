//! Nearest-neighbour conformity measures on real feature vectors.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::domain::LabelId;
use crate::error::{Error, Result};
use crate::transducer::{ConformityScorer, Example, PreparedScorer};

/// A finite real vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite feature {v}")));
        }
        Ok(FeatureVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Shifts and scales to mean 0 and population standard deviation 1.
pub fn normalize_object(v: &FeatureVector) -> Result<FeatureVector> {
    let n = v.dim() as f64;
    let mean = v.0.iter().sum::<f64>() / n;
    let var = v.0.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    if sd.is_nan() || sd == 0.0 {
        return Err(Error::ConstantObject);
    }
    Ok(FeatureVector(v.0.iter().map(|x| (x - mean) / sd).collect()))
}

pub fn euclidean_distance(u: &FeatureVector, v: &FeatureVector) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), got: v.dim() });
    }
    Ok(sq_dist(&u.0, &v.0).sqrt())
}

fn sq_dist(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KnnVariant {
    /// Sum of distances to the K nearest other-label examples over the sum
    /// to the K nearest same-label ones.
    Ratio,
    /// Fraction of the K nearest neighbours sharing the label.
    Cp,
    /// Signed neighbourhood predictability.
    Sp,
}

impl KnnVariant {
    pub const ALL: [KnnVariant; 3] = [KnnVariant::Ratio, KnnVariant::Cp, KnnVariant::Sp];

    pub fn name(&self) -> &'static str {
        match self {
            KnnVariant::Ratio => "ratio",
            KnnVariant::Cp => "cp",
            KnnVariant::Sp => "sp",
        }
    }

    pub fn min_k(&self) -> usize {
        match self {
            KnnVariant::Cp => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for KnnVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for KnnVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ratio" => Ok(KnnVariant::Ratio),
            "cp" => Ok(KnnVariant::Cp),
            "sp" => Ok(KnnVariant::Sp),
            other => Err(Error::InvalidParameter(format!("unknown variant {other}"))),
        }
    }
}

/// Neighbour count, variant, and the seed for breaking distance and
/// argmax ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KnnConfig {
    k: usize,
    variant: KnnVariant,
    seed: u64,
}

impl KnnConfig {
    pub fn new(k: usize, variant: KnnVariant, seed: u64) -> Result<Self> {
        if k < variant.min_k() {
            return Err(Error::InvalidParameter(format!("{variant} needs K >= {}, got {k}", variant.min_k())));
        }
        Ok(KnnConfig { k, variant, seed })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn variant(&self) -> KnnVariant {
        self.variant
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// A neighbour of some example: squared distance, bag index, label.
#[derive(Debug, Clone, Copy)]
struct Neighbour {
    d: f64,
    id: usize,
    label: usize,
}

fn by_distance(a: &Neighbour, b: &Neighbour) -> std::cmp::Ordering {
    a.d.total_cmp(&b.d).then(a.id.cmp(&b.id))
}

/// Keeps the sorted prefix up to and including every neighbour tied with
/// the k-th.
fn truncate_at_kth(list: &mut Vec<Neighbour>, k: usize) {
    if list.len() > k {
        let kth = list[k - 1].d;
        let end = list.partition_point(|n| n.d <= kth);
        list.truncate(end);
    }
}

fn tie_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Label counts among the k nearest of a sorted, truncated neighbour list;
/// neighbours tied at the k-th distance are sampled without replacement.
fn label_counts(list: &[Neighbour], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n_labels = list.iter().map(|n| n.label + 1).max().unwrap_or(0);
    let mut counts = vec![0; n_labels];
    let kth = list[k - 1].d;
    let sure = list.partition_point(|n| n.d < kth);
    for n in &list[..sure] {
        counts[n.label] += 1;
    }
    let tied = &list[sure..];
    let need = k - sure;
    if need == tied.len() {
        for n in tied {
            counts[n.label] += 1;
        }
    } else {
        for i in sample(rng, tied.len(), need) {
            counts[tied[i].label] += 1;
        }
    }
    counts
}

impl KnnConfig {
    /// Score of one example from its sorted neighbour list (self excluded).
    fn score_from(&self, own: usize, index: usize, list: &[Neighbour]) -> Result<f64> {
        let k = self.k;
        match self.variant {
            KnnVariant::Ratio => {
                let same: f64 = list.iter().filter(|n| n.label == own).take(k).map(|n| n.d.sqrt()).sum();
                let diff: f64 = list.iter().filter(|n| n.label != own).take(k).map(|n| n.d.sqrt()).sum();
                let n_same = list.iter().filter(|n| n.label == own).take(k).count();
                let n_diff = list.iter().filter(|n| n.label != own).take(k).count();
                if n_same < k || n_diff < k {
                    return Err(Error::InsufficientNeighbors { needed: k, available: n_same.min(n_diff) });
                }
                Ok(if same > 0.0 { diff / same } else { f64::INFINITY })
            }
            KnnVariant::Cp | KnnVariant::Sp => {
                if list.len() < k {
                    return Err(Error::InsufficientNeighbors { needed: k, available: list.len() });
                }
                let mut rng = tie_rng(self.seed, index);
                let counts = label_counts(list, k, &mut rng);
                let own_count = counts.get(own).copied().unwrap_or(0);
                if self.variant == KnnVariant::Cp {
                    return Ok(own_count as f64 / k as f64);
                }
                let max = *counts.iter().max().expect("k >= 1");
                let top: Vec<usize> = (0..counts.len()).filter(|&y| counts[y] == max).collect();
                let guess = if top.len() == 1 { top[0] } else { top[rng.random_range(0..top.len())] };
                let f = max as f64 / k as f64;
                Ok(if guess == own { f } else { -f })
            }
        }
    }

    /// Neighbour lists must keep this many entries of each kind.
    fn keeps_per_label(&self) -> bool {
        self.variant == KnnVariant::Ratio
    }

    /// Sorted list of `others`, cut after the k-th (per same/other label
    /// for the ratio variant) keeping ties.
    fn neighbour_list(&self, own: usize, mut all: Vec<Neighbour>) -> Vec<Neighbour> {
        all.sort_by(by_distance);
        if self.keeps_per_label() {
            let (mut same, mut diff) = (0, 0);
            let end = all
                .iter()
                .position(|n| {
                    if n.label == own {
                        same += 1;
                    } else {
                        diff += 1;
                    }
                    same >= self.k && diff >= self.k
                })
                .map_or(all.len(), |p| p + 1);
            all.truncate(end);
        } else {
            truncate_at_kth(&mut all, self.k);
        }
        all
    }
}

/// The three nearest-neighbour conformity measures under Euclidean
/// distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KnnScorer {
    pub config: KnnConfig,
}

impl KnnScorer {
    pub fn new(config: KnnConfig) -> Self {
        KnnScorer { config }
    }
}

fn check_dims(bag: &[Example<FeatureVector>]) -> Result<()> {
    if let Some(first) = bag.first() {
        if let Some(z) = bag.iter().find(|z| z.object.dim() != first.object.dim()) {
            return Err(Error::DimensionMismatch { expected: first.object.dim(), got: z.object.dim() });
        }
    }
    Ok(())
}

impl ConformityScorer<FeatureVector> for KnnScorer {
    fn scores(&self, bag: &[Example<FeatureVector>]) -> Result<Vec<f64>> {
        check_dims(bag)?;
        (0..bag.len())
            .into_par_iter()
            .map(|i| {
                let own = bag[i].label.0;
                let all = (0..bag.len())
                    .filter(|&j| j != i)
                    .map(|j| Neighbour {
                        d: sq_dist(bag[i].object.values(), bag[j].object.values()),
                        id: j,
                        label: bag[j].label.0,
                    })
                    .collect();
                let list = self.config.neighbour_list(own, all);
                self.config.score_from(own, i, &list)
            })
            .collect()
    }

    fn prepare<'a>(&'a self, training: &'a [Example<FeatureVector>]) -> Result<Box<dyn PreparedScorer<FeatureVector> + 'a>> {
        check_dims(training)?;
        let lists = (0..training.len())
            .into_par_iter()
            .map(|i| {
                let own = training[i].label.0;
                let all = (0..training.len())
                    .filter(|&j| j != i)
                    .map(|j| Neighbour {
                        d: sq_dist(training[i].object.values(), training[j].object.values()),
                        id: j,
                        label: training[j].label.0,
                    })
                    .collect();
                self.config.neighbour_list(own, all)
            })
            .collect();
        Ok(Box::new(PreparedKnn { config: self.config, training, lists }))
    }
}

/// Training neighbour lists kept so that a candidate only has to be merged
/// in.
struct PreparedKnn<'a> {
    config: KnnConfig,
    training: &'a [Example<FeatureVector>],
    lists: Vec<Vec<Neighbour>>,
}

impl PreparedScorer<FeatureVector> for PreparedKnn<'_> {
    fn scores_with(&self, candidate: &Example<FeatureVector>) -> Result<Vec<f64>> {
        let n = self.training.len();
        if let Some(first) = self.training.first() {
            if first.object.dim() != candidate.object.dim() {
                return Err(Error::DimensionMismatch { expected: first.object.dim(), got: candidate.object.dim() });
            }
        }
        let cand_label = candidate.label.0;
        let dists: Vec<f64> =
            self.training.iter().map(|z| sq_dist(z.object.values(), candidate.object.values())).collect();
        let mut out = Vec::with_capacity(n + 1);
        for (i, &d) in dists.iter().enumerate() {
            let own = self.training[i].label.0;
            let mut list = self.lists[i].clone();
            let c = Neighbour { d, id: n, label: cand_label };
            let pos = list.partition_point(|m| by_distance(m, &c).is_lt());
            list.insert(pos, c);
            let list = self.config.neighbour_list(own, list);
            out.push(self.config.score_from(own, i, &list)?);
        }
        let all = (0..n).map(|j| Neighbour { d: dists[j], id: j, label: self.training[j].label.0 }).collect();
        let list = self.config.neighbour_list(cand_label, all);
        out.push(self.config.score_from(cand_label, n, &list)?);
        Ok(out)
    }
}

/// Isotropic Gaussian classes in `dim` dimensions with means `spread`
/// apart along distinct axes, labels assigned uniformly at random.
pub fn gaussian_blobs(
    n: usize,
    n_classes: usize,
    dim: usize,
    spread: f64,
    seed: u64,
) -> Result<Vec<Example<FeatureVector>>> {
    if n_classes == 0 || dim < n_classes {
        return Err(Error::InvalidParameter(format!("need 1 <= classes <= dim, got {n_classes} classes in {dim}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let y = rng.random_range(0..n_classes);
            let values = (0..dim)
                .map(|d| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z + if d == y { spread } else { 0.0 }
                })
                .collect();
            Ok(Example::new(FeatureVector::new(values)?, LabelId(y)))
        })
        .collect()
}
