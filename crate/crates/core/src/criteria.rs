//! The ten efficiency criteria, evaluated on finite p-value tables and
//! exactly on idealised transducers.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::domain::{CriterionValue, Direction, LabelId, ObjectId, SignificanceLevel};
use crate::error::{Error, Result};
use crate::idealized::{AffinePValue, IdealizedTransducer};
use crate::numeric::Scalar;
use crate::transducer::PValueTable;

/// A strictly increasing transform used by the generalised sum criterion.
#[derive(Clone)]
pub enum Phi {
    Identity,
    Custom { name: String, f: Arc<dyn Fn(f64) -> f64 + Send + Sync> },
}

impl Phi {
    pub fn custom(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Phi::Custom { name: name.into(), f: Arc::new(f) }
    }

    pub fn apply(&self, v: f64) -> f64 {
        match self {
            Phi::Identity => v,
            Phi::Custom { f, .. } => f(v),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Phi::Identity => "identity",
            Phi::Custom { name, .. } => name,
        }
    }
}

impl fmt::Debug for Phi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Phi({})", self.name())
    }
}

impl PartialEq for Phi {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Phi::Identity, Phi::Identity) => true,
            (Phi::Custom { name: a, f: fa }, Phi::Custom { name: b, f: fb }) => a == b && Arc::ptr_eq(fa, fb),
            _ => false,
        }
    }
}

/// One of the ten criteria, or the φ-generalisation of S.
#[derive(Debug, Clone, PartialEq)]
pub enum CriterionId {
    S,
    N,
    U,
    F,
    M,
    E,
    OU,
    OF,
    OM,
    OE,
    SPhi(Phi),
}

impl CriterionId {
    pub const ALL: [CriterionId; 10] = [
        CriterionId::S,
        CriterionId::N,
        CriterionId::U,
        CriterionId::F,
        CriterionId::M,
        CriterionId::E,
        CriterionId::OU,
        CriterionId::OF,
        CriterionId::OM,
        CriterionId::OE,
    ];

    pub fn name(&self) -> String {
        match self {
            CriterionId::S => "S".into(),
            CriterionId::N => "N".into(),
            CriterionId::U => "U".into(),
            CriterionId::F => "F".into(),
            CriterionId::M => "M".into(),
            CriterionId::E => "E".into(),
            CriterionId::OU => "OU".into(),
            CriterionId::OF => "OF".into(),
            CriterionId::OM => "OM".into(),
            CriterionId::OE => "OE".into(),
            CriterionId::SPhi(phi) => format!("S_phi({})", phi.name()),
        }
    }

    pub fn needs_epsilon(&self) -> bool {
        matches!(self, CriterionId::N | CriterionId::M | CriterionId::E | CriterionId::OM | CriterionId::OE)
    }

    pub fn needs_labels(&self) -> bool {
        matches!(self, CriterionId::OU | CriterionId::OF | CriterionId::OM | CriterionId::OE)
    }

    pub fn needs_two_labels(&self) -> bool {
        matches!(self, CriterionId::U | CriterionId::F | CriterionId::OU)
    }

    pub fn has_secondary(&self) -> bool {
        matches!(self, CriterionId::U | CriterionId::F | CriterionId::M | CriterionId::E)
    }

    fn secondary_direction(&self) -> Direction {
        match self {
            CriterionId::M | CriterionId::E => Direction::LargerIsBetter,
            _ => Direction::SmallerIsBetter,
        }
    }

    fn check_labels(&self, n_labels: usize) -> Result<()> {
        if self.needs_two_labels() && n_labels < 2 {
            return Err(Error::TooFewLabels { criterion: self.name(), labels: n_labels });
        }
        Ok(())
    }
}

impl fmt::Display for CriterionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(&self.name())
    }
}

impl FromStr for CriterionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_uppercase().as_str() {
            "S" => CriterionId::S,
            "N" => CriterionId::N,
            "U" => CriterionId::U,
            "F" => CriterionId::F,
            "M" => CriterionId::M,
            "E" => CriterionId::E,
            "OU" => CriterionId::OU,
            "OF" => CriterionId::OF,
            "OM" => CriterionId::OM,
            "OE" => CriterionId::OE,
            "S_PHI" | "SPHI" => CriterionId::SPhi(Phi::Identity),
            other => return Err(Error::InvalidParameter(format!("unknown criterion `{other}`"))),
        })
    }
}

/// A function on [0, 1] that is affine between consecutive knots.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear<T> {
    knots: Vec<T>,
    pieces: Vec<AffinePValue<T>>,
}

impl<T: Scalar> PiecewiseLinear<T> {
    /// Builds from knots `0 = t0 < t1 < … < tm = 1` and `m` affine pieces.
    pub fn new(knots: Vec<T>, pieces: Vec<AffinePValue<T>>) -> Result<Self> {
        if knots.len() != pieces.len() + 1 || pieces.is_empty() {
            return Err(Error::InvalidParameter("need one more knot than pieces".into()));
        }
        if !knots[0].is_zero() || knots[knots.len() - 1] != T::one() || knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("knots must increase from 0 to 1".into()));
        }
        Ok(PiecewiseLinear { knots, pieces })
    }

    pub fn affine(f: AffinePValue<T>) -> Self {
        PiecewiseLinear { knots: vec![T::zero(), T::one()], pieces: vec![f] }
    }

    /// The k-th largest (1-based) of a family of affine functions of τ.
    pub fn kth_largest(fs: &[AffinePValue<T>], k: usize) -> Self {
        assert!(k >= 1 && k <= fs.len(), "k out of range");
        let mut knots = vec![T::zero(), T::one()];
        for i in 0..fs.len() {
            for j in i + 1..fs.len() {
                let ds = fs[i].slope.clone() - fs[j].slope.clone();
                if ds.is_zero() {
                    continue;
                }
                let t = (fs[j].intercept.clone() - fs[i].intercept.clone()) / ds;
                if t > T::zero() && t < T::one() {
                    knots.push(t);
                }
            }
        }
        knots.sort_by(T::cmp_total);
        knots.dedup();
        let pieces = knots
            .windows(2)
            .map(|w| {
                let mid = (w[0].clone() + w[1].clone()) * T::half();
                let mut vals: Vec<(T, usize)> = fs.iter().enumerate().map(|(i, f)| (f.at(&mid), i)).collect();
                vals.sort_by(|a, b| b.0.cmp_total(&a.0));
                fs[vals[k - 1].1].clone()
            })
            .collect();
        PiecewiseLinear { knots, pieces }
    }

    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    pub fn pieces(&self) -> &[AffinePValue<T>] {
        &self.pieces
    }

    /// Value at τ, taking the piece that starts at a knot.
    pub fn evaluate(&self, tau: &T) -> T {
        let idx = self.knots[1..self.knots.len() - 1].iter().take_while(|k| *k <= tau).count();
        self.pieces[idx].at(tau)
    }

    /// ∫₀¹ f(τ) dτ.
    pub fn integral(&self) -> T {
        let mut total = T::zero();
        for (w, f) in self.knots.windows(2).zip(&self.pieces) {
            let width = w[1].clone() - w[0].clone();
            total = total + (f.at(&w[0]) + f.at(&w[1])) * T::half() * width;
        }
        total
    }

    /// Lebesgue measure of {τ ∈ [0,1] : f(τ) > ε}.
    pub fn prob_exceeds(&self, epsilon: &T) -> T {
        let mut total = T::zero();
        for (w, f) in self.knots.windows(2).zip(&self.pieces) {
            let (l, r) = (&w[0], &w[1]);
            let (fl, fr) = (f.at(l), f.at(r));
            let width = r.clone() - l.clone();
            if fl > *epsilon && fr > *epsilon {
                total = total + width;
            } else if fl > *epsilon || fr > *epsilon {
                let cross = l.clone() + (epsilon.clone() - fl.clone()) / (fr.clone() - fl.clone()) * width;
                total = total + if fl > *epsilon { cross - l.clone() } else { r.clone() - cross };
            }
        }
        total
    }
}

/// E over τ ~ U[0,1].
pub fn tau_expectation<T: Scalar>(f: &PiecewiseLinear<T>) -> T {
    f.integral()
}

/// Prob over τ that the p-value exceeds ε.
pub fn exceed_probability<T: Scalar>(p: &AffinePValue<T>, epsilon: &SignificanceLevel<T>) -> T {
    p.exceed_probability(epsilon.value())
}

/// Entry point of a label into the prediction set: the label is in Γ^ε
/// exactly for τ in (entry, 1].
fn entry<T: Scalar>(p: &AffinePValue<T>, epsilon: &T) -> T {
    T::one() - p.exceed_probability(epsilon)
}

fn sorted_entries<T: Scalar>(row: &[AffinePValue<T>], epsilon: &T) -> Vec<T> {
    let mut e: Vec<T> = row.iter().map(|p| entry(p, epsilon)).collect();
    e.sort_by(T::cmp_total);
    e
}

fn checked_epsilon<T: Scalar>(criterion: &CriterionId, epsilon: Option<&T>) -> Result<T> {
    let eps = epsilon.ok_or_else(|| Error::MissingEpsilon(criterion.name()))?;
    if *eps <= T::zero() || *eps >= T::one() {
        return Err(Error::InvalidEpsilon(eps.to_string()));
    }
    Ok(eps.clone())
}

/// Exact expectation of a criterion over (x, y) ~ Q and τ ~ U[0,1].
pub fn evaluate_idealized<T: Scalar>(
    transducer: &IdealizedTransducer<T>,
    criterion: &CriterionId,
    epsilon: Option<&T>,
) -> Result<CriterionValue<T>> {
    criterion.check_labels(transducer.joint().n_labels())?;
    let eps = if criterion.needs_epsilon() { Some(checked_epsilon(criterion, epsilon)?) } else { None };
    Ok(evaluate_unchecked(transducer, criterion, eps.as_ref()))
}

/// Evaluation without argument checks. ε may be 0, where every curve
/// equals its right limit.
pub(crate) fn evaluate_unchecked<T: Scalar>(
    transducer: &IdealizedTransducer<T>,
    criterion: &CriterionId,
    eps: Option<&T>,
) -> CriterionValue<T> {
    let joint = transducer.joint();
    let (nx, ny) = (joint.n_objects(), joint.n_labels());
    let dir = criterion.secondary_direction();

    let mut primary = T::zero();
    let mut secondary = T::zero();
    for x in 0..nx {
        let row = transducer.row(ObjectId(x));
        let wx = joint.marginal_x(ObjectId(x));
        let cells: Vec<&T> = (0..ny).map(|y| joint.prob(x, y)).collect();
        let sum_e = T::sum_iter(row.iter().map(AffinePValue::expectation));
        match criterion {
            CriterionId::S | CriterionId::SPhi(Phi::Identity) => primary = primary + wx * sum_e,
            CriterionId::SPhi(phi) => {
                let v: f64 = row.iter().map(|p| integrate_phi(phi, p.intercept.to_f64(), p.slope.to_f64())).sum();
                primary = primary + wx * T::from_f64(v);
            }
            CriterionId::N => {
                let e = eps.expect("checked");
                primary = primary + wx * T::sum_iter(row.iter().map(|p| p.exceed_probability(e)));
            }
            CriterionId::U => {
                primary = primary + wx.clone() * PiecewiseLinear::kth_largest(row, 2).integral();
                secondary = secondary + wx * PiecewiseLinear::kth_largest(row, 1).integral();
            }
            CriterionId::F => {
                let max = PiecewiseLinear::kth_largest(row, 1).integral();
                primary = primary + wx.clone() * (sum_e - max.clone());
                secondary = secondary + wx * max;
            }
            CriterionId::M | CriterionId::E => {
                let e = sorted_entries(row, eps.expect("checked"));
                let empty = e.first().cloned().unwrap_or_else(T::one);
                let stat = if *criterion == CriterionId::M {
                    e.get(1).map_or(T::zero(), |v| T::one() - v.clone())
                } else {
                    T::sum_iter(e.iter().skip(1).map(|v| T::one() - v.clone()))
                };
                primary = primary + wx.clone() * stat;
                secondary = secondary + wx * empty;
            }
            CriterionId::OU => {
                for (y, qy) in cells.iter().enumerate() {
                    let others: Vec<AffinePValue<T>> =
                        row.iter().enumerate().filter(|(i, _)| *i != y).map(|(_, p)| p.clone()).collect();
                    primary = primary + (*qy).clone() * PiecewiseLinear::kth_largest(&others, 1).integral();
                }
            }
            CriterionId::OF => {
                for (qy, p) in cells.iter().zip(row) {
                    primary = primary + (*qy).clone() * (sum_e.clone() - p.expectation());
                }
            }
            CriterionId::OM | CriterionId::OE => {
                let e = eps.expect("checked");
                let entries: Vec<T> = row.iter().map(|p| entry(p, e)).collect();
                for (y, qy) in cells.iter().enumerate() {
                    let others = entries.iter().enumerate().filter(|(i, _)| *i != y).map(|(_, v)| v.clone());
                    let stat = if *criterion == CriterionId::OM {
                        others.reduce(T::min_of).map_or(T::zero(), |m| T::one() - m)
                    } else {
                        T::sum_iter(others.map(|v| T::one() - v))
                    };
                    primary = primary + (*qy).clone() * stat;
                }
            }
        }
    }
    if criterion.has_secondary() {
        CriterionValue::with_secondary(primary, secondary, dir)
    } else {
        CriterionValue::single(primary)
    }
}

/// ∫₀¹ φ(a + τb) dτ.
fn integrate_phi(phi: &Phi, a: f64, b: f64) -> f64 {
    match phi {
        Phi::Identity => a + b / 2.0,
        Phi::Custom { f, .. } => {
            if b == 0.0 {
                f(a)
            } else {
                adaptive_simpson(&|t| f(a + t * b), 0.0, 1.0, 1e-10)
            }
        }
    }
}

/// Adaptive Simpson quadrature to a relative tolerance.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = (a + b) / 2.0;
        let (lm, rm) = ((a + m) / 2.0, (m + b) / 2.0);
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fm, fb) = (f(a), f((a + b) / 2.0), f(b));
    let whole = simpson(fa, fm, fb, a, b);
    let tol = (rel_tol * whole.abs()).max(f64::MIN_POSITIVE);
    recurse(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Per-object statistic of a criterion on one vector of p-values.
/// Returns the primary and, for U/F/M/E, the secondary component.
pub fn object_statistic(
    criterion: &CriterionId,
    p: &[f64],
    observed: Option<usize>,
    epsilon: Option<f64>,
) -> (f64, Option<f64>) {
    let sum: f64 = p.iter().sum();
    let mut sorted = p.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let max = sorted.first().copied().unwrap_or(0.0);
    let size = |eps: f64| p.iter().filter(|&&v| v > eps).count();
    let eps = epsilon.unwrap_or(f64::NAN);
    let others = || p.iter().enumerate().filter(move |(i, _)| Some(*i) != observed).map(|(_, v)| *v);
    match criterion {
        CriterionId::S => (sum, None),
        CriterionId::SPhi(phi) => (p.iter().map(|v| phi.apply(*v)).sum(), None),
        CriterionId::N => (size(eps) as f64, None),
        CriterionId::U => (sorted[1], Some(max)),
        CriterionId::F => (sum - max, Some(max)),
        CriterionId::M => {
            let n = size(eps);
            ((n > 1) as u8 as f64, Some((n == 0) as u8 as f64))
        }
        CriterionId::E => {
            let n = size(eps);
            (n.saturating_sub(1) as f64, Some((n == 0) as u8 as f64))
        }
        CriterionId::OU => (others().fold(f64::NEG_INFINITY, f64::max), None),
        CriterionId::OF => (others().sum(), None),
        CriterionId::OM => ((others().any(|v| v > eps)) as u8 as f64, None),
        CriterionId::OE => (others().filter(|&v| v > eps).count() as f64, None),
    }
}

/// Average of a criterion over a finite test sequence.
pub fn evaluate_empirical(
    criterion: &CriterionId,
    pvals: &PValueTable,
    observed_labels: Option<&[LabelId]>,
    epsilon: Option<f64>,
) -> Result<CriterionValue<f64>> {
    criterion.check_labels(pvals.n_labels())?;
    let eps = if criterion.needs_epsilon() { Some(checked_epsilon(criterion, epsilon.as_ref())?) } else { None };
    let observed = if criterion.needs_labels() {
        let labels = observed_labels.ok_or_else(|| Error::MissingLabels(criterion.name()))?;
        if labels.len() != pvals.n_objects() {
            return Err(Error::DimensionMismatch { expected: pvals.n_objects(), got: labels.len() });
        }
        Some(labels)
    } else {
        None
    };
    let k = pvals.n_objects().max(1) as f64;
    let (mut primary, mut secondary) = (0.0, 0.0);
    for i in 0..pvals.n_objects() {
        let (p, s) = object_statistic(criterion, pvals.row(i), observed.map(|l| l[i].0), eps);
        primary += p;
        secondary += s.unwrap_or(0.0);
    }
    Ok(if criterion.has_secondary() {
        CriterionValue::with_secondary(primary / k, secondary / k, criterion.secondary_direction())
    } else {
        CriterionValue::single(primary / k)
    })
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub secondary_mean: Option<f64>,
}

const MC_CHUNK: usize = 1 << 14;

/// Independent sampling estimate of `evaluate_idealized`: draws
/// (x, y) ~ Q and τ ~ U[0,1] and averages the per-draw statistic.
pub fn evaluate_idealized_mc<T: Scalar>(
    transducer: &IdealizedTransducer<T>,
    criterion: &CriterionId,
    epsilon: Option<f64>,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be at least 1".into()));
    }
    let joint = transducer.joint();
    criterion.check_labels(joint.n_labels())?;
    let eps = if criterion.needs_epsilon() { Some(checked_epsilon(criterion, epsilon.as_ref())?) } else { None };
    let ny = joint.n_labels();
    let probs: Vec<f64> = joint.probs().iter().map(Scalar::to_f64).collect();
    let mut cumulative = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in &probs {
        acc += p;
        cumulative.push(acc);
    }
    let rows: Vec<(f64, f64)> =
        transducer.pvalues().iter().map(|p| (p.intercept.to_f64(), p.slope.to_f64())).collect();
    let n_chunks = n_samples.div_ceil(MC_CHUNK);
    let sums: Vec<(f64, f64, f64)> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let count = MC_CHUNK.min(n_samples - chunk * MC_CHUNK);
            let mut p = vec![0.0; ny];
            let (mut s, mut s2, mut sec) = (0.0, 0.0, 0.0);
            for _ in 0..count {
                let u: f64 = rng.random::<f64>() * acc;
                let cell = cumulative.partition_point(|&c| c <= u).min(probs.len() - 1);
                let (x, y) = (cell / ny, cell % ny);
                let tau: f64 = rng.random();
                for (j, v) in p.iter_mut().enumerate() {
                    let (a, b) = rows[x * ny + j];
                    *v = a + tau * b;
                }
                let (v, w) = object_statistic(criterion, &p, Some(y), eps);
                s += v;
                s2 += v * v;
                sec += w.unwrap_or(0.0);
            }
            (s, s2, sec)
        })
        .collect();
    let n = n_samples as f64;
    let (s, s2, sec) = sums.iter().fold((0.0, 0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let mean = s / n;
    let var = if n_samples > 1 { ((s2 - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
    Ok(McEstimate {
        mean,
        stderr: (var / n).sqrt(),
        secondary_mean: criterion.has_secondary().then_some(sec / n),
    })
}

/// Compares two criterion values; `Less` means `a` is preferable.
pub fn compare<T: Scalar>(a: &CriterionValue<T>, b: &CriterionValue<T>) -> Ordering {
    a.preference_cmp(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::FiniteJoint;
    use crate::idealized::{cp_measure, msp_measure, sp_measures, Mode};
    use crate::numeric::Rational;
    use proptest::prelude::*;

    fn q(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    fn aff(a: Rational, b: Rational) -> AffinePValue<Rational> {
        AffinePValue::new(a, b)
    }

    fn table(rows: Vec<Vec<f64>>) -> PValueTable {
        let n = rows.len();
        PValueTable::new(rows, vec![vec![0.5]; n], 0).unwrap()
    }

    #[test]
    fn tau_expectation_examples() {
        let id = PiecewiseLinear::affine(aff(q(0, 1), q(1, 1)));
        assert_eq!(tau_expectation(&id), q(1, 2));
        let max = PiecewiseLinear::kth_largest(&[aff(q(0, 1), q(1, 1)), aff(q(1, 2), q(0, 1))], 1);
        assert_eq!(tau_expectation(&max), q(5, 8));
        let fs = [aff(q(0, 1), q(1, 5)), aff(q(1, 5), q(3, 10)), aff(q(1, 2), q(1, 2))];
        assert_eq!(tau_expectation(&PiecewiseLinear::kth_largest(&fs, 2)), q(7, 20));
    }

    #[test]
    fn piecewise_evaluate_and_exceed() {
        let max = PiecewiseLinear::kth_largest(&[aff(q(0, 1), q(1, 1)), aff(q(1, 2), q(0, 1))], 1);
        assert_eq!(max.knots(), &[q(0, 1), q(1, 2), q(1, 1)]);
        assert_eq!(max.evaluate(&q(1, 4)), q(1, 2));
        assert_eq!(max.evaluate(&q(3, 4)), q(3, 4));
        assert_eq!(max.evaluate(&q(1, 1)), q(1, 1));
        assert_eq!(max.prob_exceeds(&q(3, 4)), q(1, 4));
        assert_eq!(max.prob_exceeds(&q(1, 4)), q(1, 1));
        assert_eq!(max.prob_exceeds(&q(1, 2)), q(1, 2));
        assert!(PiecewiseLinear::new(vec![q(0, 1), q(1, 2)], vec![aff(q(0, 1), q(0, 1))]).is_err());
    }

    #[test]
    fn exceed_probability_examples() {
        let e = SignificanceLevel::new(q(1, 5)).unwrap();
        assert_eq!(exceed_probability(&aff(q(1, 2), q(1, 2)), &e), q(1, 1));
        assert_eq!(exceed_probability(&aff(q(0, 1), q(1, 2)), &e), q(3, 5));
        assert_eq!(exceed_probability(&aff(q(1, 5), q(0, 1)), &e), q(0, 1));
    }

    #[test]
    fn empirical_hand_examples() {
        let t = table(vec![vec![0.2, 0.35, 0.75]]);
        let obs = [LabelId(2)];
        let close = |c: CriterionId, v: f64| {
            let got = evaluate_empirical(&c, &t, Some(&obs), None).unwrap().primary;
            assert!((got - v).abs() < 1e-12, "{c}: {got} vs {v}");
        };
        close(CriterionId::S, 1.3);
        close(CriterionId::U, 0.35);
        close(CriterionId::F, 0.55);
        close(CriterionId::OF, 0.55);
        close(CriterionId::OU, 0.35);

        let t = table(vec![vec![0.0, 1.0, 0.0]]);
        let obs = [LabelId(1)];
        let at = |c: CriterionId| evaluate_empirical(&c, &t, Some(&obs), Some(0.1)).unwrap();
        assert_eq!(at(CriterionId::N).primary, 1.0);
        assert_eq!(at(CriterionId::M).primary, 0.0);
        assert_eq!(at(CriterionId::M).secondary, Some(0.0));
        assert_eq!(at(CriterionId::E).primary, 0.0);
        assert_eq!(at(CriterionId::OM).primary, 0.0);
        assert_eq!(at(CriterionId::OE).primary, 0.0);

        let t = table(vec![vec![0.05, 0.05]]);
        let m = evaluate_empirical(&CriterionId::M, &t, None, Some(0.1)).unwrap();
        assert_eq!((m.primary, m.secondary), (0.0, Some(1.0)));
        assert_eq!(evaluate_empirical(&CriterionId::N, &t, None, Some(0.1)).unwrap().primary, 0.0);
    }

    #[test]
    fn empirical_errors() {
        let t = table(vec![vec![0.3]]);
        assert!(matches!(
            evaluate_empirical(&CriterionId::U, &t, None, None),
            Err(Error::TooFewLabels { .. })
        ));
        let t = table(vec![vec![0.3, 0.4]]);
        assert!(matches!(evaluate_empirical(&CriterionId::OF, &t, None, None), Err(Error::MissingLabels(_))));
        assert!(matches!(evaluate_empirical(&CriterionId::N, &t, None, None), Err(Error::MissingEpsilon(_))));
        assert!(matches!(evaluate_empirical(&CriterionId::N, &t, None, Some(1.0)), Err(Error::InvalidEpsilon(_))));
    }

    fn single_object() -> Arc<FiniteJoint<Rational>> {
        Arc::new(FiniteJoint::new(1, 3, vec![q(1, 5), q(3, 10), q(1, 2)]).unwrap())
    }

    #[test]
    fn single_object_values() {
        let joint = single_object();
        let build = |s: &crate::domain::ScoreTable<Rational>| {
            IdealizedTransducer::from_scores(joint.clone(), s, Mode::Unconditional).unwrap()
        };
        let cp = build(&cp_measure(&joint));
        let sp = build(&sp_measures(&joint)[0]);
        let msp = build(&msp_measure(&joint));
        let eps = q(1, 5);
        let v = |t: &IdealizedTransducer<Rational>, c: CriterionId| evaluate_idealized(t, &c, Some(&eps)).unwrap().primary;
        assert_eq!(v(&cp, CriterionId::U), q(7, 20));
        assert_eq!(v(&sp, CriterionId::U), q(1, 4));
        assert_eq!(v(&cp, CriterionId::OU), q(11, 20));
        assert_eq!(v(&msp, CriterionId::OU), q(1, 2));
        assert_eq!(v(&cp, CriterionId::M), q(1, 1));
        assert_eq!(v(&sp, CriterionId::M), q(3, 5));
        assert_eq!(v(&cp, CriterionId::OM), q(1, 1));
        assert_eq!(v(&msp, CriterionId::OM), q(4, 5));
        assert_eq!(v(&cp, CriterionId::S), v(&cp, CriterionId::OF) + q(1, 2));
        assert_eq!(v(&cp, CriterionId::SPhi(Phi::Identity)), v(&cp, CriterionId::S));
    }

    #[test]
    fn s_phi_with_custom_transform() {
        let joint = single_object();
        let cp = IdealizedTransducer::from_scores(joint.clone(), &cp_measure(&joint), Mode::Unconditional).unwrap();
        let square = CriterionId::SPhi(Phi::custom("square", |v| v * v));
        let got = evaluate_idealized(&cp, &square, None).unwrap().primary.to_f64();
        // ∫(a+τb)² = a² + ab + b²/3 for each label
        let expected: f64 = cp
            .pvalues()
            .iter()
            .map(|p| {
                let (a, b) = (p.intercept.to_f64(), p.slope.to_f64());
                a * a + a * b + b * b / 3.0
            })
            .sum();
        assert!((got - expected).abs() <= 1e-10 * expected);
        let s = evaluate_idealized(&cp, &CriterionId::S, None).unwrap().primary.to_f64();
        let ident = evaluate_idealized(&cp, &CriterionId::SPhi(Phi::custom("id", |v| v)), None).unwrap();
        assert!((ident.primary.to_f64() - s).abs() < 1e-12);
    }

    #[test]
    fn idealised_errors() {
        let joint = Arc::new(FiniteJoint::new(2, 1, vec![q(1, 2), q(1, 2)]).unwrap());
        let t = IdealizedTransducer::from_scores(joint.clone(), &cp_measure(&joint), Mode::Unconditional).unwrap();
        assert!(matches!(evaluate_idealized(&t, &CriterionId::U, None), Err(Error::TooFewLabels { .. })));
        assert!(matches!(evaluate_idealized(&t, &CriterionId::OM, None), Err(Error::MissingEpsilon(_))));
        assert_eq!(evaluate_idealized(&t, &CriterionId::OF, None).unwrap().primary, q(0, 1));
        assert_eq!(evaluate_idealized(&t, &CriterionId::OE, Some(&q(1, 3))).unwrap().primary, q(0, 1));
    }

    #[test]
    fn monte_carlo_agrees_on_single_object() {
        let joint = single_object();
        let cp = IdealizedTransducer::from_scores(joint.clone(), &cp_measure(&joint), Mode::Unconditional).unwrap();
        for c in CriterionId::ALL {
            let exact = evaluate_idealized(&cp, &c, Some(&q(1, 5))).unwrap().primary.to_f64();
            let mc = evaluate_idealized_mc(&cp, &c, Some(0.2), 200_000, 7).unwrap();
            assert!((mc.mean - exact).abs() <= 4.0 * mc.stderr + 1e-12, "{c}: {} vs {exact}", mc.mean);
        }
        let a = evaluate_idealized_mc(&cp, &CriterionId::U, None, 50_000, 3).unwrap();
        let b = evaluate_idealized_mc(&cp, &CriterionId::U, None, 50_000, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn criterion_names_parse() {
        for c in CriterionId::ALL {
            assert_eq!(c.name().parse::<CriterionId>().unwrap(), c);
        }
        assert!("XYZ".parse::<CriterionId>().is_err());
        assert_eq!("s_phi".parse::<CriterionId>().unwrap(), CriterionId::SPhi(Phi::Identity));
    }

    /// Brute-force reference: k-th largest at many τ points.
    fn kth_at(fs: &[AffinePValue<Rational>], k: usize, tau: &Rational) -> Rational {
        let mut v: Vec<Rational> = fs.iter().map(|f| f.at(tau)).collect();
        v.sort();
        v.reverse();
        v[k - 1].clone()
    }

    proptest! {
        #[test]
        fn kth_largest_matches_pointwise(
            coeffs in proptest::collection::vec((0i128..20, 0i128..20), 1..5),
            k_seed in 0usize..10,
            t in 0i128..=64,
        ) {
            let fs: Vec<_> = coeffs.iter().map(|&(a, b)| aff(q(a, 40), q(b, 40))).collect();
            let k = k_seed % fs.len() + 1;
            let pl = PiecewiseLinear::kth_largest(&fs, k);
            let tau = q(t, 64);
            prop_assert_eq!(pl.evaluate(&tau), kth_at(&fs, k, &tau));
        }

        #[test]
        fn integral_matches_fine_trapezoid(coeffs in proptest::collection::vec((0i128..20, 0i128..20), 2..5)) {
            let fs: Vec<_> = coeffs.iter().map(|&(a, b)| aff(q(a, 40), q(b, 40))).collect();
            let pl = PiecewiseLinear::kth_largest(&fs, 2);
            let n = 4000;
            let approx: f64 = (0..n)
                .map(|i| kth_at(&fs, 2, &q(2 * i + 1, 2 * n)).to_f64())
                .sum::<f64>() / n as f64;
            prop_assert!((pl.integral().to_f64() - approx).abs() < 1e-4);
        }

        #[test]
        fn prob_exceeds_matches_grid(coeffs in proptest::collection::vec((0i128..20, 0i128..20), 2..4), e in 1i128..40) {
            let fs: Vec<_> = coeffs.iter().map(|&(a, b)| aff(q(a, 40), q(b, 40))).collect();
            let pl = PiecewiseLinear::kth_largest(&fs, 1);
            let eps = q(e, 41);
            let n = 4000;
            let approx = (0..n).filter(|i| kth_at(&fs, 1, &q(2 * i + 1, 2 * n)) > eps).count() as f64 / n as f64;
            prop_assert!((pl.prob_exceeds(&eps).to_f64() - approx).abs() < 2e-3);
        }
    }
}
