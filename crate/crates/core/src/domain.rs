//! Shared domain types: finite distributions, score tables, weak orders and
//! criterion values.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::numeric::Scalar;

/// Index into the label alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelId(pub usize);

/// Index into the finite object alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectId(pub usize);

impl fmt::Display for LabelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Significance level, strictly inside (0, 1).
#[derive(Debug, Clone, PartialEq, PartialOrd)]
pub struct SignificanceLevel<T>(T);

impl<T: Scalar> SignificanceLevel<T> {
    pub fn new(epsilon: T) -> Result<Self> {
        if epsilon > T::zero() && epsilon < T::one() {
            Ok(SignificanceLevel(epsilon))
        } else {
            Err(Error::InvalidEpsilon(epsilon.to_string()))
        }
    }

    pub fn value(&self) -> &T {
        &self.0
    }

    pub fn into_inner(self) -> T {
        self.0
    }
}

const FLOAT_SUM_TOLERANCE: f64 = 1e-9;

/// Joint probability table over a finite example space X × Y, row-major in x.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteJoint<T> {
    n_objects: usize,
    n_labels: usize,
    probs: Vec<T>,
}

/// A map from objects to labels attaining the predictability of each object.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChoiceFunction(pub Vec<LabelId>);

impl ChoiceFunction {
    pub fn label(&self, x: ObjectId) -> LabelId {
        self.0[x.0]
    }
}

impl<T: Scalar> FiniteJoint<T> {
    /// Builds and validates a table from row-major probabilities.
    pub fn new(n_objects: usize, n_labels: usize, probs: Vec<T>) -> Result<Self> {
        let joint = FiniteJoint::new_unchecked(n_objects, n_labels, probs)?;
        joint.validate()?;
        Ok(joint)
    }

    /// Checks only the shape; used when parsing so validation errors can be
    /// reported separately.
    pub fn new_unchecked(n_objects: usize, n_labels: usize, probs: Vec<T>) -> Result<Self> {
        if n_objects == 0 || n_labels == 0 {
            return Err(Error::ShapeMismatch("need at least one object and one label".into()));
        }
        if probs.len() != n_objects * n_labels {
            return Err(Error::ShapeMismatch(format!(
                "{} probabilities for a {}x{} table",
                probs.len(),
                n_objects,
                n_labels
            )));
        }
        Ok(FiniteJoint { n_objects, n_labels, probs })
    }

    /// Builds Q from the object marginal and one conditional row per object.
    pub fn from_conditionals(marginal: Vec<T>, conditionals: Vec<Vec<T>>) -> Result<Self> {
        if marginal.len() != conditionals.len() {
            return Err(Error::ShapeMismatch("one conditional row per object expected".into()));
        }
        let n_labels = conditionals.first().map_or(0, Vec::len);
        if conditionals.iter().any(|row| row.len() != n_labels) {
            return Err(Error::ShapeMismatch("conditional rows differ in length".into()));
        }
        let probs = marginal
            .iter()
            .zip(&conditionals)
            .flat_map(|(m, row)| row.iter().map(move |c| m.clone() * c.clone()))
            .collect();
        FiniteJoint::new(marginal.len(), n_labels, probs)
    }

    /// Validates the standing assumptions: entries in [0, 1], total mass 1
    /// and every object marginal positive.
    pub fn validate(&self) -> Result<()> {
        for x in 0..self.n_objects {
            for y in 0..self.n_labels {
                let p = self.prob(x, y);
                if *p < T::zero() || *p > T::one() || p.to_f64().is_nan() {
                    return Err(Error::InvalidProbability { x, y, value: p.to_string() });
                }
            }
        }
        let sum = T::sum_iter(self.probs.iter().cloned());
        let ok = if T::EXACT {
            sum == T::one()
        } else {
            (sum.to_f64() - 1.0).abs() <= FLOAT_SUM_TOLERANCE
        };
        if !ok {
            return Err(Error::Normalization { sum: sum.to_string() });
        }
        for x in 0..self.n_objects {
            if self.marginal_x(ObjectId(x)).is_zero() {
                return Err(Error::DegenerateMarginal(format!("Q_X({x}) = 0")));
            }
        }
        Ok(())
    }

    /// Additionally requires every label marginal to be positive.
    pub fn validate_label_conditional(&self) -> Result<()> {
        self.validate()?;
        for y in 0..self.n_labels {
            if self.marginal_y(LabelId(y)).is_zero() {
                return Err(Error::DegenerateMarginal(format!("Q_Y({y}) = 0")));
            }
        }
        Ok(())
    }

    pub fn n_objects(&self) -> usize {
        self.n_objects
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn n_cells(&self) -> usize {
        self.probs.len()
    }

    pub fn cell(&self, x: usize, y: usize) -> usize {
        x * self.n_labels + y
    }

    pub fn prob(&self, x: usize, y: usize) -> &T {
        &self.probs[self.cell(x, y)]
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn marginal_x(&self, x: ObjectId) -> T {
        T::sum_iter((0..self.n_labels).map(|y| self.prob(x.0, y).clone()))
    }

    pub fn marginal_y(&self, y: LabelId) -> T {
        T::sum_iter((0..self.n_objects).map(|x| self.prob(x, y.0).clone()))
    }

    /// Q(· | x).
    pub fn conditional(&self, x: ObjectId) -> Vec<T> {
        let m = self.marginal_x(x);
        (0..self.n_labels).map(|y| self.prob(x.0, y).clone() / m.clone()).collect()
    }

    /// f(x) = max_y Q(y | x).
    pub fn predictability(&self, x: ObjectId) -> T {
        self.conditional(x)
            .into_iter()
            .reduce(T::max_of)
            .expect("at least one label")
    }

    /// Labels attaining the predictability of `x`, in increasing id order.
    pub fn argmax_labels(&self, x: ObjectId) -> Vec<LabelId> {
        let row = self.conditional(x);
        let best = row.iter().cloned().reduce(T::max_of).expect("at least one label");
        row.iter()
            .enumerate()
            .filter(|(_, v)| **v == best)
            .map(|(y, _)| LabelId(y))
            .collect()
    }

    /// Every choice function, ordered lexicographically by (ŷ(0), ŷ(1), ...).
    pub fn choice_functions(&self) -> Vec<ChoiceFunction> {
        let options: Vec<Vec<LabelId>> =
            (0..self.n_objects).map(|x| self.argmax_labels(ObjectId(x))).collect();
        let mut out = vec![Vec::with_capacity(self.n_objects)];
        for opts in &options {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    opts.iter().map(move |&y| {
                        let mut next = prefix.clone();
                        next.push(y);
                        next
                    })
                })
                .collect();
        }
        out.into_iter().map(ChoiceFunction).collect()
    }

    /// Converts every entry with `f`, keeping the shape.
    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> FiniteJoint<U> {
        FiniteJoint {
            n_objects: self.n_objects,
            n_labels: self.n_labels,
            probs: self.probs.iter().map(f).collect(),
        }
    }

    pub fn to_f64(&self) -> FiniteJoint<f64> {
        self.map(|v| v.to_f64())
    }
}

/// An idealised conformity measure given as one score per example.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable<T> {
    n_objects: usize,
    n_labels: usize,
    scores: Vec<T>,
}

impl<T: Scalar> ScoreTable<T> {
    pub fn new(n_objects: usize, n_labels: usize, scores: Vec<T>) -> Result<Self> {
        if scores.len() != n_objects * n_labels {
            return Err(Error::ShapeMismatch(format!(
                "{} scores for a {}x{} table",
                scores.len(),
                n_objects,
                n_labels
            )));
        }
        if scores.iter().any(|s| !s.to_f64().is_finite()) {
            return Err(Error::InvalidParameter("scores must be finite".into()));
        }
        Ok(ScoreTable { n_objects, n_labels, scores })
    }

    /// Builds a table from a function of the example.
    pub fn from_fn(n_objects: usize, n_labels: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let scores = (0..n_objects)
            .flat_map(|x| (0..n_labels).map(move |y| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        ScoreTable { n_objects, n_labels, scores }
    }

    pub fn n_objects(&self) -> usize {
        self.n_objects
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn score(&self, x: usize, y: usize) -> &T {
        &self.scores[x * self.n_labels + y]
    }

    pub fn scores(&self) -> &[T] {
        &self.scores
    }

    /// The induced conformity order. Ties are exact equalities.
    pub fn order_of(&self) -> WeakOrder {
        let mut idx: Vec<usize> = (0..self.scores.len()).collect();
        idx.sort_by(|&a, &b| self.scores[a].cmp_total(&self.scores[b]));
        let mut rank = vec![0u32; self.scores.len()];
        let mut current = 0u32;
        for w in 0..idx.len() {
            if w > 0 && self.scores[idx[w]] != self.scores[idx[w - 1]] {
                current += 1;
            }
            rank[idx[w]] = current;
        }
        WeakOrder { n_objects: self.n_objects, n_labels: self.n_labels, rank }
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> ScoreTable<U> {
        ScoreTable {
            n_objects: self.n_objects,
            n_labels: self.n_labels,
            scores: self.scores.iter().map(f).collect(),
        }
    }
}

/// A total preorder on the example space, stored as dense ranks
/// (0 = least conforming, consecutive).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WeakOrder {
    n_objects: usize,
    n_labels: usize,
    rank: Vec<u32>,
}

impl WeakOrder {
    /// Accepts arbitrary integer ranks and compresses them.
    pub fn from_ranks(n_objects: usize, n_labels: usize, ranks: &[u32]) -> Result<Self> {
        if ranks.len() != n_objects * n_labels {
            return Err(Error::ShapeMismatch(format!(
                "{} ranks for a {}x{} table",
                ranks.len(),
                n_objects,
                n_labels
            )));
        }
        let mut distinct: Vec<u32> = ranks.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        let rank = ranks
            .iter()
            .map(|r| distinct.binary_search(r).expect("present") as u32)
            .collect();
        Ok(WeakOrder { n_objects, n_labels, rank })
    }

    /// Trusted constructor for ranks that are already dense.
    pub(crate) fn from_dense(n_objects: usize, n_labels: usize, rank: Vec<u32>) -> Self {
        debug_assert_eq!(rank.len(), n_objects * n_labels);
        WeakOrder { n_objects, n_labels, rank }
    }

    pub fn n_objects(&self) -> usize {
        self.n_objects
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn n_cells(&self) -> usize {
        self.rank.len()
    }

    pub fn rank(&self, x: usize, y: usize) -> u32 {
        self.rank[x * self.n_labels + y]
    }

    pub fn ranks(&self) -> &[u32] {
        &self.rank
    }

    pub fn n_classes(&self) -> usize {
        self.rank.iter().max().map_or(0, |m| *m as usize + 1)
    }

    /// The ranks reinterpreted as scores.
    pub fn to_scores<T: Scalar>(&self) -> ScoreTable<T> {
        ScoreTable::from_fn(self.n_objects, self.n_labels, |x, y| {
            T::from_usize(self.rank(x, y) as usize)
        })
    }

    /// Within-class ranks: for each label, the order restricted to that
    /// label's column, compressed. Two measures are equivalent within
    /// classes iff these keys agree.
    pub fn within_class_key(&self) -> Vec<u32> {
        let mut key = vec![0u32; self.rank.len()];
        for y in 0..self.n_labels {
            let column: Vec<u32> = (0..self.n_objects).map(|x| self.rank(x, y)).collect();
            let mut distinct = column.clone();
            distinct.sort_unstable();
            distinct.dedup();
            for (x, r) in column.iter().enumerate() {
                key[x * self.n_labels + y] = distinct.binary_search(r).expect("present") as u32;
            }
        }
        key
    }
}

/// Which way a criterion component should move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    SmallerIsBetter,
    LargerIsBetter,
}

impl Direction {
    /// Orders two values so that `Less` means `a` is preferable.
    pub fn prefer<T: Scalar>(self, a: &T, b: &T) -> Ordering {
        match self {
            Direction::SmallerIsBetter => a.cmp_total(b),
            Direction::LargerIsBetter => b.cmp_total(a),
        }
    }
}

/// A criterion value with an optional tie-breaking component.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionValue<T> {
    pub primary: T,
    pub secondary: Option<T>,
    pub primary_dir: Direction,
    pub secondary_dir: Direction,
}

impl<T: Scalar> CriterionValue<T> {
    pub fn single(primary: T) -> Self {
        CriterionValue {
            primary,
            secondary: None,
            primary_dir: Direction::SmallerIsBetter,
            secondary_dir: Direction::SmallerIsBetter,
        }
    }

    pub fn with_secondary(primary: T, secondary: T, secondary_dir: Direction) -> Self {
        CriterionValue {
            primary,
            secondary: Some(secondary),
            primary_dir: Direction::SmallerIsBetter,
            secondary_dir,
        }
    }

    /// Lexicographic preference; `Less` means `self` is better.
    pub fn preference_cmp(&self, other: &Self) -> Ordering {
        self.primary_dir.prefer(&self.primary, &other.primary).then_with(|| {
            match (&self.secondary, &other.secondary) {
                (Some(a), Some(b)) => self.secondary_dir.prefer(a, b),
                _ => Ordering::Equal,
            }
        })
    }

    pub fn to_f64(&self) -> CriterionValue<f64> {
        CriterionValue {
            primary: self.primary.to_f64(),
            secondary: self.secondary.as_ref().map(Scalar::to_f64),
            primary_dir: self.primary_dir,
            secondary_dir: self.secondary_dir,
        }
    }
}
