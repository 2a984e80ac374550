//! Idealised conformal transducers over a known finite distribution, the
//! optimal measure constructions (CP, SP, MCP, MSP) and the refinement
//! predicates that characterise the optimal sets.

use std::sync::Arc;

use crate::domain::{FiniteJoint, LabelId, ObjectId, ScoreTable, WeakOrder};
use crate::error::{Error, Result};
use crate::numeric::Scalar;

/// A p-value as a function of the smoothing variable: `a + τ·b`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePValue<T> {
    pub intercept: T,
    pub slope: T,
}

impl<T: Scalar> AffinePValue<T> {
    pub fn new(intercept: T, slope: T) -> Self {
        AffinePValue { intercept, slope }
    }

    pub fn at(&self, tau: &T) -> T {
        self.intercept.clone() + tau.clone() * self.slope.clone()
    }

    /// E_τ p = a + b/2.
    pub fn expectation(&self) -> T {
        self.intercept.clone() + self.slope.clone() * T::half()
    }

    /// Prob over τ ~ U[0,1] that `a + τ·b > ε`.
    pub fn exceed_probability(&self, epsilon: &T) -> T {
        if self.slope.is_zero() {
            return if self.intercept > *epsilon { T::one() } else { T::zero() };
        }
        let p = (self.intercept.clone() + self.slope.clone() - epsilon.clone()) / self.slope.clone();
        T::min_of(T::max_of(p, T::zero()), T::one())
    }
}

/// Unconditional or label-conditional p-values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Unconditional,
    LabelConditional,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Unconditional => "unconditional",
            Mode::LabelConditional => "label-conditional",
        }
    }
}

/// The idealised conformal transducer of a conformity order under Q.
#[derive(Debug, Clone)]
pub struct IdealizedTransducer<T> {
    joint: Arc<FiniteJoint<T>>,
    order: WeakOrder,
    mode: Mode,
    pvalues: Vec<AffinePValue<T>>,
}

impl<T: Scalar> IdealizedTransducer<T> {
    pub fn new(joint: Arc<FiniteJoint<T>>, order: WeakOrder, mode: Mode) -> Result<Self> {
        if order.n_objects() != joint.n_objects() || order.n_labels() != joint.n_labels() {
            return Err(Error::ShapeMismatch(format!(
                "order is {}x{}, distribution is {}x{}",
                order.n_objects(),
                order.n_labels(),
                joint.n_objects(),
                joint.n_labels()
            )));
        }
        let pvalues = match mode {
            Mode::Unconditional => unconditional_pvalues(&joint, &order),
            Mode::LabelConditional => {
                joint.validate_label_conditional()?;
                label_conditional_pvalues(&joint, &order)
            }
        };
        Ok(IdealizedTransducer { joint, order, mode, pvalues })
    }

    pub fn from_scores(joint: Arc<FiniteJoint<T>>, scores: &ScoreTable<T>, mode: Mode) -> Result<Self> {
        IdealizedTransducer::new(joint, scores.order_of(), mode)
    }

    pub fn joint(&self) -> &FiniteJoint<T> {
        &self.joint
    }

    pub fn order(&self) -> &WeakOrder {
        &self.order
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn p_value(&self, x: ObjectId, y: LabelId) -> &AffinePValue<T> {
        &self.pvalues[self.joint.cell(x.0, y.0)]
    }

    /// The p-values of every label for object `x`.
    pub fn row(&self, x: ObjectId) -> &[AffinePValue<T>] {
        let n = self.joint.n_labels();
        &self.pvalues[x.0 * n..(x.0 + 1) * n]
    }

    pub fn pvalues(&self) -> &[AffinePValue<T>] {
        &self.pvalues
    }

    /// Γ^ε(x) for a fixed τ.
    pub fn prediction_set_at(&self, x: ObjectId, epsilon: &T, tau: &T) -> Result<Vec<LabelId>> {
        if *tau < T::zero() || *tau > T::one() {
            return Err(Error::InvalidTau(tau.to_string()));
        }
        Ok(self
            .row(x)
            .iter()
            .enumerate()
            .filter(|(_, p)| p.at(tau) > *epsilon)
            .map(|(y, _)| LabelId(y))
            .collect())
    }
}

fn unconditional_pvalues<T: Scalar>(joint: &FiniteJoint<T>, order: &WeakOrder) -> Vec<AffinePValue<T>> {
    let classes = order.n_classes();
    let mut mass = vec![T::zero(); classes];
    for (cell, &r) in order.ranks().iter().enumerate() {
        mass[r as usize] = mass[r as usize].clone() + joint.probs()[cell].clone();
    }
    let mut below = Vec::with_capacity(classes);
    let mut acc = T::zero();
    for m in &mass {
        below.push(acc.clone());
        acc = acc + m.clone();
    }
    order
        .ranks()
        .iter()
        .map(|&r| AffinePValue::new(below[r as usize].clone(), mass[r as usize].clone()))
        .collect()
}

fn label_conditional_pvalues<T: Scalar>(joint: &FiniteJoint<T>, order: &WeakOrder) -> Vec<AffinePValue<T>> {
    let (nx, ny) = (joint.n_objects(), joint.n_labels());
    let mut out = vec![AffinePValue::new(T::zero(), T::zero()); nx * ny];
    for y in 0..ny {
        let class_mass = joint.marginal_y(LabelId(y));
        for x in 0..nx {
            let r = order.rank(x, y);
            let mut below = T::zero();
            let mut equal = T::zero();
            for x2 in 0..nx {
                let r2 = order.rank(x2, y);
                if r2 < r {
                    below = below + joint.prob(x2, y).clone();
                } else if r2 == r {
                    equal = equal + joint.prob(x2, y).clone();
                }
            }
            out[joint.cell(x, y)] = AffinePValue::new(below / class_mass.clone(), equal / class_mass.clone());
        }
    }
    out
}

/// Unconditional idealised p-value of (x, y) under the measure `scores`.
pub fn idealized_p_value<T: Scalar>(
    joint: &FiniteJoint<T>,
    scores: &ScoreTable<T>,
    x: ObjectId,
    y: LabelId,
) -> AffinePValue<T> {
    let target = scores.score(x.0, y.0);
    let mut below = T::zero();
    let mut equal = T::zero();
    for x2 in 0..joint.n_objects() {
        for y2 in 0..joint.n_labels() {
            let s = scores.score(x2, y2);
            if s < target {
                below = below + joint.prob(x2, y2).clone();
            } else if s == target {
                equal = equal + joint.prob(x2, y2).clone();
            }
        }
    }
    AffinePValue::new(below, equal)
}

/// Label-conditional idealised p-value of (x, y).
pub fn idealized_p_value_label_conditional<T: Scalar>(
    joint: &FiniteJoint<T>,
    scores: &ScoreTable<T>,
    x: ObjectId,
    y: LabelId,
) -> Result<AffinePValue<T>> {
    let class_mass = joint.marginal_y(y);
    if class_mass.is_zero() {
        return Err(Error::DegenerateMarginal(format!("Q_Y({}) = 0", y.0)));
    }
    let target = scores.score(x.0, y.0);
    let mut below = T::zero();
    let mut equal = T::zero();
    for x2 in 0..joint.n_objects() {
        let s = scores.score(x2, y.0);
        if s < target {
            below = below + joint.prob(x2, y.0).clone();
        } else if s == target {
            equal = equal + joint.prob(x2, y.0).clone();
        }
    }
    Ok(AffinePValue::new(below / class_mass.clone(), equal / class_mass))
}

/// Conditional probability measure: A(x, y) = Q(y | x).
pub fn cp_measure<T: Scalar>(joint: &FiniteJoint<T>) -> ScoreTable<T> {
    let rows: Vec<Vec<T>> = (0..joint.n_objects()).map(|x| joint.conditional(ObjectId(x))).collect();
    ScoreTable::from_fn(joint.n_objects(), joint.n_labels(), |x, y| rows[x][y].clone())
}

/// Signed predictability measures, one per choice function.
pub fn sp_measures<T: Scalar>(joint: &FiniteJoint<T>) -> Vec<ScoreTable<T>> {
    let f: Vec<T> = (0..joint.n_objects()).map(|x| joint.predictability(ObjectId(x))).collect();
    joint
        .choice_functions()
        .into_iter()
        .map(|choice| {
            ScoreTable::from_fn(joint.n_objects(), joint.n_labels(), |x, y| {
                if choice.label(ObjectId(x)) == LabelId(y) {
                    f[x].clone()
                } else {
                    -f[x].clone()
                }
            })
        })
        .collect()
}

/// Modified conditional probability measures, one per choice function.
pub fn mcp_measures<T: Scalar>(joint: &FiniteJoint<T>) -> Vec<ScoreTable<T>> {
    let rows: Vec<Vec<T>> = (0..joint.n_objects()).map(|x| joint.conditional(ObjectId(x))).collect();
    joint
        .choice_functions()
        .into_iter()
        .map(|choice| {
            ScoreTable::from_fn(joint.n_objects(), joint.n_labels(), |x, y| {
                if choice.label(ObjectId(x)) == LabelId(y) {
                    rows[x][y].clone()
                } else {
                    rows[x][y].clone() - T::one()
                }
            })
        })
        .collect()
}

/// Modified signed predictability measure. It does not depend on the
/// choice function: objects with f(x) > 1/2 have a unique maximiser.
pub fn msp_measure<T: Scalar>(joint: &FiniteJoint<T>) -> ScoreTable<T> {
    let half = T::half();
    let rows: Vec<Vec<T>> = (0..joint.n_objects()).map(|x| joint.conditional(ObjectId(x))).collect();
    ScoreTable::from_fn(joint.n_objects(), joint.n_labels(), |x, y| {
        let f = rows[x].iter().cloned().reduce(T::max_of).expect("labels");
        if f <= half {
            T::zero()
        } else if rows[x][y] == f {
            f
        } else {
            -f
        }
    })
}

/// `a` refines `b`: b(z1) < b(z2) implies a(z1) < a(z2) for all pairs.
pub fn is_refinement(a: &WeakOrder, b: &WeakOrder) -> bool {
    let (ra, rb) = (a.ranks(), b.ranks());
    assert_eq!(ra.len(), rb.len(), "orders of different shapes");
    (0..ra.len()).all(|i| (0..ra.len()).all(|j| rb[i] >= rb[j] || ra[i] < ra[j]))
}

/// Per-class refinement: only pairs sharing a label are constrained.
pub fn is_label_conditional_refinement(a: &WeakOrder, b: &WeakOrder) -> bool {
    assert_eq!(a.n_cells(), b.n_cells(), "orders of different shapes");
    let (nx, ny) = (a.n_objects(), a.n_labels());
    (0..ny).all(|y| {
        (0..nx).all(|x1| (0..nx).all(|x2| b.rank(x1, y) >= b.rank(x2, y) || a.rank(x1, y) < a.rank(x2, y)))
    })
}

/// Membership in R(MCP): `a` refines some MCP measure.
pub fn in_r_mcp<T: Scalar>(a: &WeakOrder, joint: &FiniteJoint<T>) -> bool {
    mcp_measures(joint).iter().any(|b| is_refinement(a, &b.order_of()))
}

/// Membership in R(CP).
pub fn in_r_cp<T: Scalar>(a: &WeakOrder, joint: &FiniteJoint<T>) -> bool {
    is_refinement(a, &cp_measure(joint).order_of())
}

/// Membership in R_lc(CP).
pub fn in_r_lc_cp<T: Scalar>(a: &WeakOrder, joint: &FiniteJoint<T>) -> bool {
    is_label_conditional_refinement(a, &cp_measure(joint).order_of())
}

/// Membership in R′(SP): some SP measure B is refined by `a`, and labels
/// that B ties within an object are tied by `a` too.
pub fn in_r_prime_sp<T: Scalar>(a: &WeakOrder, joint: &FiniteJoint<T>) -> bool {
    let (nx, ny) = (joint.n_objects(), joint.n_labels());
    sp_measures(joint).iter().any(|sp| {
        let b = sp.order_of();
        is_refinement(a, &b)
            && (0..nx).all(|x| {
                (0..ny).all(|y1| (0..ny).all(|y2| b.rank(x, y1) != b.rank(x, y2) || a.rank(x, y1) == a.rank(x, y2)))
            })
    })
}

/// Membership in R″(MSP): `a` refines MSP, ties all sub-1/2 labels of
/// objects with f(x) ≥ 1/2, and ties every label of objects with f(x) < 1/2.
pub fn in_r_doubleprime_msp<T: Scalar>(a: &WeakOrder, joint: &FiniteJoint<T>) -> bool {
    if !is_refinement(a, &msp_measure(joint).order_of()) {
        return false;
    }
    let half = T::half();
    (0..joint.n_objects()).all(|x| {
        let row = joint.conditional(ObjectId(x));
        let f = joint.predictability(ObjectId(x));
        let tied = |y1: usize, y2: usize| a.rank(x, y1) == a.rank(x, y2);
        let n = row.len();
        (0..n).all(|y1| {
            (0..n).all(|y2| {
                let low_pair = f >= half && row[y1] < half && row[y2] < half;
                let flat = f < half;
                !(low_pair || flat) || tied(y1, y2)
            })
        })
    })
}

/// R″(MSP) tightened at objects with f(x) = 1/2: there, a label of
/// probability 1/2 must be at least as conforming as every label below 1/2.
/// This is the class that the OU and OM optimal sets actually coincide
/// with; the plain class also admits orders that put the majority label
/// under the rest, which are strictly worse.
pub fn in_r_doubleprime_msp_tight<T: Scalar>(a: &WeakOrder, joint: &FiniteJoint<T>) -> bool {
    if !in_r_doubleprime_msp(a, joint) {
        return false;
    }
    let half = T::half();
    (0..joint.n_objects()).all(|x| {
        if joint.predictability(ObjectId(x)) != half {
            return true;
        }
        let row = joint.conditional(ObjectId(x));
        let n = row.len();
        (0..n)
            .filter(|&h| row[h] == half)
            .all(|h| (0..n).filter(|&y| row[y] < half).all(|y| a.rank(x, h) >= a.rank(x, y)))
    })
}
