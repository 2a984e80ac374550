//! Brute-force verification: enumerate every conformity order on a small
//! example space, compute exact optimal sets and compare them with the sets
//! predicted by the optimal constructions.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::criteria::{evaluate_unchecked, CriterionId};
use crate::domain::{CriterionValue, Direction, FiniteJoint, ObjectId, WeakOrder};
use crate::error::{Error, Result};
use crate::idealized::{
    cp_measure, in_r_cp, in_r_doubleprime_msp, in_r_doubleprime_msp_tight, in_r_lc_cp, in_r_mcp, in_r_prime_sp, is_refinement, mcp_measures,
    msp_measure, sp_measures, IdealizedTransducer, Mode,
};
use crate::numeric::{Rational, Scalar};

/// Largest example space enumerated by default.
pub const DEFAULT_CAP: usize = 7;

/// Every weak order on `n_objects × n_labels` cells, each exactly once.
pub fn enumerate_weak_orders(n_objects: usize, n_labels: usize, cap: usize) -> Result<Vec<WeakOrder>> {
    let n = n_objects * n_labels;
    if n > cap {
        return Err(Error::CapExceeded { size: n, cap });
    }
    if n == 0 {
        return Ok(vec![WeakOrder::from_dense(n_objects, n_labels, Vec::new())]);
    }
    let mut out = Vec::new();
    for k in 1..=n as u32 {
        let mut digits = vec![0u32; n];
        let mut hits = vec![0usize; k as usize];
        hits[0] = n;
        loop {
            if hits.iter().all(|&h| h > 0) {
                out.push(WeakOrder::from_dense(n_objects, n_labels, digits.clone()));
            }
            let mut i = 0;
            loop {
                if i == n {
                    break;
                }
                hits[digits[i] as usize] -= 1;
                digits[i] += 1;
                if digits[i] == k {
                    digits[i] = 0;
                    hits[0] += 1;
                    i += 1;
                } else {
                    hits[digits[i] as usize] += 1;
                    break;
                }
            }
            if i == n {
                break;
            }
        }
    }
    Ok(out)
}

/// Random weak orders obtained by compressing uniform random ranks.
pub fn sample_weak_orders(n_objects: usize, n_labels: usize, count: usize, seed: u64) -> Vec<WeakOrder> {
    let n = n_objects * n_labels;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let ranks: Vec<u32> = (0..n).map(|_| rng.random_range(0..n as u32)).collect();
            WeakOrder::from_ranks(n_objects, n_labels, &ranks).expect("shape")
        })
        .collect()
}

/// How an ε-dependent criterion is quantified.
#[derive(Debug, Clone, PartialEq)]
pub enum EpsilonPolicy {
    ForAll,
    Fixed(Rational),
}

/// What "optimal" means: a criterion, a p-value mode and an ε policy.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalitySpec {
    pub criterion: CriterionId,
    pub mode: Mode,
    pub epsilon_policy: EpsilonPolicy,
}

impl OptimalitySpec {
    pub fn new(criterion: CriterionId, mode: Mode) -> Self {
        OptimalitySpec { criterion, mode, epsilon_policy: EpsilonPolicy::ForAll }
    }

    pub fn at(mut self, epsilon: Rational) -> Self {
        self.epsilon_policy = EpsilonPolicy::Fixed(epsilon);
        self
    }
}

struct Candidate {
    exact: IdealizedTransducer<Rational>,
    approx: IdealizedTransducer<f64>,
}

fn build_candidates(joint: &FiniteJoint<Rational>, orders: &[WeakOrder], mode: Mode) -> Result<Vec<Candidate>> {
    let exact_joint = Arc::new(joint.clone());
    let approx_joint = Arc::new(joint.to_f64());
    orders
        .par_iter()
        .map(|o| {
            Ok(Candidate {
                exact: IdealizedTransducer::new(exact_joint.clone(), o.clone(), mode)?,
                approx: IdealizedTransducer::new(approx_joint.clone(), o.clone(), mode)?,
            })
        })
        .collect()
}

/// Sorted values in (0,1) where some criterion curve of some transducer
/// can change slope or jump: every a and a+b, and the common value of two
/// p-values of one object where they cross inside (0,1).
fn breakpoints(transducers: &[&IdealizedTransducer<Rational>]) -> Vec<Rational> {
    let zero = zero();
    let one = Rational::from_integer(1);
    let mut out: Vec<Rational> = transducers
        .par_iter()
        .map(|t| {
            let mut local = Vec::new();
            let ny = t.joint().n_labels();
            for x in 0..t.joint().n_objects() {
                let row = t.row(ObjectId(x));
                for p in row {
                    local.push(p.intercept.clone());
                    local.push(p.intercept.clone() + p.slope.clone());
                }
                for i in 0..ny {
                    for j in i + 1..ny {
                        let ds = row[i].slope.clone() - row[j].slope.clone();
                        if ds.is_zero() {
                            continue;
                        }
                        let tau = (row[j].intercept.clone() - row[i].intercept.clone()) / ds;
                        if tau > zero && tau < one {
                            local.push(row[i].at(&tau));
                        }
                    }
                }
            }
            local.retain(|v| *v > zero && *v < one);
            local.sort();
            local.dedup();
            local
        })
        .flatten()
        .collect();
    out.sort();
    out.dedup();
    out
}

/// The finite ε grid deciding "for every ε" comparisons: all breakpoints of
/// the orders' p-values in (0,1) plus the midpoint of each consecutive pair
/// (with 0 and 1 as sentinels).
pub fn epsilon_test_grid(joint: &FiniteJoint<Rational>, orders: &[WeakOrder], mode: Mode) -> Result<Vec<Rational>> {
    let cands = build_candidates(joint, orders, mode)?;
    let ts: Vec<&IdealizedTransducer<Rational>> = cands.iter().map(|c| &c.exact).collect();
    let bps = breakpoints(&ts);
    let mut grid = bps.clone();
    let mut knots = vec![zero()];
    knots.extend(bps);
    knots.push(Rational::from_integer(1));
    for w in knots.windows(2) {
        grid.push((w[0].clone() + w[1].clone()) * Rational::new(1, 2));
    }
    grid.sort();
    Ok(grid)
}

fn zero() -> Rational {
    <Rational as Scalar>::zero()
}

const PREFILTER_TOL: f64 = 1e-9;

/// A place where all criterion curves are compared.
#[derive(Clone)]
enum Probe {
    /// ε-free criterion.
    Free,
    /// The curve value at ε.
    At(Rational),
    /// The left limit at the right end of an interval on which every curve
    /// is affine, obtained from the values at the left end and midpoint.
    LeftLimit { left: Rational, mid: Rational },
}

impl Probe {
    fn eval_f64(&self, c: &Candidate, crit: &CriterionId) -> CriterionValue<f64> {
        match self {
            Probe::Free => evaluate_unchecked(&c.approx, crit, None),
            Probe::At(e) => evaluate_unchecked(&c.approx, crit, Some(&e.to_f64())),
            Probe::LeftLimit { left, mid } => {
                let l = evaluate_unchecked(&c.approx, crit, Some(&left.to_f64()));
                let m = evaluate_unchecked(&c.approx, crit, Some(&mid.to_f64()));
                extrapolate(&l, &m)
            }
        }
    }

    fn eval_exact(&self, c: &Candidate, crit: &CriterionId) -> CriterionValue<Rational> {
        match self {
            Probe::Free => evaluate_unchecked(&c.exact, crit, None),
            Probe::At(e) => evaluate_unchecked(&c.exact, crit, Some(e)),
            Probe::LeftLimit { left, mid } => {
                let l = evaluate_unchecked(&c.exact, crit, Some(left));
                let m = evaluate_unchecked(&c.exact, crit, Some(mid));
                extrapolate(&l, &m)
            }
        }
    }
}

fn extrapolate<T: Scalar>(l: &CriterionValue<T>, m: &CriterionValue<T>) -> CriterionValue<T> {
    let two = T::from_usize(2);
    CriterionValue {
        primary: two.clone() * m.primary.clone() - l.primary.clone(),
        secondary: match (&l.secondary, &m.secondary) {
            (Some(a), Some(b)) => Some(two * b.clone() - a.clone()),
            _ => None,
        },
        primary_dir: l.primary_dir,
        secondary_dir: l.secondary_dir,
    }
}

/// Indices attaining the exact minimum primary at `probe`, with their
/// exact values.
fn minimisers(
    cands: &[Candidate],
    crit: &CriterionId,
    probe: &Probe,
) -> Vec<(usize, CriterionValue<Rational>)> {
    let approx: Vec<f64> = cands.par_iter().map(|c| probe.eval_f64(c, crit).primary).collect();
    let fmin = approx.iter().cloned().fold(f64::INFINITY, f64::min);
    let near: Vec<usize> = (0..cands.len()).filter(|&i| approx[i] <= fmin + PREFILTER_TOL).collect();
    let exact: Vec<(usize, CriterionValue<Rational>)> =
        near.par_iter().map(|&i| (i, probe.eval_exact(&cands[i], crit))).collect();
    let min = exact.iter().map(|(_, v)| v.primary.clone()).min().expect("non-empty");
    exact.into_iter().filter(|(_, v)| v.primary == min).collect()
}

fn best_secondary(values: &[&CriterionValue<Rational>]) -> Option<Rational> {
    let first = values.first()?;
    let secs = values.iter().filter_map(|v| v.secondary.clone());
    match first.secondary_dir {
        Direction::SmallerIsBetter => secs.min(),
        Direction::LargerIsBetter => secs.max(),
    }
}

fn has_best_secondary(v: &CriterionValue<Rational>, best: &Option<Rational>) -> bool {
    match (&v.secondary, best) {
        (Some(s), Some(b)) => s == b,
        _ => true,
    }
}

/// Marks candidates optimal at a single probe: minimum primary, and best
/// secondary among the minimisers. Returns the minimisers.
fn point_check(cands: &[Candidate], crit: &CriterionId, probe: &Probe, alive: &mut [bool]) -> Vec<usize> {
    let mins = minimisers(cands, crit, probe);
    let vals: Vec<&CriterionValue<Rational>> = mins.iter().map(|(_, v)| v).collect();
    let best = best_secondary(&vals);
    let ok: Vec<usize> = mins.iter().filter(|(_, v)| has_best_secondary(v, &best)).map(|(i, _)| *i).collect();
    mark(alive, &ok);
    mins.into_iter().map(|(i, _)| i).collect()
}

fn mark(alive: &mut [bool], ok: &[usize]) {
    let mut keep = vec![false; alive.len()];
    for &i in ok {
        keep[i] = true;
    }
    for (a, k) in alive.iter_mut().zip(keep) {
        *a &= k;
    }
}

/// Marks candidates optimal on every ε of `[left, right)`, where all curves
/// are affine.
fn interval_check(cands: &[Candidate], crit: &CriterionId, left: &Rational, right: &Rational, alive: &mut [bool]) {
    let left_min = point_check(cands, crit, &Probe::At(left.clone()), alive);
    if !alive.iter().any(|a| *a) {
        return;
    }
    let mid = (left.clone() + right.clone()) * Rational::new(1, 2);
    let limit = Probe::LeftLimit { left: left.clone(), mid };
    let tied: Vec<(usize, CriterionValue<Rational>)> =
        minimisers(cands, crit, &limit).into_iter().filter(|(i, _)| left_min.contains(i)).collect();
    let vals: Vec<&CriterionValue<Rational>> = tied.iter().map(|(_, v)| v).collect();
    let best = best_secondary(&vals);
    let ok: Vec<usize> = tied.iter().filter(|(_, v)| has_best_secondary(v, &best)).map(|(i, _)| *i).collect();
    mark(alive, &ok);
}

/// Equivalence key: orders with the same key have identical p-values.
fn order_key(order: &WeakOrder, mode: Mode) -> Vec<u32> {
    match mode {
        Mode::Unconditional => order.ranks().to_vec(),
        Mode::LabelConditional => order.within_class_key(),
    }
}

/// The members of `orders` that are optimal relative to all of `orders`.
pub fn optimal_set_among(
    joint: &FiniteJoint<Rational>,
    spec: &OptimalitySpec,
    orders: &[WeakOrder],
) -> Result<Vec<WeakOrder>> {
    if orders.is_empty() {
        return Ok(Vec::new());
    }
    let crit = &spec.criterion;
    if crit.needs_two_labels() && joint.n_labels() < 2 {
        return Err(Error::TooFewLabels { criterion: crit.name(), labels: joint.n_labels() });
    }
    let mut groups: HashMap<Vec<u32>, usize> = HashMap::new();
    let mut reps: Vec<WeakOrder> = Vec::new();
    let group_of: Vec<usize> = orders
        .iter()
        .map(|o| {
            *groups.entry(order_key(o, spec.mode)).or_insert_with(|| {
                reps.push(o.clone());
                reps.len() - 1
            })
        })
        .collect();
    let cands = build_candidates(joint, &reps, spec.mode)?;
    let mut alive = vec![true; cands.len()];

    if !crit.needs_epsilon() {
        point_check(&cands, crit, &Probe::Free, &mut alive);
    } else {
        match &spec.epsilon_policy {
            EpsilonPolicy::Fixed(e) => {
                if *e <= zero() || *e >= Rational::from_integer(1) {
                    return Err(Error::InvalidEpsilon(e.to_string()));
                }
                point_check(&cands, crit, &Probe::At(e.clone()), &mut alive);
            }
            EpsilonPolicy::ForAll => {
                let ts: Vec<&IdealizedTransducer<Rational>> = cands.iter().map(|c| &c.exact).collect();
                let mut knots = vec![zero()];
                knots.extend(breakpoints(&ts));
                knots.push(Rational::from_integer(1));
                for w in knots.windows(2) {
                    interval_check(&cands, crit, &w[0], &w[1], &mut alive);
                    if !alive.iter().any(|a| *a) {
                        break;
                    }
                }
            }
        }
    }
    let mut out: Vec<WeakOrder> =
        orders.iter().zip(&group_of).filter(|(_, g)| alive[**g]).map(|(o, _)| o.clone()).collect();
    out.sort();
    Ok(out)
}

/// The exact optimal set over all weak orders on the example space.
pub fn optimal_set(joint: &FiniteJoint<Rational>, spec: &OptimalitySpec, cap: usize) -> Result<Vec<WeakOrder>> {
    let orders = enumerate_weak_orders(joint.n_objects(), joint.n_labels(), cap)?;
    optimal_set_among(joint, spec, &orders)
}

/// One checked statement inside a report.
#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub label: String,
    pub pass: bool,
    pub detail: String,
    pub computed: Vec<WeakOrder>,
    pub expected: Vec<WeakOrder>,
}

/// The outcome of a theorem or counterexample check.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub id: String,
    pub joint: FiniteJoint<Rational>,
    pub findings: Vec<Finding>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.findings.iter().all(|f| f.pass)
    }

    /// One `theorem,Q-file,status,detail` line per finding.
    pub fn lines(&self, source: &str) -> Vec<String> {
        self.findings
            .iter()
            .map(|f| {
                format!(
                    "{},{},{},{}: {}",
                    self.id,
                    source,
                    if f.pass { "pass" } else { "fail" },
                    f.label,
                    f.detail.replace(',', ";")
                )
            })
            .collect()
    }
}

fn describe(order: &WeakOrder) -> String {
    let mut s = String::from("[");
    for (i, r) in order.ranks().iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{r}");
    }
    s.push(']');
    s
}

fn set_finding(label: String, computed: Vec<WeakOrder>, expected: Vec<WeakOrder>) -> Finding {
    let missing: Vec<&WeakOrder> = expected.iter().filter(|o| computed.binary_search(o).is_err()).collect();
    let extra: Vec<&WeakOrder> = computed.iter().filter(|o| expected.binary_search(o).is_err()).collect();
    let pass = missing.is_empty() && extra.is_empty();
    let mut detail = format!("{} optimal orders, {} predicted", computed.len(), expected.len());
    if !pass {
        let show = |v: &[&WeakOrder]| v.iter().take(3).map(|o| describe(o)).collect::<Vec<_>>().join(" ");
        let _ = write!(detail, "; unexpected {} e.g. {}; missing {} e.g. {}", extra.len(), show(&extra), missing.len(), show(&missing));
    }
    Finding { label, pass, detail, computed, expected }
}

/// True when Q(1|x) differs across objects (binary labels).
pub fn has_distinct_binary_conditionals(joint: &FiniteJoint<Rational>) -> bool {
    let mut seen: Vec<Rational> = (0..joint.n_objects()).map(|x| joint.conditional(ObjectId(x))[1].clone()).collect();
    seen.sort();
    let before = seen.len();
    seen.dedup();
    before == seen.len()
}

/// Checks one of the six optimality theorems on `joint` by exhaustive
/// enumeration (theorem 1: S, OF, N, OE and refinements of CP; 2: U, M and
/// R′(SP); 3: F, E and refinements of MCP; 4: OU, OM and R″(MSP);
/// 5: the label-conditional version of 1; 6: binary label-conditional
/// optimal sets contain a refinement of CP).
pub fn verify_theorem(joint: &FiniteJoint<Rational>, theorem: u8, cap: usize) -> Result<VerificationReport> {
    use CriterionId as C;
    let orders = enumerate_weak_orders(joint.n_objects(), joint.n_labels(), cap)?;
    type Predicate<'a> = Box<dyn Fn(&WeakOrder) -> bool + Sync + 'a>;
    let (mode, criteria, predicate): (Mode, Vec<C>, Predicate) = match theorem {
        1 => (Mode::Unconditional, vec![C::S, C::OF, C::N, C::OE], Box::new(|o| in_r_cp(o, joint))),
        2 => (Mode::Unconditional, vec![C::U, C::M], Box::new(|o| in_r_prime_sp(o, joint))),
        3 => (Mode::Unconditional, vec![C::F, C::E], Box::new(|o| in_r_mcp(o, joint))),
        4 => (Mode::Unconditional, vec![C::OU, C::OM], Box::new(|o| in_r_doubleprime_msp(o, joint))),
        5 => {
            joint.validate_label_conditional()?;
            (Mode::LabelConditional, vec![C::S, C::OF, C::N, C::OE], Box::new(|o| in_r_lc_cp(o, joint)))
        }
        6 => {
            if joint.n_labels() != 2 {
                return Err(Error::PreconditionViolated(format!("needs 2 labels, got {}", joint.n_labels())));
            }
            if !has_distinct_binary_conditionals(joint) {
                return Err(Error::PreconditionViolated("Q(1|x) must differ across objects".into()));
            }
            joint.validate_label_conditional()?;
            let cp = cp_measure(joint).order_of();
            (Mode::LabelConditional, vec![C::U, C::M, C::F, C::E, C::OU, C::OM], Box::new(move |o| is_refinement(o, &cp)))
        }
        other => return Err(Error::InvalidParameter(format!("no theorem {other}"))),
    };
    let predicted: Vec<WeakOrder> = orders.par_iter().filter(|o| predicate(o)).cloned().collect();
    let mut predicted = predicted;
    predicted.sort();
    let mut findings = Vec::new();
    for c in criteria {
        let computed = optimal_set_among(joint, &OptimalitySpec::new(c.clone(), mode), &orders)?;
        let label = format!("O({c})");
        if theorem == 6 {
            let witnesses: Vec<WeakOrder> = computed.iter().filter(|o| predicate(o)).cloned().collect();
            let lc_class: Vec<WeakOrder> = orders.iter().filter(|o| in_r_lc_cp(o, joint)).cloned().collect();
            let mut lc_class = lc_class;
            lc_class.sort();
            let pass = !witnesses.is_empty();
            let detail = format!(
                "{} optimal orders, {} refine CP, equals R_lc(CP): {}",
                computed.len(),
                witnesses.len(),
                if computed == lc_class { "yes" } else { "no" }
            );
            findings.push(Finding { label, pass, detail, computed, expected: witnesses });
        } else {
            if theorem == 4 {
                let mut tight: Vec<WeakOrder> =
                    predicted.iter().filter(|o| in_r_doubleprime_msp_tight(o, joint)).cloned().collect();
                tight.sort();
                findings.push(set_finding(format!("O({c}) tight"), computed.clone(), tight));
            }
            findings.push(set_finding(label, computed, predicted.clone()));
        }
    }
    Ok(VerificationReport { id: format!("theorem-{theorem}"), joint: joint.clone(), findings })
}

/// Checks that Prob(|Γ| > 1)·Prob(|Γ| = 0) vanishes at every grid ε.
pub fn check_corollary_1(joint: &FiniteJoint<Rational>, order: &WeakOrder) -> Result<bool> {
    let grid = epsilon_test_grid(joint, std::slice::from_ref(order), Mode::Unconditional)?;
    let t = IdealizedTransducer::new(Arc::new(joint.clone()), order.clone(), Mode::Unconditional)?;
    Ok(grid.iter().all(|e| {
        let v = evaluate_unchecked(&t, &CriterionId::M, Some(e));
        (v.primary * v.secondary.expect("M has a secondary")).is_zero()
    }))
}

fn q(n: i128, d: i128) -> Rational {
    Rational::new(n, d)
}

/// One object, three labels with Q(·|1) = (0.2, 0.3, 0.5).
pub fn example_single_object() -> FiniteJoint<Rational> {
    FiniteJoint::new(1, 3, vec![q(1, 5), q(3, 10), q(1, 2)]).expect("valid")
}

/// Two equiprobable objects, three labels, rows (1/3−δ, 1/3, 1/3+δ) and
/// (1/3−5δ, 1/3+2δ, 1/3+3δ).
pub fn example_two_object_delta(delta: &Rational) -> Result<FiniteJoint<Rational>> {
    let third = q(1, 3);
    let d = |k: i128| q(k, 1) * delta.clone();
    FiniteJoint::from_conditionals(
        vec![q(1, 2), q(1, 2)],
        vec![
            vec![third.clone() - d(1), third.clone(), third.clone() + d(1)],
            vec![third.clone() - d(5), third.clone() + d(2), third + d(3)],
        ],
    )
}

/// Two equiprobable objects, four labels, rows (0.2, 0.3, 0.2, 0.3) and
/// (0.3, 0.2, 0.3, 0.2).
pub fn example_lc_four_label() -> FiniteJoint<Rational> {
    FiniteJoint::from_conditionals(
        vec![q(1, 2), q(1, 2)],
        vec![vec![q(1, 5), q(3, 10), q(1, 5), q(3, 10)], vec![q(3, 10), q(1, 5), q(3, 10), q(1, 5)]],
    )
    .expect("valid")
}

/// Three equiprobable objects, three labels, rows (1/3+δ, 1/3−2δ, 1/3+δ),
/// (1/3−δ, 1/3+2δ, 1/3−δ) and the uniform row.
pub fn example_lc_delta(delta: &Rational) -> Result<FiniteJoint<Rational>> {
    let third = q(1, 3);
    let d = |k: i128| q(k, 1) * delta.clone();
    FiniteJoint::from_conditionals(
        vec![q(1, 3), q(1, 3), q(1, 3)],
        vec![
            vec![third.clone() + d(1), third.clone() - d(2), third.clone() + d(1)],
            vec![third.clone() - d(1), third.clone() + d(2), third.clone() - d(1)],
            vec![third.clone(), third.clone(), third],
        ],
    )
}

/// Identifiers accepted by [`verify_counterexample`].
pub const COUNTEREXAMPLE_IDS: [&str; 6] = ["u-m", "f-e", "ou-om", "lc-u-m", "lc-f-e", "lc-ou-om"];

/// Default δ for the δ-parameterised examples.
pub fn default_delta() -> Rational {
    q(1, 1000)
}

struct Quoted {
    label: &'static str,
    value: Rational,
    target: Rational,
    tolerance: Rational,
}

fn quoted_finding(c: &Quoted) -> Finding {
    let err = (c.value.clone() - c.target.clone()).abs_val();
    let pass = err <= c.tolerance;
    let detail = if c.tolerance.is_zero() {
        format!("computed {} expected {}", c.value, c.target)
    } else {
        format!("computed {} (~{:.6}) expected {} within {}", c.value, c.value.to_f64(), c.target, c.tolerance)
    };
    Finding { label: c.label.to_string(), pass, detail, computed: Vec::new(), expected: Vec::new() }
}

fn strict_finding(label: &str, better: &Rational, worse: &Rational) -> Finding {
    Finding {
        label: label.to_string(),
        pass: better < worse,
        detail: format!("{better} < {worse}"),
        computed: Vec::new(),
        expected: Vec::new(),
    }
}

fn value(
    joint: &Arc<FiniteJoint<Rational>>,
    order: &WeakOrder,
    mode: Mode,
    criterion: CriterionId,
    epsilon: Option<Rational>,
) -> Result<Rational> {
    let t = IdealizedTransducer::new(joint.clone(), order.clone(), mode)?;
    Ok(crate::criteria::evaluate_idealized(&t, &criterion, epsilon.as_ref())?.primary)
}

/// The object-separating measure: every example of object 1 below every
/// example of object 2.
pub fn object_separating_order(n_objects: usize, n_labels: usize) -> WeakOrder {
    let ranks: Vec<u32> = (0..n_objects * n_labels).map(|c| (c / n_labels) as u32).collect();
    WeakOrder::from_ranks(n_objects, n_labels, &ranks).expect("shape")
}

/// The measure that is CP with the uniform object's last label promoted to
/// the top: (1,2) < (2,1) = (2,3) < (3,1) = (3,2) < (1,1) = (1,3) < (2,2) < (3,3).
pub fn promoted_order() -> WeakOrder {
    WeakOrder::from_ranks(3, 3, &[3, 0, 3, 1, 4, 1, 2, 2, 5]).expect("shape")
}

/// Recomputes every value quoted for a counterexample and checks the
/// quoted strict inequality. δ-dependent targets are checked to within 50δ.
pub fn verify_counterexample(id: &str, delta: Option<&Rational>) -> Result<VerificationReport> {
    use CriterionId as C;
    let delta = delta.cloned().unwrap_or_else(default_delta);
    let tol = q(50, 1) * delta.clone();
    let zero = zero();
    let u = Mode::Unconditional;
    let lc = Mode::LabelConditional;
    let quoted = |label, value, target, tolerance| Quoted { label, value, target, tolerance };
    let (joint, findings) = match id {
        "u-m" => {
            let joint = Arc::new(example_single_object());
            let cp = cp_measure(&joint).order_of();
            let sp = sp_measures(&joint)[0].order_of();
            let e = Some(q(1, 5));
            let vals = [
                quoted("U(CP)", value(&joint, &cp, u, C::U, None)?, q(7, 20), zero.clone()),
                quoted("U(SP)", value(&joint, &sp, u, C::U, None)?, q(1, 4), zero.clone()),
                quoted("M(CP) at 1/5", value(&joint, &cp, u, C::M, e.clone())?, q(1, 1), zero.clone()),
                quoted("M(SP) at 1/5", value(&joint, &sp, u, C::M, e)?, q(3, 5), zero.clone()),
            ];
            (joint, comparisons(&vals, &[(1, 0), (3, 2)]))
        }
        "f-e" => {
            let joint = Arc::new(example_two_object_delta(&delta)?);
            let cp = cp_measure(&joint).order_of();
            let mcp = mcp_measures(&joint);
            if mcp.len() != 1 {
                return Err(Error::PreconditionViolated("δ too large: MCP is not unique".into()));
            }
            let mcp = mcp[0].order_of();
            let e = Some(q(2, 3));
            let vals = [
                quoted("F(CP)", value(&joint, &cp, u, C::F, None)?, q(3, 4), tol.clone()),
                quoted("F(MCP)", value(&joint, &mcp, u, C::F, None)?, q(2, 3), tol.clone()),
                quoted("E(CP) at 2/3", value(&joint, &cp, u, C::E, e.clone())?, q(1, 2), tol.clone()),
                quoted("E(MCP) at 2/3", value(&joint, &mcp, u, C::E, e)?, zero.clone(), zero.clone()),
            ];
            (joint, comparisons(&vals, &[(1, 0), (3, 2)]))
        }
        "ou-om" => {
            let joint = Arc::new(example_single_object());
            let cp = cp_measure(&joint).order_of();
            let msp = msp_measure(&joint).order_of();
            let e = Some(q(1, 5));
            let vals = [
                quoted("OU(CP)", value(&joint, &cp, u, C::OU, None)?, q(11, 20), zero.clone()),
                quoted("OU(MSP)", value(&joint, &msp, u, C::OU, None)?, q(1, 2), zero.clone()),
                quoted("OM(CP) at 1/5", value(&joint, &cp, u, C::OM, e.clone())?, q(1, 1), zero.clone()),
                quoted("OM(MSP) at 1/5", value(&joint, &msp, u, C::OM, e)?, q(4, 5), zero.clone()),
            ];
            (joint, comparisons(&vals, &[(1, 0), (3, 2)]))
        }
        "lc-u-m" | "lc-ou-om" => {
            let joint = Arc::new(example_lc_four_label());
            let cp = cp_measure(&joint).order_of();
            let a = object_separating_order(2, 4);
            let e = Some(q(2, 5));
            let (c1, c2, l) = if id == "lc-u-m" {
                (C::U, C::M, ["U(CP)", "U(A)", "M(CP) at 2/5", "M(A) at 2/5"])
            } else {
                (C::OU, C::OM, ["OU(CP)", "OU(A)", "OM(CP) at 2/5", "OM(A) at 2/5"])
            };
            let vals = [
                quoted(l[0], value(&joint, &cp, lc, c1.clone(), None)?, q(7, 10), zero.clone()),
                quoted(l[1], value(&joint, &a, lc, c1.clone(), None)?, q(11, 20), zero.clone()),
                quoted(l[2], value(&joint, &cp, lc, c2.clone(), e.clone())?, q(1, 1), zero.clone()),
                quoted(l[3], value(&joint, &a, lc, c2, e)?, q(2, 3), zero.clone()),
            ];
            let mut findings = comparisons(&vals, &[(1, 0), (3, 2)]);
            findings.push(sampled_finding(&joint, &c1, &cp, &a));
            (joint, findings)
        }
        "lc-f-e" => {
            let joint = Arc::new(example_lc_delta(&delta)?);
            let cp = cp_measure(&joint).order_of();
            let a = promoted_order();
            let e = Some(q(2, 3));
            let vals = [
                quoted("F(CP)", value(&joint, &cp, lc, C::F, None)?, q(7, 9), tol.clone()),
                quoted("F(A)", value(&joint, &a, lc, C::F, None)?, q(2, 3), tol.clone()),
                quoted("E(CP) at 2/3", value(&joint, &cp, lc, C::E, e.clone())?, q(1, 3), tol.clone()),
                quoted("E(A) at 2/3", value(&joint, &a, lc, C::E, e)?, zero.clone(), tol.clone()),
            ];
            (joint, comparisons(&vals, &[(1, 0), (3, 2)]))
        }
        other => return Err(Error::UnknownExampleId(other.to_string())),
    };
    Ok(VerificationReport { id: id.to_string(), joint: (*joint).clone(), findings })
}

fn comparisons(vals: &[Quoted], strict: &[(usize, usize)]) -> Vec<Finding> {
    let mut out: Vec<Finding> = vals.iter().map(quoted_finding).collect();
    for &(b, w) in strict {
        let label = format!("{} < {}", vals[b].label, vals[w].label);
        let mut f = strict_finding(&label, &vals[b].value, &vals[w].value);
        f.label = label;
        out.push(f);
    }
    out
}

/// Sampled check beyond the exhaustive cap: among CP, the alternative and
/// random orders, CP is never optimal.
fn sampled_finding(joint: &FiniteJoint<Rational>, criterion: &CriterionId, cp: &WeakOrder, alt: &WeakOrder) -> Finding {
    let mut orders = sample_weak_orders(joint.n_objects(), joint.n_labels(), 2000, 0);
    orders.push(cp.clone());
    orders.push(alt.clone());
    let spec = OptimalitySpec::new(criterion.clone(), Mode::LabelConditional);
    match optimal_set_among(joint, &spec, &orders) {
        Ok(best) => {
            let cp_optimal = best.iter().any(|o| o.within_class_key() == cp.within_class_key());
            Finding {
                label: format!("sampled O({criterion}) excludes CP"),
                pass: !cp_optimal,
                detail: format!("{} sampled orders, {} optimal among them", orders.len(), best.len()),
                computed: best,
                expected: Vec::new(),
            }
        }
        Err(e) => Finding {
            label: format!("sampled O({criterion})"),
            pass: false,
            detail: e.to_string(),
            computed: Vec::new(),
            expected: Vec::new(),
        },
    }
}

/// A random Q with entries proportional to integers in 1..=9.
pub fn random_joint<R: Rng>(n_objects: usize, n_labels: usize, rng: &mut R) -> FiniteJoint<Rational> {
    let weights: Vec<i128> = (0..n_objects * n_labels).map(|_| rng.random_range(1..=9)).collect();
    let total: i128 = weights.iter().sum();
    FiniteJoint::new(n_objects, n_labels, weights.iter().map(|&w| q(w, total)).collect()).expect("valid")
}

/// A random binary-label Q whose conditionals Q(1|x) are pairwise distinct.
pub fn random_binary_distinct<R: Rng>(n_objects: usize, rng: &mut R) -> FiniteJoint<Rational> {
    loop {
        let j = random_joint(n_objects, 2, rng);
        if has_distinct_binary_conditionals(&j) {
            return j;
        }
    }
}
