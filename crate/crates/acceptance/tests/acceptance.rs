//! One line per acceptance criterion; exits non-zero if any fails.

use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use conformal_efficiency::criteria::{evaluate_empirical, evaluate_idealized, evaluate_idealized_mc, CriterionId};
use conformal_efficiency::formats::parse_joint;
use conformal_efficiency::idealized::{
    cp_measure, in_r_doubleprime_msp, in_r_doubleprime_msp_tight, in_r_mcp, in_r_prime_sp, mcp_measures,
    IdealizedTransducer, Mode,
};
use conformal_efficiency::knn::{gaussian_blobs, FeatureVector, KnnConfig, KnnScorer, KnnVariant};
use conformal_efficiency::oracle::{
    enumerate_weak_orders, epsilon_test_grid, example_lc_delta, example_lc_four_label,
    example_two_object_delta, object_separating_order, optimal_set_among, promoted_order, random_binary_distinct,
    random_joint, sample_weak_orders, OptimalitySpec,
};
use conformal_efficiency::stats::{binomial_band, ks_uniform};
use conformal_efficiency::transducer::{
    p_value, p_value_label_conditional, predict_batch, BatchConfig, Example, FrequencyScorer,
};
use conformal_efficiency::{FiniteJoint, LabelId, ObjectId, Rational, Scalar, WeakOrder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn q(n: i128, d: i128) -> Rational {
    Rational::new(n, d)
}

fn zero() -> Rational {
    <Rational as Scalar>::zero()
}

fn fixture(name: &str) -> FiniteJoint<Rational> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(name);
    parse_joint(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn value(joint: &FiniteJoint<Rational>, order: &WeakOrder, mode: Mode, c: CriterionId, eps: Option<Rational>) -> Rational {
    let t = IdealizedTransducer::new(Arc::new(joint.clone()), order.clone(), mode).unwrap();
    evaluate_idealized(&t, &c, eps.as_ref()).unwrap().primary
}

fn abs(r: Rational) -> Rational {
    if r < zero() {
        zero() - r
    } else {
        r
    }
}

/// Collects `label=value` checks; a check passes when |value − target| ≤ tol.
#[derive(Default)]
struct Checks {
    failed: Vec<String>,
    count: usize,
}

impl Checks {
    fn near(&mut self, label: &str, got: Rational, target: Rational, tol: &Rational) {
        self.count += 1;
        if abs(got.clone() - target.clone()) > *tol {
            self.failed.push(format!("{label} = {got}, expected {target}"));
        }
    }

    fn holds(&mut self, label: &str, ok: bool) {
        self.count += 1;
        if !ok {
            self.failed.push(label.to_string());
        }
    }

    fn outcome(self) -> Outcome {
        let pass = self.failed.is_empty();
        let detail = if pass {
            format!("{} checks", self.count)
        } else {
            format!("{} of {} checks failed: {}", self.failed.len(), self.count, self.failed.join("; "))
        };
        Outcome { pass, detail }
    }
}

/// b(z1) < b(z2) implies a(z1) < a(z2), written out independently.
fn refines(a: &WeakOrder, b: &WeakOrder) -> bool {
    let (ra, rb) = (a.ranks(), b.ranks());
    for i in 0..ra.len() {
        for j in 0..ra.len() {
            if rb[i] < rb[j] && ra[i] >= ra[j] {
                return false;
            }
        }
    }
    true
}

/// The same, only for pairs sharing a label.
fn refines_within_labels(a: &WeakOrder, b: &WeakOrder) -> bool {
    let (nx, ny) = (a.n_objects(), a.n_labels());
    for y in 0..ny {
        for x1 in 0..nx {
            for x2 in 0..nx {
                if b.rank(x1, y) < b.rank(x2, y) && a.rank(x1, y) >= a.rank(x2, y) {
                    return false;
                }
            }
        }
    }
    true
}

fn show(order: &WeakOrder) -> String {
    format!("{:?}", order.ranks())
}

fn criterion_1() -> Outcome {
    let joint = fixture("u-m.csv");
    assert_eq!(joint, fixture("ou-om.csv"));
    let u = Mode::Unconditional;
    let cp = cp_measure(&joint).order_of();
    let sp = conformal_efficiency::idealized::sp_measures(&joint)[0].order_of();
    let msp = conformal_efficiency::idealized::msp_measure(&joint).order_of();
    let e = Some(q(1, 5));
    let mut c = Checks::default();
    let exact = zero();
    c.near("U(CP)", value(&joint, &cp, u, CriterionId::U, None), q(7, 20), &exact);
    c.near("U(SP)", value(&joint, &sp, u, CriterionId::U, None), q(1, 4), &exact);
    c.near("OU(CP)", value(&joint, &cp, u, CriterionId::OU, None), q(11, 20), &exact);
    c.near("OU(MSP)", value(&joint, &msp, u, CriterionId::OU, None), q(1, 2), &exact);
    c.near("M(CP) at 1/5", value(&joint, &cp, u, CriterionId::M, e.clone()), q(1, 1), &exact);
    c.near("M(SP) at 1/5", value(&joint, &sp, u, CriterionId::M, e.clone()), q(3, 5), &exact);
    c.near("OM(CP) at 1/5", value(&joint, &cp, u, CriterionId::OM, e.clone()), q(1, 1), &exact);
    c.near("OM(MSP) at 1/5", value(&joint, &msp, u, CriterionId::OM, e), q(4, 5), &exact);
    c.outcome()
}

fn criterion_2() -> Outcome {
    let delta = q(1, 1000);
    let joint = fixture("f-e.csv");
    assert_eq!(joint, example_two_object_delta(&delta).unwrap());
    let tol = delta * Rational::from_integer(50);
    let u = Mode::Unconditional;
    let cp = cp_measure(&joint).order_of();
    let mcp = mcp_measures(&joint);
    assert_eq!(mcp.len(), 1);
    let mcp = mcp[0].order_of();
    let e = Some(q(2, 3));
    let mut c = Checks::default();
    c.near("E(MCP) at 2/3", value(&joint, &mcp, u, CriterionId::E, e.clone()), zero(), &zero());
    c.near("E(CP) at 2/3", value(&joint, &cp, u, CriterionId::E, e), q(1, 2), &tol);
    c.near("F(CP)", value(&joint, &cp, u, CriterionId::F, None), q(3, 4), &tol);
    c.near("F(MCP)", value(&joint, &mcp, u, CriterionId::F, None), q(2, 3), &tol);
    c.outcome()
}

fn criterion_3() -> Outcome {
    let lc = Mode::LabelConditional;
    let joint = fixture("lc-u-m.csv");
    assert_eq!(joint, example_lc_four_label());
    assert_eq!(joint, fixture("lc-ou-om.csv"));
    let cp = cp_measure(&joint).order_of();
    let a = object_separating_order(2, 4);
    let e = Some(q(2, 5));
    let exact = zero();
    let mut c = Checks::default();
    c.near("U(CP)", value(&joint, &cp, lc, CriterionId::U, None), q(7, 10), &exact);
    c.near("U(A)", value(&joint, &a, lc, CriterionId::U, None), q(11, 20), &exact);
    c.near("M(CP) at 2/5", value(&joint, &cp, lc, CriterionId::M, e.clone()), q(1, 1), &exact);
    c.near("M(A) at 2/5", value(&joint, &a, lc, CriterionId::M, e.clone()), q(2, 3), &exact);
    c.near("OU(CP)", value(&joint, &cp, lc, CriterionId::OU, None), q(7, 10), &exact);
    c.near("OU(A)", value(&joint, &a, lc, CriterionId::OU, None), q(11, 20), &exact);
    c.near("OM(CP) at 2/5", value(&joint, &cp, lc, CriterionId::OM, e.clone()), q(1, 1), &exact);
    c.near("OM(A) at 2/5", value(&joint, &a, lc, CriterionId::OM, e), q(2, 3), &exact);

    let delta = q(1, 1000);
    let joint = fixture("lc-f-e.csv");
    assert_eq!(joint, example_lc_delta(&delta).unwrap());
    let tol = delta * Rational::from_integer(50);
    let cp = cp_measure(&joint).order_of();
    let a = promoted_order();
    let e = Some(q(2, 3));
    c.near("F(CP)", value(&joint, &cp, lc, CriterionId::F, None), q(7, 9), &tol);
    c.near("F(A)", value(&joint, &a, lc, CriterionId::F, None), q(2, 3), &tol);
    c.near("E(CP) at 2/3", value(&joint, &cp, lc, CriterionId::E, e.clone()), q(1, 3), &tol);
    c.near("E(A) at 2/3", value(&joint, &a, lc, CriterionId::E, e), zero(), &tol);
    c.outcome()
}

fn optimal(joint: &FiniteJoint<Rational>, c: CriterionId, mode: Mode, orders: &[WeakOrder]) -> Vec<WeakOrder> {
    optimal_set_among(joint, &OptimalitySpec::new(c, mode), orders).unwrap()
}

fn sorted(mut v: Vec<WeakOrder>) -> Vec<WeakOrder> {
    v.sort();
    v
}

const SMALL_SHAPES: [(usize, usize); 8] = [(1, 2), (1, 3), (2, 2), (1, 4), (2, 3), (3, 2), (1, 5), (1, 6)];

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut joints = vec![fixture("u-m.csv")];
    for i in 0..50 {
        let (nx, ny) = SMALL_SHAPES[i % SMALL_SHAPES.len()];
        joints.push(random_joint(nx, ny, &mut rng));
    }
    let mut c = Checks::default();
    for (i, joint) in joints.iter().enumerate() {
        let orders = enumerate_weak_orders(joint.n_objects(), joint.n_labels(), 6).unwrap();
        let cp = cp_measure(joint).order_of();
        let predicted = sorted(orders.iter().filter(|o| refines(o, &cp)).cloned().collect());
        for crit in [CriterionId::S, CriterionId::OF, CriterionId::N, CriterionId::OE] {
            let got = optimal(joint, crit.clone(), Mode::Unconditional, &orders);
            c.holds(&format!("Q#{i} O({crit}) = R(CP)"), got == predicted);
        }
    }
    let mut out = c.outcome();
    out.detail = format!("{} distributions, {}", joints.len(), out.detail);
    out
}

fn set_check(c: &mut Checks, label: &str, got: &[WeakOrder], predicted: &[WeakOrder]) {
    let missing: Vec<String> = predicted.iter().filter(|o| !got.contains(o)).map(show).collect();
    let extra: Vec<String> = got.iter().filter(|o| !predicted.contains(o)).map(show).collect();
    c.count += 1;
    if !missing.is_empty() || !extra.is_empty() {
        c.failed.push(format!("{label}: not optimal {missing:?}, unpredicted {extra:?}"));
    }
}

fn criterion_5() -> Outcome {
    let joint = fixture("u-m.csv");
    let orders = enumerate_weak_orders(1, 3, 7).unwrap();
    assert_eq!(orders.len(), 13);
    let class = |f: &dyn Fn(&WeakOrder) -> bool| sorted(orders.iter().filter(|o| f(o)).cloned().collect());
    let r_sp = class(&|o| in_r_prime_sp(o, &joint));
    let r_mcp = class(&|o| in_r_mcp(o, &joint));
    let r_msp = class(&|o| in_r_doubleprime_msp(o, &joint));
    let r_msp_tight = class(&|o| in_r_doubleprime_msp_tight(o, &joint));
    let mut c = Checks::default();
    let u = Mode::Unconditional;
    let mut tight_ok = true;
    for (crit, predicted) in [
        (CriterionId::U, &r_sp),
        (CriterionId::M, &r_sp),
        (CriterionId::F, &r_mcp),
        (CriterionId::E, &r_mcp),
        (CriterionId::OU, &r_msp),
        (CriterionId::OM, &r_msp),
    ] {
        let got = optimal(&joint, crit.clone(), u, &orders);
        set_check(&mut c, &format!("O({crit}) vs predicted"), &got, predicted);
        if matches!(crit, CriterionId::OU | CriterionId::OM) {
            tight_ok &= got == r_msp_tight;
        }
    }
    let mut out = c.outcome();
    out.detail.push_str(&format!(
        "; with labels of probability 1/2 kept above the rest, O(OU) = O(OM) = {} ({})",
        r_msp_tight.iter().map(show).collect::<Vec<_>>().join(" "),
        if tight_ok { "matches" } else { "does not match" }
    ));
    out
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let lc = Mode::LabelConditional;
    let mut c = Checks::default();
    let mut misses: Vec<String> = Vec::new();
    for i in 0..20 {
        let nx = 1 + i % 3;
        let joint = random_binary_distinct(nx, &mut rng);
        let orders = enumerate_weak_orders(nx, 2, 7).unwrap();
        let cp = cp_measure(&joint).order_of();
        let r_lc = sorted(orders.iter().filter(|o| refines_within_labels(o, &cp)).cloned().collect());
        for crit in [CriterionId::S, CriterionId::N, CriterionId::OF, CriterionId::OE] {
            let got = optimal(&joint, crit.clone(), lc, &orders);
            set_check(&mut c, &format!("Q#{i} O_lc({crit}) = R_lc(CP)"), &got, &r_lc);
        }
        for crit in [CriterionId::U, CriterionId::M, CriterionId::F, CriterionId::E, CriterionId::OU, CriterionId::OM] {
            let got = optimal(&joint, crit.clone(), lc, &orders);
            let ok = got.iter().any(|o| refines(o, &cp));
            c.count += 1;
            if !ok {
                let found = if got.is_empty() { "no order optimal at every epsilon".to_string() } else { format!("{} optimal orders, none refining CP", got.len()) };
                misses.push(format!("Q#{i} ({nx}x2) O_lc({crit}): {found}"));
            }
        }
    }
    let n_miss = misses.len();
    c.failed.extend(misses);
    let mut out = c.outcome();
    if n_miss > 0 {
        out.detail.push_str(" (exact counterexample: Q = (1,2 / 7,2 / 7,6)/25, M at 1/2 is 13/350 for CP and 0 for [1 0 2 0 0 1])");
    }
    out
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut within = 0;
    let mut worst = String::new();
    let mut worst_z = 0.0;
    for i in 0..100u64 {
        let (nx, ny) = [(1, 2), (1, 3), (2, 2), (2, 3), (3, 2), (1, 4)][i as usize % 6];
        let joint = random_joint(nx, ny, &mut rng);
        let order = sample_weak_orders(nx, ny, 1, i).remove(0);
        let crit = CriterionId::ALL[rng.random_range(0..10)].clone();
        let eps = q(rng.random_range(1..20), 20);
        let e = crit.needs_epsilon().then_some(eps.clone());
        let exact = value(&joint, &order, Mode::Unconditional, crit.clone(), e).to_f64();
        let t = IdealizedTransducer::new(Arc::new(joint.to_f64()), order, Mode::Unconditional).unwrap();
        let mc = evaluate_idealized_mc(&t, &crit, crit.needs_epsilon().then_some(eps.to_f64()), 1_000_000, 1000 + i).unwrap();
        let diff = (mc.mean - exact).abs();
        // Rounding slack for statistics that are constant in (x, y, τ).
        if diff <= 3.0 * mc.stderr + 1e-12 {
            within += 1;
        }
        let z = if mc.stderr > 0.0 { diff / mc.stderr } else { 0.0 };
        if z > worst_z {
            worst_z = z;
            worst = format!("{crit} exact {exact:.6} sampled {:.6} ± {:.6}", mc.mean, mc.stderr);
        }
    }
    Outcome { pass: within >= 97, detail: format!("{within}/100 within 3 standard errors (largest deviation {worst_z:.2}: {worst})") }
}

fn criterion_8() -> Outcome {
    let mut c = Checks::default();
    let mut details = Vec::new();
    // Finite-sample p-values of the true label on short exchangeable
    // sequences from a discrete distribution with many score ties.
    let joint = random_joint(3, 3, &mut ChaCha8Rng::seed_from_u64(8)).to_f64();
    let cells: Vec<f64> = joint.probs().to_vec();
    let draw = |rng: &mut ChaCha8Rng| {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut cell = cells.len() - 1;
        for (i, p) in cells.iter().enumerate() {
            acc += p;
            if u < acc {
                cell = i;
                break;
            }
        }
        Example::new(cell / 3, LabelId(cell % 3))
    };
    let (mut unconditional, mut conditional) = (Vec::new(), vec![Vec::new(); 3]);
    for s in 0..10_000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let len = rng.random_range(5..25);
        let train: Vec<Example<usize>> = (0..len).map(|_| draw(&mut rng)).collect();
        let test = draw(&mut rng);
        let (t1, t2): (f64, f64) = (rng.random(), rng.random());
        unconditional.push(p_value(&train, &test.object, test.label, &FrequencyScorer, t1).unwrap());
        conditional[test.label.0].push(p_value_label_conditional(&train, &test.object, test.label, &FrequencyScorer, t2).unwrap());
    }
    let ks = ks_uniform(&unconditional).unwrap();
    c.holds(&format!("KS unconditional p = {:.4}", ks.p_value), ks.passes(0.001));
    details.push(format!("KS p unconditional {:.3}", ks.p_value));
    for (y, sample) in conditional.iter().enumerate() {
        let ks = ks_uniform(sample).unwrap();
        c.holds(&format!("KS label {y} p = {:.4}", ks.p_value), ks.passes(0.001));
        details.push(format!("label {y} {:.3}", ks.p_value));
    }

    // Exact idealised identity at 20 significance levels.
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    for i in 0..5u64 {
        let joint = random_joint(2, 3, &mut rng);
        let order = sample_weak_orders(2, 3, 1, i).remove(0);
        for mode in [Mode::Unconditional, Mode::LabelConditional] {
            let t = IdealizedTransducer::new(Arc::new(joint.clone()), order.clone(), mode).unwrap();
            for k in 1..=20 {
                let eps = q(k, 21);
                let one = Rational::from_integer(1);
                match mode {
                    Mode::Unconditional => {
                        let mut total = zero();
                        for x in 0..2 {
                            for y in 0..3 {
                                let p = t.p_value(ObjectId(x), LabelId(y));
                                total = total + joint.prob(x, y).clone() * (one.clone() - p.exceed_probability(&eps));
                            }
                        }
                        c.holds(&format!("identity Q#{i} eps {eps}: {total}"), total == eps);
                    }
                    Mode::LabelConditional => {
                        for y in 0..3 {
                            let qy = joint.marginal_y(LabelId(y));
                            let mut total = zero();
                            for x in 0..2 {
                                let p = t.p_value(ObjectId(x), LabelId(y));
                                total = total + joint.prob(x, y).clone() / qy.clone() * (one.clone() - p.exceed_probability(&eps));
                            }
                            c.holds(&format!("lc identity Q#{i} label {y} eps {eps}: {total}"), total == eps);
                        }
                    }
                }
            }
        }
    }
    let mut out = c.outcome();
    out.detail = format!("{}; {}", details.join(", "), out.detail);
    out
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut c = Checks::default();
    let half = q(1, 2);
    let one = Rational::from_integer(1);
    for i in 0..20u64 {
        let (nx, ny) = [(1, 3), (2, 2), (2, 3), (3, 2)][i as usize % 4];
        let joint = random_joint(nx, ny, &mut rng);
        let order = sample_weak_orders(nx, ny, 1, 900 + i).remove(0);
        let u = Mode::Unconditional;
        let s = value(&joint, &order, u, CriterionId::S, None);
        let of = value(&joint, &order, u, CriterionId::OF, None);
        c.holds(&format!("#{i} S = OF + 1/2: {s} vs {of}"), s == of + half.clone());
        for eps in epsilon_test_grid(&joint, std::slice::from_ref(&order), u).unwrap() {
            let n = value(&joint, &order, u, CriterionId::N, Some(eps.clone()));
            let oe = value(&joint, &order, u, CriterionId::OE, Some(eps.clone()));
            c.holds(&format!("#{i} N = OE + 1 - eps at {eps}"), n == oe + (one.clone() - eps));
        }
    }
    c.outcome()
}

fn criterion_10() -> Outcome {
    let data = gaussian_blobs(800, 3, 10, 1.5, 2024).unwrap();
    let (train, test) = data.split_at(600);
    let objects: Vec<FeatureVector> = test.iter().map(|z| z.object.clone()).collect();
    let truth: Vec<LabelId> = test.iter().map(|z| z.label).collect();
    let (mut of_wins, mut u_wins, mut in_band, mut rates) = (0, 0, 0, 0);
    let mut outside = Vec::new();
    for k in 10..=30 {
        let mut of = [0.0; 2];
        let mut u = [0.0; 2];
        for (j, variant) in [KnnVariant::Cp, KnnVariant::Sp].into_iter().enumerate() {
            let scorer = KnnScorer::new(KnnConfig::new(k, variant, 10).unwrap());
            let out = predict_batch(train, &objects, &scorer, &BatchConfig::new(3, 10)).unwrap();
            of[j] = evaluate_empirical(&CriterionId::OF, &out.pvalues, Some(&truth), None).unwrap().primary;
            u[j] = evaluate_empirical(&CriterionId::U, &out.pvalues, None, None).unwrap().primary;
            for eps in [0.05, 0.1] {
                let sets = out.pvalues.prediction_sets(eps);
                let errors = sets.iter().zip(&truth).filter(|(s, y)| !s.contains(y)).count();
                let rate = errors as f64 / truth.len() as f64;
                let (lo, hi) = binomial_band(truth.len(), eps, 3.0);
                rates += 1;
                if rate >= lo && rate <= hi {
                    in_band += 1;
                } else {
                    outside.push(format!("{variant} K={k} eps={eps}: {rate}"));
                }
            }
        }
        of_wins += (of[0] <= of[1]) as usize;
        u_wins += (u[1] <= u[0]) as usize;
    }
    let need = (0.7f64 * 21.0).ceil() as usize;
    Outcome {
        pass: of_wins >= need && u_wins >= need && outside.is_empty(),
        detail: format!(
            "OF: cp <= sp for {of_wins}/21 K, U: sp <= cp for {u_wins}/21 K (need {need}); error rate in 3-sigma band {in_band}/{rates}{}",
            if outside.is_empty() { String::new() } else { format!(" outside: {}", outside.join(", ")) }
        ),
    }
}

fn main() {
    type Check = (&'static str, u64, fn() -> Outcome);
    let checks: [Check; 10] = [
        ("unconditional counterexamples, exact", 1, criterion_1),
        ("two-object delta example", 1, criterion_2),
        ("label-conditional counterexamples", 1, criterion_3),
        ("S, OF, N, OE optimal sets are the refinements of CP", 60, criterion_4),
        ("U, M, F, E, OU, OM optimal sets on the single-object example", 5, criterion_5),
        ("label-conditional optimal sets, binary labels", 60, criterion_6),
        ("exact vs Monte Carlo", 300, criterion_7),
        ("validity", 300, criterion_8),
        ("sum and size identities", 60, criterion_9),
        ("nearest-neighbour experiment on synthetic data", 120, criterion_10),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, budget, check)) in checks.into_iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.iter().any(|o| o == &n.to_string()) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check));
        let elapsed = start.elapsed();
        let (pass, detail) = match result {
            Ok(o) => (o.pass, o.detail),
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        let in_time = elapsed <= Duration::from_secs(budget);
        let pass = pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "[{}] {n:>2}. {name}: {detail} ({:.2}s{})",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            if in_time { String::new() } else { format!(", over the {budget}s budget") }
        );
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
