//! Exact criterion values next to sampling estimates.

use std::sync::Arc;

use conformal_efficiency::criteria::{evaluate_idealized, evaluate_idealized_mc, CriterionId};
use conformal_efficiency::idealized::{IdealizedTransducer, Mode};
use conformal_efficiency::oracle::random_joint;
use conformal_efficiency::WeakOrder;
use rand::SeedableRng;

fn main() -> conformal_efficiency::Result<()> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    let joint = Arc::new(random_joint(2, 3, &mut rng).to_f64());
    let order = WeakOrder::from_ranks(2, 3, &[0, 2, 1, 1, 3, 0])?;
    let t = IdealizedTransducer::new(joint, order, Mode::Unconditional)?;
    for c in CriterionId::ALL {
        let eps = c.needs_epsilon().then_some(0.3);
        let exact = evaluate_idealized(&t, &c, eps.as_ref())?.primary;
        let mc = evaluate_idealized_mc(&t, &c, eps, 200_000, 1)?;
        println!("{c:>2}: exact {exact:.6}  sampled {:.6} ± {:.6}", mc.mean, mc.stderr);
    }
    Ok(())
}
