//! Exact criterion values of the four named measures on a one-object
//! distribution.

use std::sync::Arc;

use conformal_efficiency::criteria::{evaluate_idealized, CriterionId};
use conformal_efficiency::idealized::{cp_measure, mcp_measures, msp_measure, sp_measures, IdealizedTransducer, Mode};
use conformal_efficiency::{FiniteJoint, Rational};

fn main() -> conformal_efficiency::Result<()> {
    let q = |n, d| Rational::new(n, d);
    let joint = Arc::new(FiniteJoint::new(1, 3, vec![q(1, 5), q(3, 10), q(1, 2)])?);
    let measures = [
        ("CP", cp_measure(&joint)),
        ("SP", sp_measures(&joint).remove(0)),
        ("MCP", mcp_measures(&joint).remove(0)),
        ("MSP", msp_measure(&joint)),
    ];
    let eps = q(1, 5);
    for (name, scores) in &measures {
        let t = IdealizedTransducer::from_scores(joint.clone(), scores, Mode::Unconditional)?;
        print!("{name:>4}");
        for c in CriterionId::ALL {
            let e = c.needs_epsilon().then_some(&eps);
            let v = evaluate_idealized(&t, &c, e)?;
            print!("  {c}={}", v.primary);
        }
        println!();
    }
    Ok(())
}
