//! Reading a distribution and a custom conformity measure from text.

use std::sync::Arc;

use conformal_efficiency::criteria::{evaluate_idealized, CriterionId};
use conformal_efficiency::formats::{parse_joint, parse_scores};
use conformal_efficiency::idealized::{IdealizedTransducer, Mode};

const Q: &str = "\
# x,y,prob
0,0,1/10
0,1,3/20
0,2,1/4
1,0,1/4
1,1,1/5
1,2,1/20
";

const SCORES: &str = "\
0,0,1
0,1,2
0,2,5
1,0,4
1,1,3
1,2,0
";

fn main() -> conformal_efficiency::Result<()> {
    let joint = Arc::new(parse_joint(Q)?);
    let scores = parse_scores(SCORES)?;
    let t = IdealizedTransducer::from_scores(joint, &scores, Mode::Unconditional)?;
    println!("order {:?}", t.order().ranks());
    for c in [CriterionId::S, CriterionId::U, CriterionId::F] {
        println!("{c}: {}", evaluate_idealized(&t, &c, None)?.primary);
    }
    Ok(())
}
