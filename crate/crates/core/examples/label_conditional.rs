//! Label-conditional p-values: the conditional probability measure against
//! an order that puts one object below the other.

use std::sync::Arc;

use conformal_efficiency::criteria::{evaluate_idealized, CriterionId};
use conformal_efficiency::idealized::{cp_measure, IdealizedTransducer, Mode};
use conformal_efficiency::oracle::{example_lc_four_label, object_separating_order};
use conformal_efficiency::Rational;

fn main() -> conformal_efficiency::Result<()> {
    let joint = Arc::new(example_lc_four_label());
    let eps = Rational::new(2, 5);
    let orders = [("CP", cp_measure(&joint).order_of()), ("separating", object_separating_order(2, 4))];
    for (name, order) in orders {
        let t = IdealizedTransducer::new(joint.clone(), order, Mode::LabelConditional)?;
        let u = evaluate_idealized(&t, &CriterionId::U, None)?;
        let m = evaluate_idealized(&t, &CriterionId::M, Some(&eps))?;
        let ou = evaluate_idealized(&t, &CriterionId::OU, None)?;
        println!("{name:>10}: U {}  M(2/5) {}  OU {}", u.primary, m.primary, ou.primary);
    }
    Ok(())
}
