//! Brute-force optimal conformity orders and the theorem checks.

use conformal_efficiency::criteria::CriterionId;
use conformal_efficiency::idealized::Mode;
use conformal_efficiency::oracle::{enumerate_weak_orders, example_single_object, optimal_set, verify_theorem, OptimalitySpec};

fn main() -> conformal_efficiency::Result<()> {
    let joint = example_single_object();
    println!("{} weak orders on 3 cells", enumerate_weak_orders(1, 3, 7)?.len());
    for c in [CriterionId::S, CriterionId::U, CriterionId::F, CriterionId::OU] {
        let set = optimal_set(&joint, &OptimalitySpec::new(c.clone(), Mode::Unconditional), 7)?;
        let shown: Vec<String> = set.iter().map(|o| format!("{:?}", o.ranks())).collect();
        println!("O({c}) = {}", shown.join(" "));
    }
    for t in 1..=4 {
        for line in verify_theorem(&joint, t, 7)?.lines("single") {
            println!("{line}");
        }
    }
    Ok(())
}
