//! Nearest-neighbour conformal predictors on Gaussian blobs: unconfidence
//! and observed fuzziness as K varies.

use conformal_efficiency::criteria::{evaluate_empirical, CriterionId};
use conformal_efficiency::knn::{gaussian_blobs, FeatureVector, KnnConfig, KnnScorer, KnnVariant};
use conformal_efficiency::transducer::{predict_batch, BatchConfig};
use conformal_efficiency::LabelId;

fn main() -> conformal_efficiency::Result<()> {
    let data = gaussian_blobs(500, 3, 5, 1.5, 3)?;
    let (train, test) = data.split_at(400);
    let objects: Vec<FeatureVector> = test.iter().map(|z| z.object.clone()).collect();
    let truth: Vec<LabelId> = test.iter().map(|z| z.label).collect();
    println!("variant  K  U        OF");
    for variant in KnnVariant::ALL {
        for k in [2, 5, 10, 20] {
            let scorer = KnnScorer::new(KnnConfig::new(k, variant, 0)?);
            let out = predict_batch(train, &objects, &scorer, &BatchConfig::new(3, 0))?;
            let u = evaluate_empirical(&CriterionId::U, &out.pvalues, None, None)?;
            let of = evaluate_empirical(&CriterionId::OF, &out.pvalues, Some(&truth), None)?;
            println!("{variant:<7} {k:>2}  {:.5}  {:.5}", u.primary, of.primary);
        }
    }
    Ok(())
}
