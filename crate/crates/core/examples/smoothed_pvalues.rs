//! Finite-sample smoothed conformal prediction on discrete data, with the
//! error rate at a few significance levels.

use conformal_efficiency::transducer::{predict_batch, BatchConfig, Example, FrequencyScorer};
use conformal_efficiency::LabelId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn draw(rng: &mut ChaCha8Rng) -> Example<usize> {
    let x = rng.random_range(0..4);
    let y = if rng.random::<f64>() < 0.2 + 0.2 * x as f64 { 1 } else { 0 };
    Example::new(x, LabelId(y))
}

fn main() -> conformal_efficiency::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let train: Vec<Example<usize>> = (0..300).map(|_| draw(&mut rng)).collect();
    let test: Vec<Example<usize>> = (0..2000).map(|_| draw(&mut rng)).collect();
    let objects: Vec<usize> = test.iter().map(|z| z.object).collect();
    let out = predict_batch(&train, &objects, &FrequencyScorer, &BatchConfig::new(2, 7))?;
    for eps in [0.05, 0.1, 0.2] {
        let sets = out.pvalues.prediction_sets(eps);
        let errors = sets.iter().zip(&test).filter(|(s, z)| !s.contains(&z.label)).count();
        let mean_size = sets.iter().map(Vec::len).sum::<usize>() as f64 / sets.len() as f64;
        println!("eps {eps:.2}: error rate {:.4}, mean set size {mean_size:.3}", errors as f64 / test.len() as f64);
    }
    Ok(())
}
