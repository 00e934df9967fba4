//! Mutual coherence and restricted isometry constants of small random
//! sensing matrices.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use resonant_sr::sparsity::{coherence, estimate_rip_delta};

fn main() -> resonant_sr::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for rows in [6, 10, 14] {
        let normal = Normal::new(0.0, 1.0 / (rows as f64).sqrt()).unwrap();
        let a = DMatrix::from_fn(rows, 14, |_, _| normal.sample(&mut rng));
        let deltas: Vec<String> = (1..=3)
            .map(|k| estimate_rip_delta(&a, k).map(|d| format!("d{k}={d:.3}")))
            .collect::<resonant_sr::Result<_>>()?;
        println!("{rows}x14: coherence {:.3}  {}", coherence(&a)?, deltas.join(" "));
    }
    Ok(())
}
