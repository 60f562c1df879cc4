//! Seeded synthetic streams for tests and the `verify` suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{Dataset, Instance, Label};
use crate::kernel::SparseVector;

fn random_direction(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let w: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return w.into_iter().map(|v| v / norm).collect();
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Points uniform in `[-1, 1]^dim`, labelled by a random hyperplane through
/// the origin; points closer than `margin` to the hyperplane are rejected.
pub fn separable_stream(n: usize, dim: usize, margin: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = random_direction(&mut rng, dim);
    let mut instances = Vec::with_capacity(n);
    while instances.len() < n {
        let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let score = dot(&w, &x);
        if score.abs() < margin {
            continue;
        }
        instances.push(Instance::new(
            SparseVector::from_dense(&x),
            Label::from_sign(score),
        ));
    }
    Dataset::new("separable", instances)
}

/// Like [`separable_stream`] without a margin, with each label flipped with
/// probability `flip`.
pub fn noisy_stream(n: usize, dim: usize, flip: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = random_direction(&mut rng, dim);
    let instances = (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut label = Label::from_sign(dot(&w, &x));
            if rng.gen_bool(flip) {
                label = match label {
                    Label::Positive => Label::Negative,
                    Label::Negative => Label::Positive,
                };
            }
            Instance::new(SparseVector::from_dense(&x), label)
        })
        .collect();
    Dataset::new("noisy", instances)
}
