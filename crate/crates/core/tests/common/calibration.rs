//! Coin-flip participants for the participant-test calibration check.

use genimg_eval::stats::{two_sample_t_test, Alternative, TTestVariant};
use genimg_eval::vtt::{participant_hypothesis_test, Label, Likert, VttResponse, VttStudy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Exact rejection probability of the pooled participant test for a
/// coin-flip participant on 10 + 10 images, by enumerating both binomial counts.
pub fn exact_rejection_rate(alpha: f64) -> f64 {
    let binom = |k: u64| -> f64 {
        let mut c = 1.0;
        for i in 0..k {
            c = c * (10 - i) as f64 / (i + 1) as f64;
        }
        c / 1024.0
    };
    let sample = |k: usize| -> Vec<f64> { (0..10).map(|i| if i < k { 1.0 } else { 0.0 }).collect() };
    let mut rate = 0.0;
    for g in 0..=10usize {
        for r in 0..=10usize {
            let t = two_sample_t_test(&sample(g), &sample(r), Alternative::TwoSided, alpha, TTestVariant::Pooled)
                .unwrap();
            if t.reject {
                rate += binom(g as u64) * binom(r as u64);
            }
        }
    }
    rate
}

fn coin_flips(rng: &mut ChaCha8Rng) -> Vec<VttResponse> {
    let mut rows = Vec::with_capacity(20);
    for (class, truth) in [("generated", Label::Generated), ("real", Label::Real)] {
        for i in 0..10 {
            let guess = if rng.random_bool(0.5) { Label::Real } else { Label::Generated };
            rows.push(VttResponse {
                participant: "p".into(),
                image: format!("{class}/{i}"),
                truth,
                guess,
                likert: Likert::new(2).unwrap(),
                timestamp: "2024-01-01T00:00:00Z".into(),
            });
        }
    }
    rows
}

/// Fraction of `trials` simulated coin-flip sessions rejected at `alpha`.
pub fn simulated_rejection_rate(seed: u64, trials: usize, alpha: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rejected = 0;
    for _ in 0..trials {
        let s = VttStudy::new("sim/coin", coin_flips(&mut rng)).unwrap();
        if participant_hypothesis_test(&s, "p", alpha).unwrap().reject {
            rejected += 1;
        }
    }
    rejected as f64 / trials as f64
}
