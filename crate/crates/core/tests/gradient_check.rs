use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stylesim_core::comparisons::Label;
use stylesim_core::{comparison_loss, loss_gradient, Style, StyleModel};

const STEP: f64 = 1e-5;
/// Below this magnitude both gradients count as zero.
const FLOOR: f64 = 1e-6;

fn loss_at(model: &StyleModel, fa: &[f64], fb: &[f64], style: Style, label: Label) -> f64 {
    comparison_loss(
        &model.scores(fa).unwrap(),
        &model.scores(fb).unwrap(),
        style,
        label,
    )
}

#[test]
fn analytic_gradient_matches_central_differences() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for instance in 0..120u64 {
        let d = rng.random_range(1..=16);
        let h = rng.random_range(1..=12);
        let mut model = StyleModel::init(d, h, instance).unwrap();
        for b in model.b1_mut() {
            *b = rng.random_range(-0.5..0.5);
        }
        for b in model.b2_mut() {
            *b = rng.random_range(-0.5..0.5);
        }
        let fa: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let fb: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let style = Style::ALL[rng.random_range(0..4)];
        let label = if rng.random_bool(0.5) {
            Label::Positive
        } else {
            Label::Negative
        };

        let analytic = loss_gradient(&model, &fa, &fb, style, label).unwrap();
        assert!((analytic.loss - loss_at(&model, &fa, &fb, style, label)).abs() < 1e-12);
        for p in 0..model.param_count() {
            let original = model.params()[p];
            model.params_mut()[p] = original + STEP;
            let up = loss_at(&model, &fa, &fb, style, label);
            model.params_mut()[p] = original - STEP;
            let down = loss_at(&model, &fa, &fb, style, label);
            model.params_mut()[p] = original;
            let numeric = (up - down) / (2.0 * STEP);
            let a = analytic.values[p];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FLOOR);
            assert!(
                rel < 1e-4,
                "instance {instance} param {p}: analytic {a} numeric {numeric}"
            );
            worst = worst.max(rel);
        }
    }
    println!("max relative error {worst:.3e} in {:?}", start.elapsed());
    assert!(start.elapsed().as_secs_f64() < 10.0);
}
