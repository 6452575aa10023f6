use pidm_core::nn::{fit, Architecture, LrSchedule, Matrix, Mlp, NetShape, TrainConfig};
use pidm_core::rng::seeded;
use rand::Rng;
use rand_distr::{Distribution, Normal};

const NOISE: f64 = 0.1;

/// a = W s + N(0, 0.1^2) per dimension, s ~ U[-1, 1]^d. Bayes MSE (summed
/// over the two action dimensions) is 2 * 0.1^2.
fn linear_task(d: usize) -> impl Fn(usize, &mut rand_chacha::ChaCha8Rng) -> (Matrix, Matrix) {
    let w: Vec<[f64; 2]> = (0..d)
        .map(|i| {
            let s = 0.6 / d as f64;
            [s * ((i % 3) as f64 - 1.0), s * if i % 2 == 0 { 1.0 } else { -0.5 }]
        })
        .collect();
    move |n, rng| {
        let noise = Normal::new(0.0, NOISE).unwrap();
        let mut x = Matrix::zeros(n, d);
        let mut t = Matrix::zeros(n, 2);
        for r in 0..n {
            let s: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut a = [0.0; 2];
            for (si, wi) in s.iter().zip(&w) {
                a[0] += si * wi[0];
                a[1] += si * wi[1];
            }
            x.row_mut(r).copy_from_slice(&s);
            t.row_mut(r)[0] = a[0] + noise.sample(rng);
            t.row_mut(r)[1] = a[1] + noise.sample(rng);
        }
        (x, t)
    }
}

fn eval_mse(net: &Mlp, task: &impl Fn(usize, &mut rand_chacha::ChaCha8Rng) -> (Matrix, Matrix)) -> f64 {
    let (x, t) = task(20_000, &mut seeded(999));
    let y = net.predict(&x).unwrap();
    let sum: f64 = y.data.iter().zip(&t.data).map(|(a, b)| (a - b).powi(2)).sum();
    sum / x.rows as f64
}

fn train_linear(shape: NetShape, steps: usize, batch: usize) -> f64 {
    let d = 14;
    let task = linear_task(d);
    let cfg = TrainConfig {
        batch_size: batch,
        total_steps: steps,
        lr_schedule: LrSchedule::LinearDecay {
            start: 1e-3,
            end: 1e-5,
            steps,
        },
        grad_clip: Some(1.0),
        checkpoint_steps: vec![],
        shape: shape.clone(),
        ..TrainConfig::desk()
    };
    let mut net = Mlp::new(&shape.architecture(d), 7).unwrap();
    fit(&mut net, &cfg, |rng| task(batch, rng), |_, _| Ok(())).unwrap();
    eval_mse(&net, &task)
}

#[test]
fn desk_network_reaches_bayes_error_on_linear_task() {
    let bayes = 2.0 * NOISE * NOISE;
    let mse = train_linear(NetShape::desk(), 3000, 256);
    println!("desk net: mse {mse:.5}, bayes {bayes:.5}");
    assert!(mse <= 1.05 * bayes, "mse {mse} vs bayes {bayes}");
}

#[test]
fn reference_network_reaches_bayes_error_on_linear_task() {
    let bayes = 2.0 * NOISE * NOISE;
    let mse = train_linear(NetShape::reference(), 2000, 256);
    println!("reference net: mse {mse:.5}, bayes {bayes:.5}");
    assert!(mse <= 1.05 * bayes, "mse {mse} vs bayes {bayes}");
}

#[test]
fn training_is_bit_deterministic() {
    let d = 5;
    let task = linear_task(d);
    let cfg = TrainConfig {
        total_steps: 40,
        batch_size: 16,
        checkpoint_steps: vec![20, 40],
        ..TrainConfig::desk()
    };
    let run = || {
        let mut net = Mlp::new(&cfg.shape.architecture(d), 3).unwrap();
        let mut at_20 = None;
        fit(&mut net, &cfg, |rng| task(16, rng), |s, n| {
            if s == 20 {
                at_20 = Some(n.clone());
            }
            Ok(())
        })
        .unwrap();
        (net, at_20.unwrap())
    };
    let (a, a20) = run();
    let (b, b20) = run();
    assert_eq!(a, b);
    assert_eq!(a20, b20);
    assert_ne!(a, a20);
}

#[test]
fn architecture_descriptor_matches_reference_widths() {
    let arch = Architecture::reference(14);
    let net = Mlp::new(&arch, 0).unwrap();
    let expected = 14 * 512 + 512 + 512 * 1024 + 1024 + 1024 * 256 + 256 + 2 * 256 + 256 * 256 + 256 + 256 * 2 + 2;
    assert_eq!(net.param_count(), expected);
}
