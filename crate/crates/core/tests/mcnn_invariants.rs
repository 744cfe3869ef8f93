use emofuse_core::layers::{Activation, Conv1d, Dense};
use emofuse_core::text::{pad_tokens, McnnConfig, McnnModel};
use emofuse_core::{Matrix, Parameter, Rng};

fn config(kernels: &[usize], embed_dim: usize, filters: usize, classes: usize) -> McnnConfig {
    McnnConfig {
        kernel_sizes: kernels.to_vec(),
        embed_dim,
        filters_per_module: filters,
        num_classes: classes,
        lambda: 0.0,
    }
}

fn softmax_oracle(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

fn hand_model() -> McnnModel {
    let mut model = McnnModel::new(config(&[2], 2, 1, 2), 4, &mut Rng::new(0)).unwrap();
    model.embedding.table.value =
        Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 2.0], vec![0.5, -1.0], vec![-1.0, 3.0]]).unwrap();
    model.modules[0].weight.value = Matrix::from_vec(4, 1, vec![0.2, -0.1, 0.3, 0.4]).unwrap();
    model.modules[0].bias.value = Matrix::from_vec(1, 1, vec![0.1]).unwrap();
    model.output = Dense::from_weights(Matrix::from_vec(2, 1, vec![2.0, -1.0]).unwrap(), &[0.0, 0.5], Activation::Linear)
        .unwrap();
    model
}

#[test]
fn three_token_forward_by_hand() {
    let model = hand_model();
    let fwd = model.forward(&pad_tokens(&[1, 2, 3], 2)).unwrap();
    // windows: relu(-0.15) = 0 and relu(1.2) = 1.2, averaged over 2
    assert!((fwd.embedding[0] - 0.6).abs() < 1e-12);
    let logits = [1.2, -0.1];
    for (a, b) in fwd.logits.iter().zip(logits) {
        assert!((a - b).abs() < 1e-12);
    }
    for (a, b) in fwd.posteriors.iter().zip(softmax_oracle(&logits)) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn short_utterance_uses_its_leading_window() {
    let model = hand_model();
    let fwd = model.forward(&pad_tokens(&[1], 2)).unwrap();
    assert!((fwd.embedding[0] - 0.1).abs() < 1e-12);
}

#[test]
fn all_padding_gives_uniform_posteriors() {
    let model = hand_model();
    let fwd = model.forward(&pad_tokens(&[], 2)).unwrap();
    assert_eq!(fwd.embedding, vec![0.0]);
    assert_eq!(fwd.posteriors, vec![0.5, 0.5]);
}

#[test]
fn single_unigram_module_reduces_to_average_embedding_model() {
    for seed in 0..10 {
        let mut rng = Rng::new(seed);
        let (e, k, v) = (3, 3, 7);
        let mut model = McnnModel::new(config(&[1], e, e, k), v, &mut rng).unwrap();
        let mut table = Matrix::uniform(v, e, 1.0, &mut rng);
        table.values_mut().iter_mut().for_each(|x| *x = x.abs() + 0.1);
        table.row_mut(0).fill(0.0);
        model.embedding.table.value = table.clone();
        model.modules[0].weight.value = Matrix::identity(e);
        model.modules[0].bias.value = Matrix::zeros(1, e);
        let tokens: Vec<usize> = (0..5).map(|_| 1 + rng.below(v - 1)).collect();
        let fwd = model.forward(&pad_tokens(&tokens, 1)).unwrap();

        let mut mean = vec![0.0; e];
        for &t in &tokens {
            for (m, x) in mean.iter_mut().zip(table.row(t)) {
                *m += x / tokens.len() as f64;
            }
        }
        let w = &model.output.weight.value;
        let b = model.output.bias.value.values();
        for c in 0..k {
            let direct: f64 = (0..e).map(|j| w[(c, j)] * mean[j]).sum::<f64>() + b[c];
            assert!((fwd.logits[c] - direct).abs() < 1e-12, "seed {seed}");
        }
    }
}

#[test]
fn reordering_modules_with_matching_output_columns_is_invisible() {
    for seed in 0..10 {
        let mut rng = Rng::new(seed);
        let f = 4;
        let model = McnnModel::new(config(&[1, 2, 3], 5, f, 4), 12, &mut rng).unwrap();
        let mut swapped = model.clone();
        swapped.config.kernel_sizes.reverse();
        swapped.modules.reverse();
        let n = model.modules.len();
        let w = &model.output.weight.value;
        let mut w2 = Matrix::zeros(w.rows(), w.cols());
        for c in 0..w.rows() {
            for m in 0..n {
                for j in 0..f {
                    w2.row_mut(c)[(n - 1 - m) * f + j] = w[(c, m * f + j)];
                }
            }
        }
        swapped.output.weight = Parameter::new(w2);
        let tokens: Vec<usize> = (0..rng.below(8) + 1).map(|_| 1 + rng.below(11)).collect();
        let a = model.forward(&pad_tokens(&tokens, 3)).unwrap();
        let b = swapped.forward(&pad_tokens(&tokens, 3)).unwrap();
        for (x, y) in a.logits.iter().zip(&b.logits) {
            assert!((x - y).abs() < 1e-12, "seed {seed}");
        }
    }
}

#[test]
fn trailing_padding_does_not_change_the_embedding() {
    for seed in 0..20 {
        let mut rng = Rng::new(seed);
        let model = McnnModel::new(config(&[1, 4, 7, 11], 6, 3, 4), 20, &mut rng).unwrap();
        let tokens: Vec<usize> = (0..rng.below(15) + 1).map(|_| 1 + rng.below(19)).collect();
        let a = model.forward(&pad_tokens(&tokens, 11)).unwrap();
        let b = model.forward(&pad_tokens(&tokens, tokens.len() + 11 + rng.below(20))).unwrap();
        for (x, y) in a.embedding.iter().zip(&b.embedding) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn too_few_slots_is_rejected() {
    let model = hand_model();
    let err = model.forward(&pad_tokens(&[1], 1)).unwrap_err();
    assert_eq!(err.class(), "precondition");
}

#[test]
fn conv_module_shape_follows_kernel() {
    let c = Conv1d::new(3, 5, 2, 0.1, &mut Rng::new(1));
    assert_eq!(c.weight.value.shape(), (15, 2));
}
