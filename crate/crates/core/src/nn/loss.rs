use super::tensor::{Float, Tensor};

/// Numerically stable binary cross-entropy on logits against a constant
/// target, averaged over every element. Returns the loss and its gradient.
pub fn bce_with_logits<T: Float>(logits: &Tensor<T>, target: f64) -> (f64, Tensor<T>) {
    let n = logits.data().len() as f64;
    let mut loss = 0.0;
    let grad = logits.map(|z| {
        let zf = z.as_f64();
        let sig = 1.0 / (1.0 + (-zf).exp());
        T::of((sig - target) / n)
    });
    for &z in logits.data() {
        let z = z.as_f64();
        loss += z.max(0.0) - z * target + (-z.abs()).exp().ln_1p();
    }
    (loss / n, grad)
}

/// Mean absolute error and its (sub)gradient with respect to `pred`.
pub fn l1<T: Float>(pred: &Tensor<T>, target: &Tensor<T>) -> (f64, Tensor<T>) {
    assert_eq!(pred.shape(), target.shape());
    let n = pred.data().len() as f64;
    let inv = T::of(1.0 / n);
    let mut loss = 0.0;
    let data = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(&p, &t)| {
            let d = p - t;
            loss += d.abs().as_f64();
            if d > T::zero() {
                inv
            } else if d < T::zero() {
                -inv
            } else {
                T::zero()
            }
        })
        .collect();
    (loss / n, Tensor::from_vec(pred.shape(), data))
}

/// Row-wise softmax of `[n, k, 1, 1]` logits.
pub fn softmax<T: Float>(logits: &Tensor<T>) -> Vec<Vec<f64>> {
    let k = logits.channels();
    logits
        .data()
        .chunks(k)
        .map(|row| {
            let max = row.iter().map(|v| v.as_f64()).fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = row.iter().map(|v| (v.as_f64() - max).exp()).collect();
            let sum: f64 = exps.iter().sum();
            exps.into_iter().map(|e| e / sum).collect()
        })
        .collect()
}

/// Mean softmax cross-entropy over the batch, with gradient on the logits.
pub fn softmax_cross_entropy<T: Float>(logits: &Tensor<T>, labels: &[usize]) -> (f64, Tensor<T>) {
    let [n, k, h, w] = logits.shape();
    assert_eq!(h * w, 1, "logits must be [n, k, 1, 1]");
    assert_eq!(labels.len(), n);
    let probs = softmax(logits);
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(n * k);
    for (p, &y) in probs.iter().zip(labels) {
        loss -= p[y].max(f64::MIN_POSITIVE).ln();
        for (j, &pj) in p.iter().enumerate() {
            let g = pj - if j == y { 1.0 } else { 0.0 };
            grad.push(T::of(g / n as f64));
        }
    }
    (loss / n as f64, Tensor::from_vec([n, k, 1, 1], grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(f: impl Fn(&Tensor<f64>) -> (f64, Tensor<f64>), x: Tensor<f64>) {
        let (_, g) = f(&x);
        let eps = 1e-6;
        for i in 0..x.data().len() {
            let mut xp = x.clone();
            xp.data_mut()[i] += eps;
            let mut xm = x.clone();
            xm.data_mut()[i] -= eps;
            let fd = (f(&xp).0 - f(&xm).0) / (2.0 * eps);
            assert!((fd - g.data()[i]).abs() < 1e-7, "{i}: {fd} vs {}", g.data()[i]);
        }
    }

    #[test]
    fn bce_matches_definition() {
        let z = Tensor::from_vec([1, 1, 1, 3], vec![-2.0f64, 0.0, 3.0]);
        for target in [0.0, 1.0] {
            let (loss, _) = bce_with_logits(&z, target);
            let expected: f64 = z
                .data()
                .iter()
                .map(|&v| {
                    let s = 1.0 / (1.0 + (-v).exp());
                    -(target * s.ln() + (1.0 - target) * (1.0 - s).ln())
                })
                .sum::<f64>()
                / 3.0;
            assert!((loss - expected).abs() < 1e-12);
            fd_check(|x| bce_with_logits(x, target), z.clone());
        }
        let (big, _) = bce_with_logits(&Tensor::from_vec([1, 1, 1, 1], vec![-800.0f64]), 1.0);
        assert!((big - 800.0).abs() < 1e-9);
    }

    #[test]
    fn l1_gradient() {
        let t = Tensor::from_vec([1, 1, 2, 2], vec![0.1f64, 0.2, -0.3, 0.4]);
        let x = Tensor::from_vec([1, 1, 2, 2], vec![0.5f64, -0.2, 0.0, 0.9]);
        let (loss, _) = l1(&x, &t);
        assert!((loss - (0.4 + 0.4 + 0.3 + 0.5) / 4.0).abs() < 1e-12);
        fd_check(|p| l1(p, &t), x);
    }

    #[test]
    fn cross_entropy_gradient() {
        let z = Tensor::from_vec([2, 3, 1, 1], vec![0.5f64, -1.0, 2.0, 0.0, 0.3, -0.4]);
        let (loss, _) = softmax_cross_entropy(&z, &[2, 0]);
        let p = softmax(&z);
        assert!((loss - (-(p[0][2].ln()) - p[1][0].ln()) / 2.0).abs() < 1e-12);
        fd_check(|x| softmax_cross_entropy(x, &[2, 0]), z);
    }
}
