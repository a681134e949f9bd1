use crate::error::Result;
use crate::tensor::Tensor4;

/// Mean squared error over all elements and its gradient `2 (pred - target) / N`.
pub fn mse_loss(pred: &Tensor4, target: &Tensor4) -> Result<(f64, Tensor4)> {
    target.expect_shape(pred.shape(), "mse_loss target")?;
    let n = pred.len() as f64;
    let mut grad = pred.clone();
    let mut sum = 0.0;
    for (g, t) in grad.as_mut_slice().iter_mut().zip(target.as_slice()) {
        let d = *g - t;
        sum += d * d;
        *g = 2.0 * d / n;
    }
    Ok((sum / n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::tensor::Shape4;

    #[test]
    fn equal_inputs() {
        let t = Tensor4::from_fn(Shape4::new(1, 1, 3, 3), |i| i as f64).unwrap();
        let (l, g) = mse_loss(&t, &t).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_offset() {
        let t = Tensor4::from_fn(Shape4::new(2, 1, 2, 2), |i| i as f64 * 0.25).unwrap();
        let p = t.map(|v| v + 1.0);
        let (l, g) = mse_loss(&p, &t).unwrap();
        assert_eq!(l, 1.0);
        assert!(g.as_slice().iter().all(|&v| v == 2.0 / 8.0));
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn matches_double_loop() {
        let p = Tensor4::from_vec(Shape4::new(1, 1, 2, 2), vec![0.3, -1.2, 2.5, 0.0]).unwrap();
        let t = Tensor4::from_vec(Shape4::new(1, 1, 2, 2), vec![1.1, 0.4, -0.7, 0.9]).unwrap();
        let mut sum = 0.0;
        let mut grad = [[0.0; 2]; 2];
        for y in 0..2 {
            for x in 0..2 {
                let d = p.get(0, 0, y, x) - t.get(0, 0, y, x);
                sum += d * d;
                grad[y][x] = 2.0 * d / 4.0;
            }
        }
        let (l, g) = mse_loss(&p, &t).unwrap();
        assert!((l - sum / 4.0).abs() < 1e-12);
        for y in 0..2 {
            for x in 0..2 {
                assert!((g.get(0, 0, y, x) - grad[y][x]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shape_mismatch() {
        let a = Tensor4::zeros(Shape4::new(1, 1, 2, 2)).unwrap();
        let b = Tensor4::zeros(Shape4::new(1, 1, 2, 3)).unwrap();
        assert!(matches!(mse_loss(&a, &b), Err(Error::Shape(_))));
    }
}
