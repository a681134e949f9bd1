use krnet_core::data::Rng;
use krnet_core::krnet::{build_network, NetworkConfig};
use krnet_core::nn::{
    batchnorm_forward, conv2d_backward, conv2d_forward, conv2d_transpose_forward, BatchNorm, BnMode,
    ConvLayer,
};
use krnet_core::{Shape4, Tensor4};

fn gaussian(shape: Shape4, rng: &mut Rng) -> Tensor4 {
    Tensor4::from_fn(shape, |_| rng.gaussian()).unwrap()
}

#[test]
fn transposed_conv_is_the_adjoint_of_conv() {
    let mut rng = Rng::new(3);
    for trial in 0..30 {
        let k = [1, 3, 5, 7][trial % 4];
        let c_in = 1 + rng.below(3) as usize;
        let n_out = 1 + rng.below(4) as usize;
        let (h, w) = (1 + rng.below(9) as usize, 1 + rng.below(9) as usize);
        let mut fwd = ConvLayer::new(k, c_in, n_out).unwrap();
        fwd.weight.value.iter_mut().for_each(|v| *v = rng.gaussian());
        // Same weight array, channel roles swapped: n_out -> c_in.
        let mut adj = ConvLayer::transposed(k, n_out, c_in).unwrap();
        assert_eq!(adj.weight.len(), fwd.weight.len());
        adj.weight.value.clone_from(&fwd.weight.value);

        let u = gaussian(Shape4::new(2, c_in, h, w), &mut rng);
        let g = gaussian(Shape4::new(2, n_out, h, w), &mut rng);
        let lhs = conv2d_forward(&u, &fwd).unwrap().dot(&g).unwrap();
        let rhs = u.dot(&conv2d_transpose_forward(&g, &adj).unwrap()).unwrap();
        assert!((lhs - rhs).abs() < 1e-10, "trial {trial}: {lhs} vs {rhs}");
    }
}

#[test]
fn conv_input_gradient_is_the_transposed_conv() {
    let mut rng = Rng::new(8);
    let mut fwd = ConvLayer::new(3, 2, 3).unwrap();
    fwd.weight.value.iter_mut().for_each(|v| *v = rng.gaussian());
    let mut adj = ConvLayer::transposed(3, 3, 2).unwrap();
    adj.weight.value.clone_from(&fwd.weight.value);
    let x = gaussian(Shape4::new(1, 2, 6, 5), &mut rng);
    let g = gaussian(Shape4::new(1, 3, 6, 5), &mut rng);
    let grads = conv2d_backward(&x, &fwd, &g).unwrap();
    let via_adjoint = conv2d_transpose_forward(&g, &adj).unwrap();
    for (a, b) in grads.input.as_slice().iter().zip(via_adjoint.as_slice()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn frozen_statistics_reproduce_train_output() {
    let mut rng = Rng::new(21);
    let x = Tensor4::from_fn(Shape4::new(3, 4, 5, 5), |i| 2.0 * rng.gaussian() + (i % 7) as f64)
        .unwrap();
    let mut bn = BatchNorm::new(4);
    bn.momentum = 1.0;
    bn.gamma.value = vec![0.5, 1.5, -1.0, 2.0];
    bn.beta.value = vec![0.1, -0.2, 0.3, 0.0];
    let (train_out, _) = batchnorm_forward(&x, &mut bn).unwrap();
    bn.mode = BnMode::Infer;
    let (infer_out, _) = batchnorm_forward(&x, &mut bn).unwrap();
    for (a, b) in train_out.as_slice().iter().zip(infer_out.as_slice()) {
        assert!((a - b).abs() < 1e-6);
    }
}

fn forward_backward(net: &mut krnet_core::Network, y: &Tensor4) -> (Vec<u64>, Vec<u64>) {
    net.zero_grad();
    let out = net.forward(y).unwrap();
    net.backward(&out).unwrap();
    let out_bits = out.as_slice().iter().map(|v| v.to_bits()).collect();
    let grad_bits = net
        .params()
        .iter()
        .flat_map(|p| p.grad.iter().map(|v| v.to_bits()))
        .collect();
    (out_bits, grad_bits)
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let cfg = NetworkConfig::mini(3);
    let y = gaussian(Shape4::new(3, 3, 17, 13), &mut Rng::new(5));
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| forward_backward(&mut build_network(&cfg, 9).unwrap(), &y))
    };
    let serial = run(1);
    assert_eq!(serial, run(4));
    assert_eq!(serial, run(7));
}
