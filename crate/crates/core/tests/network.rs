use krnet_core::data::Rng;
use krnet_core::krnet::{kr_block_forward, CompositeUnit, KrBlock};
use krnet_core::nn::{batchnorm_forward, conv2d_forward, prelu_forward};
use krnet_core::{build_network, receptive_field, Error, KrBlockVariant, NetworkConfig, Shape4, Tensor4};

fn gaussian(shape: Shape4, rng: &mut Rng) -> Tensor4 {
    Tensor4::from_fn(shape, |_| rng.gaussian()).unwrap()
}

#[test]
fn zero_parameters_give_the_identity_bit_exactly() {
    let mut rng = Rng::new(1);
    for trial in 0..50 {
        let channels = if trial % 2 == 0 { 1 } else { 3 };
        let mut net = build_network(&NetworkConfig::mini(channels), trial).unwrap();
        net.zero_parameters();
        let n = 1 + rng.below(3) as usize;
        let h = 4 + rng.below(20) as usize;
        let w = 4 + rng.below(20) as usize;
        let y = gaussian(Shape4::new(n, channels, h, w), &mut rng);
        let out = net.forward(&y).unwrap();
        let same = out.as_slice().iter().zip(y.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits());
        assert!(same, "trial {trial}");
    }
}

#[test]
fn output_shape_matches_input_for_random_configs() {
    let mut rng = Rng::new(2);
    for trial in 0..30 {
        let cfg = NetworkConfig {
            in_channels: if rng.below(2) == 0 { 1 } else { 3 },
            extract_filters: 4 + rng.below(5) as usize,
            extract_kernel: [3, 5, 7][rng.below(3) as usize],
            shrink_channels: 2 + rng.below(4) as usize,
            block_channels_reduced: 2 + rng.below(4) as usize,
            num_blocks: 1 + rng.below(5) as usize,
            variant: KrBlockVariant::ALL[trial % 3],
            recon_filters: 2 + rng.below(5) as usize,
            mini: true,
        };
        let mut net = build_network(&cfg, trial as u64).unwrap();
        let h = 8 + rng.below(57) as usize;
        let w = 8 + rng.below(57) as usize;
        let y = gaussian(Shape4::new(2, cfg.in_channels, h, w), &mut rng);
        let out = net.forward(&y).unwrap();
        assert_eq!(out.shape(), y.shape(), "trial {trial} {cfg:?}");
        assert!(out.is_finite());
    }
}

#[test]
fn mini_network_shapes() {
    let mut net = build_network(&NetworkConfig::mini(1), 0).unwrap();
    let y = gaussian(Shape4::new(1, 1, 16, 16), &mut Rng::new(0));
    assert_eq!(net.forward(&y).unwrap().shape(), y.shape());
    let y = gaussian(Shape4::new(2, 1, 20, 20), &mut Rng::new(1));
    let out = net.forward(&y).unwrap();
    assert_eq!(out.shape(), Shape4::new(2, 1, 20, 20));
    assert!(out.is_finite());
}

#[test]
fn default_volumes() {
    let gray = build_network(&NetworkConfig::default(), 0).unwrap();
    for unit in &gray.extract {
        assert_eq!(unit.conv.kernel(), 7);
        assert_eq!(unit.conv.n_out(), 128);
    }
    assert_eq!(gray.extract[0].conv.c_in(), 1);
    assert_eq!(gray.blocks.len(), 4);
    assert_eq!(gray.recon_deconv.n_out(), 1);

    let color = build_network(&NetworkConfig::color(), 0).unwrap();
    assert_eq!(color.extract[0].conv.c_in(), 3);
    assert_eq!(color.extract[0].conv.n_out(), 128);
    assert!(color.recon_deconv.is_transposed());
    assert_eq!(color.recon_deconv.kernel(), 3);
    assert_eq!(color.recon_deconv.n_out(), 3);
}

#[test]
fn receptive_field_of_default_network() {
    let cfg = NetworkConfig::default();
    let rf = receptive_field(&cfg);
    assert_eq!(rf, 49);
    assert_eq!(build_network(&cfg, 0).unwrap().receptive_field(), rf);
    assert!(rf < 65);
}

#[test]
fn same_seed_same_network() {
    let cfg = NetworkConfig::mini(3);
    let a = build_network(&cfg, 4).unwrap();
    let b = build_network(&cfg, 4).unwrap();
    let c = build_network(&cfg, 5).unwrap();
    let bits = |n: &krnet_core::Network| -> Vec<u64> {
        n.params().iter().flat_map(|p| p.value.iter().map(|v| v.to_bits())).collect()
    };
    assert_eq!(bits(&a), bits(&b));
    assert_ne!(bits(&a), bits(&c));
    let ids: Vec<usize> = a.params().iter().map(|p| p.id).collect();
    assert_eq!(ids, (0..ids.len()).collect::<Vec<_>>());
}

#[test]
fn invalid_config_names_the_field() {
    let cfg = NetworkConfig {
        num_blocks: 0,
        ..NetworkConfig::mini(1)
    };
    match build_network(&cfg, 0) {
        Err(Error::Config(msg)) => assert!(msg.contains("num_blocks"), "{msg}"),
        other => panic!("expected config error, got {:?}", other.map(|_| ())),
    }
    let cfg = NetworkConfig {
        extract_filters: 16,
        ..NetworkConfig::default()
    };
    match build_network(&cfg, 0) {
        Err(Error::Config(msg)) => assert!(msg.contains("extract_filters"), "{msg}"),
        other => panic!("expected config error, got {:?}", other.map(|_| ())),
    }
}

#[test]
fn wrong_channel_count_is_a_config_error() {
    let mut net = build_network(&NetworkConfig::mini(1), 0).unwrap();
    let y = Tensor4::zeros(Shape4::new(1, 3, 8, 8)).unwrap();
    assert!(matches!(net.forward(&y), Err(Error::Config(_))));
}

fn randomize(unit: &mut CompositeUnit, rng: &mut Rng) {
    for p in unit.params_mut() {
        p.value.iter_mut().for_each(|v| *v = 0.5 * rng.gaussian());
    }
}

fn unit_by_hand(unit: &CompositeUnit, x: &Tensor4) -> Tensor4 {
    let c = conv2d_forward(x, &unit.conv).unwrap();
    let mut bn = unit.bn.clone();
    let (b, _) = batchnorm_forward(&c, &mut bn).unwrap();
    prelu_forward(&b, &unit.act).unwrap()
}

#[test]
fn block_with_silent_small_unit_matches_manual_composition() {
    let mut rng = Rng::new(13);
    for variant in KrBlockVariant::ALL {
        let mut block = KrBlock::new(4, 3, variant).unwrap();
        for unit in block.units_mut() {
            randomize(unit, &mut rng);
        }
        block.small.conv.weight.value.iter_mut().for_each(|v| *v = 0.0);
        block.small.conv.bias.value.iter_mut().for_each(|v| *v = 0.0);
        let x = gaussian(Shape4::new(2, 4, 9, 7), &mut rng);

        let r = unit_by_hand(&block.reduce, &x);
        let l = unit_by_hand(&block.large, &r);
        // Small unit sees only zeros: BN yields β, PReLU maps it per channel.
        let constant: Vec<f64> = block
            .small
            .bn
            .beta
            .value
            .iter()
            .zip(&block.small.act.alpha.value)
            .map(|(&b, &a)| if b >= 0.0 { b } else { a * b })
            .collect();
        let plane = l.shape().plane();
        let blended = Tensor4::from_fn(l.shape(), |i| l.as_slice()[i] + constant[(i / plane) % 3]).unwrap();
        let expected = unit_by_hand(&block.expand, &blended);

        let got = kr_block_forward(&mut block, &x).unwrap();
        assert_eq!(got.shape(), x.shape());
        for (a, b) in got.as_slice().iter().zip(expected.as_slice()) {
            assert!((a - b).abs() < 1e-12, "{variant:?}: {a} vs {b}");
        }
    }
}

#[test]
fn zeroed_block_outputs_zeros() {
    let mut rng = Rng::new(14);
    let mut block = KrBlock::new(4, 2, KrBlockVariant::Kr73).unwrap();
    for unit in block.units_mut() {
        for p in unit.params_mut() {
            p.value.iter_mut().for_each(|v| *v = 0.0);
        }
    }
    let x = gaussian(Shape4::new(2, 4, 6, 6), &mut rng);
    assert!(kr_block_forward(&mut block, &x).unwrap().as_slice().iter().all(|&v| v == 0.0));
}

#[test]
fn variants_share_shapes_and_differ_only_in_kernel_area() {
    let x = gaussian(Shape4::new(2, 4, 11, 9), &mut Rng::new(15));
    let (c, cr) = (4, 3);
    for variant in KrBlockVariant::ALL {
        let mut block = KrBlock::new(c, cr, variant).unwrap();
        assert_eq!(kr_block_forward(&mut block, &x).unwrap().shape(), x.shape());
        let (kl, ks) = variant.kernels();
        let count: usize = block.params().iter().map(|p| p.len()).sum();
        // Four units: conv weights + bias, γ, β, α per output channel.
        let expected = c * cr + cr * cr * (kl * kl + ks * ks) + cr * c + 4 * (3 * cr) + 4 * c;
        assert_eq!(count, expected, "{variant:?}");
    }
}

#[test]
fn silencing_a_block_makes_its_skip_pass_through() {
    let cfg = NetworkConfig {
        num_blocks: 2,
        ..NetworkConfig::mini(1)
    };
    let mut net = build_network(&cfg, 3).unwrap();
    let expand = &mut net.blocks[1].expand;
    expand.conv.weight.value.iter_mut().for_each(|v| *v = 0.0);
    expand.conv.bias.value.iter_mut().for_each(|v| *v = 0.0);
    expand.bn.beta.value.iter_mut().for_each(|v| *v = 0.0);
    let mut shorter = net.clone();
    shorter.blocks.truncate(1);
    let y = gaussian(Shape4::new(2, 1, 12, 12), &mut Rng::new(16));
    let a = net.forward(&y).unwrap();
    let b = shorter.forward(&y).unwrap();
    assert!(a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn backward_requires_forward() {
    let mut net = build_network(&NetworkConfig::mini(1), 0).unwrap();
    let g = Tensor4::zeros(Shape4::new(1, 1, 8, 8)).unwrap();
    assert!(matches!(net.backward(&g), Err(Error::State(_))));
    net.forward(&g).unwrap();
    net.clear_cache();
    assert!(matches!(net.backward(&g), Err(Error::State(_))));
}

#[test]
fn zero_upstream_gradient_gives_zero_grads() {
    let mut net = build_network(&NetworkConfig::mini(1), 0).unwrap();
    let y = gaussian(Shape4::new(2, 1, 10, 10), &mut Rng::new(17));
    net.forward(&y).unwrap();
    net.backward(&Tensor4::zeros(y.shape()).unwrap()).unwrap();
    assert!(net.params().iter().all(|p| p.grad.iter().all(|&g| g == 0.0)));
}

#[test]
fn backward_accumulates() {
    let mut net = build_network(&NetworkConfig::mini(1), 0).unwrap();
    let mut rng = Rng::new(18);
    let y = gaussian(Shape4::new(2, 1, 10, 10), &mut rng);
    let g = gaussian(y.shape(), &mut rng);
    net.forward(&y).unwrap();
    net.backward(&g).unwrap();
    let once: Vec<Vec<f64>> = net.params().iter().map(|p| p.grad.clone()).collect();
    net.forward(&y).unwrap();
    net.backward(&g).unwrap();
    for (p, first) in net.params().iter().zip(&once) {
        for (twice, single) in p.grad.iter().zip(first) {
            assert_eq!(*twice, 2.0 * single);
        }
    }
}
