use attonet_core::arch::{bind_channels, BoundLayer, ConvSpec, LayerId, LayerSpec, ModulePart, TensorShape};
use attonet_core::complexity::{analyze, count_mult_adds, count_params, layer_params};
use attonet_core::zoo::{build_attonet, Variant};

#[test]
fn pointwise_mult_adds_at_56() {
    let net = build_attonet(Variant::A);
    let report = analyze(&net).unwrap();
    let decompress = report
        .per_layer
        .iter()
        .find(|c| c.layer == LayerId::module(0, ModulePart::Decompress))
        .unwrap();
    // Module 1 of A: mix 16 is the input, not compress 8; check the shortcut.
    let shortcut = report
        .per_layer
        .iter()
        .find(|c| c.layer == LayerId::module(0, ModulePart::Shortcut))
        .unwrap();
    assert_eq!(decompress.params, 16 * 176);
    assert_eq!(decompress.mult_adds, 16 * 176 * 56 * 56);
    assert_eq!(shortcut.params, 8 * 176);
    assert_eq!(shortcut.mult_adds, 4_415_488);
}

#[test]
fn unit_spatial_output_mult_adds_equal_weights() {
    let layer = BoundLayer {
        id: LayerId::StemConv,
        spec: LayerSpec::Conv(ConvSpec::pointwise(176, 1)),
        in_channels: 8,
        out_channels: 176,
    };
    assert_eq!(layer_params(&layer), 1408);
    let report = analyze(&build_attonet(Variant::B)).unwrap();
    let dense = report.per_layer.iter().find(|c| c.layer == LayerId::HeadDense).unwrap();
    assert_eq!(dense.mult_adds + 51, dense.params);
}

#[test]
fn resolution_scaling() {
    for v in Variant::ALL {
        let net = build_attonet(v);
        let bound = bind_channels(&net).unwrap();
        let base = count_mult_adds(&bound, TensorShape::new(3, 224, 224)).unwrap();
        let wide = net.at_input(TensorShape::new(3, 448, 448)).unwrap();
        assert_eq!(
            wide.head.pool,
            LayerSpec::AvgPool(attonet_core::arch::PoolSpec {
                kernel: [14, 14],
                stride: 1,
                pad: 0
            })
        );
        let double = analyze(&wide).unwrap();
        assert_eq!(base.total_params, double.total_params);
        assert_eq!(base.total_params, count_params(&bound).total_params);
        for (a, b) in base.per_layer.iter().zip(&double.per_layer) {
            if a.layer == LayerId::HeadDense {
                continue;
            }
            assert_eq!(b.mult_adds, 4 * a.mult_adds, "{v} {}", a.layer);
        }
    }
}

#[test]
fn complexity_decreases_across_family() {
    let reports: Vec<_> = Variant::ALL
        .iter()
        .map(|&v| analyze(&build_attonet(v)).unwrap())
        .collect();
    for w in reports.windows(2) {
        assert!(w[0].total_params > w[1].total_params);
        assert!(w[0].total_mult_adds > w[1].total_mult_adds);
    }
}

#[test]
fn totals_are_sums_of_layers() {
    let r = analyze(&build_attonet(Variant::C)).unwrap();
    assert_eq!(r.total_params, r.per_layer.iter().map(|c| c.params).sum::<u64>());
    assert_eq!(r.total_mult_adds, r.per_layer.iter().map(|c| c.mult_adds).sum::<u64>());
    let n_layers = bind_channels(&build_attonet(Variant::C)).unwrap().layers().count();
    assert_eq!(r.per_layer.len(), n_layers);
}

#[test]
fn bias_and_normalization_add_exact_counts() {
    let net = build_attonet(Variant::D);
    let base = analyze(&net).unwrap();
    let conv_out: u64 = {
        let bound = bind_channels(&net).unwrap();
        bound
            .layers()
            .filter_map(|l| l.spec.as_conv().map(|c| c.out as u64))
            .sum()
    };
    let biased = analyze(&net.with_conv_bias(true)).unwrap();
    assert_eq!(biased.total_params, base.total_params + conv_out);
    assert_eq!(biased.total_mult_adds, base.total_mult_adds);
    let normed = analyze(&net.with_normalization(true)).unwrap();
    assert_eq!(normed.total_params, base.total_params + 2 * conv_out);
}
