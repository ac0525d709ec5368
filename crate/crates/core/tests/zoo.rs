use attonet_core::arch::{validate, LayerSpec, ModuleType, TensorShape};
use attonet_core::zoo::{build_attonet, build_attonet_with, build_prototype, GroupNotation, PrototypeConfig, Variant};

fn conv(layer: &LayerSpec) -> (usize, usize, usize, [usize; 2]) {
    let c = layer.as_conv().expect("conv layer");
    (c.out, c.groups, c.stride, c.kernel)
}

#[test]
fn sixteen_modules_with_projections_at_stage_starts() {
    for v in Variant::ALL {
        let net = build_attonet(v);
        assert_eq!(net.modules.len(), 16);
        let b: Vec<usize> = net
            .modules
            .iter()
            .enumerate()
            .filter(|(_, m)| m.module_type == ModuleType::B)
            .map(|(i, _)| i + 1)
            .collect();
        assert_eq!(b, [1, 4, 8, 14], "{v}");
        for m in &net.modules {
            let identity = matches!(m.shortcut, LayerSpec::Identity);
            assert_eq!(identity, m.module_type == ModuleType::A);
        }
    }
}

#[test]
fn layer_count_is_shared_across_variants() {
    let counts: Vec<usize> = Variant::ALL
        .iter()
        .map(|&v| build_attonet(v).weighted_layer_count())
        .collect();
    assert!(counts.windows(2).all(|w| w[0] == w[1]), "{counts:?}");
    // Stem conv, 16 × (4 main-path convs), 4 projections, dense.
    assert_eq!(counts[0], 1 + 16 * 4 + 4 + 1);
}

#[test]
fn attonet_a_module1_matches_table() {
    let net = build_attonet(Variant::A);
    let m = &net.modules[0];
    assert_eq!(conv(&m.compress), (8, 1, 1, [1, 1]));
    let (out, _, stride, kernel) = conv(&m.group_conv);
    assert_eq!((out, stride, kernel), (32, 1, [3, 3]));
    assert_eq!(conv(&m.mix), (16, 1, 1, [1, 1]));
    assert_eq!(conv(&m.decompress), (176, 1, 1, [1, 1]));
    assert_eq!(conv(&m.shortcut), (176, 1, 1, [1, 1]));

    let literal = build_attonet_with(Variant::A, GroupNotation::Groups);
    assert_eq!(conv(&literal.modules[0].group_conv), (32, 4, 1, [3, 3]));
    let multiplier = build_attonet_with(Variant::A, GroupNotation::ChannelMultiplier);
    assert_eq!(conv(&multiplier.modules[0].group_conv), (32, 8, 1, [3, 3]));
}

#[test]
fn attonet_d_stem_and_uneven_first_module() {
    let net = build_attonet(Variant::D);
    assert_eq!(conv(&net.stem.conv), (3, 1, 2, [7, 7]));
    assert_eq!(net.stem.conv.as_conv().unwrap().pad, 3);
    let literal = build_attonet_with(Variant::D, GroupNotation::Groups);
    let report = validate(&literal);
    assert!(report.is_valid(), "{:?}", report.issues);
    assert!(report.warnings().count() > 0);
}

#[test]
fn attonet_c_module14_is_strided_projection() {
    let net = build_attonet_with(Variant::C, GroupNotation::Groups);
    let m = &net.modules[13];
    assert_eq!(m.module_type, ModuleType::B);
    let (out, groups, stride, _) = conv(&m.group_conv);
    assert_eq!((out, groups, stride), (134, 2, 2));
    assert_eq!(m.shortcut.stride(), 2);
}

#[test]
fn default_prototype() {
    let net = build_prototype(&PrototypeConfig::default());
    assert_eq!(net.modules.len(), 16);
    assert!(net.modules.iter().all(|m| m.free));
    assert_eq!(net.input_shape, TensorShape::new(3, 224, 224));
    assert_eq!(net.head.softmax, LayerSpec::Softmax);
    assert!(matches!(&net.head.dense, LayerSpec::Dense(d) if d.out == 51));
    assert!(validate(&net).is_valid());
}

#[test]
fn minimal_prototype() {
    let net = build_prototype(&PrototypeConfig {
        num_modules: 1,
        ..Default::default()
    });
    assert_eq!(net.modules.len(), 1);
    assert_eq!(net.modules[0].module_type, ModuleType::B);
    let report = validate(&net);
    assert!(report.is_valid(), "{:?}", report.issues);
}

#[test]
fn prototype_sizes_validate() {
    for n in 1..=24 {
        let net = build_prototype(&PrototypeConfig {
            num_modules: n,
            ..Default::default()
        });
        assert!(validate(&net).is_valid(), "{n} modules");
    }
}

#[test]
fn build_is_stable() {
    for v in Variant::ALL {
        assert_eq!(build_attonet(v).to_json(), build_attonet(v).to_json());
    }
}
