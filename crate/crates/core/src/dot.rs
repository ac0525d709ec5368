//! Graphviz export: one node per layer, main-path and shortcut edges.

use std::fmt::Write;

use crate::arch::{BoundLayer, BoundNetwork, LayerSpec};

fn label(layer: &BoundLayer) -> String {
    let (groups, stride) = match &layer.spec {
        LayerSpec::Conv(c) => (c.groups, c.stride),
        other => (1, other.stride()),
    };
    format!(
        "{}/{}/{}/{}",
        layer.spec.kind_name(),
        layer.out_channels,
        groups,
        stride
    )
}

/// `digraph` text for `net`. Node labels read `kind/out/groups/stride`.
/// A module's output feeds the next consumers from both its decompression
/// layer and its shortcut.
pub fn to_dot(net: &BoundNetwork) -> String {
    let mut out = String::new();
    let name = net.spec.name.replace('"', "'");
    writeln!(out, "digraph \"{name}\" {{").unwrap();
    writeln!(out, "  rankdir=TB;").unwrap();
    writeln!(out, "  node [shape=box];").unwrap();
    for layer in net.layers() {
        writeln!(out, "  \"{}\" [label=\"{}\"];", layer.id, label(layer)).unwrap();
    }

    let mut edge = |from: &BoundLayer, to: &BoundLayer, style: &str| {
        writeln!(out, "  \"{}\" -> \"{}\"{style};", from.id, to.id).unwrap();
    };
    edge(&net.stem_conv, &net.stem_pool, "");
    let mut sources = vec![&net.stem_pool];
    for m in &net.modules {
        for &s in &sources {
            edge(s, &m.compress, "");
            edge(s, &m.shortcut, " [style=dashed]");
        }
        let path = m.main_path();
        for pair in path.windows(2) {
            edge(pair[0], pair[1], "");
        }
        sources = vec![&m.decompress, &m.shortcut];
    }
    for &s in &sources {
        edge(s, &net.head_pool, "");
    }
    edge(&net.head_pool, &net.head_dense, "");
    edge(&net.head_dense, &net.head_softmax, "");
    out.push_str("}\n");
    out
}
