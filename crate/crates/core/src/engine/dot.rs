//! Graphviz export.

use std::fmt::Write;

use crate::cospan::ExtendedCospan;
use crate::graph::{EdgeId, Elem, Nesting};

/// Deterministic DOT text. Vertices are points, generator edges are boxes,
/// every e-box is a dashed cluster holding one dashed sub-cluster per
/// component, and dotted arrows join each e-box port to the matching inner
/// interface vertex of every component. Inputs are ranked as sources and
/// outputs as sinks.
pub fn export_dot(c: &ExtendedCospan) -> String {
    let g = &c.carrier;
    let mut out = String::new();
    out.push_str("digraph ehyp {\n  rankdir=LR;\n  node [fontname=\"Helvetica\"];\n");
    emit_level(c, None, 1, &mut out);
    for e in g.edges().filter(|&e| !g.label(e).is_hierarchical()) {
        for (i, v) in g.sources(e).iter().enumerate() {
            let _ = writeln!(out, "  {v} -> {e} [headlabel=\"{i}\"];");
        }
        for (i, v) in g.targets(e).iter().enumerate() {
            let _ = writeln!(out, "  {e} -> {v} [taillabel=\"{i}\"];");
        }
    }
    for bx in g.hierarchical_edges() {
        for k in g.component_ids(bx) {
            let n = Nesting { parent: bx, component: k };
            for (s, v) in g.sources(bx).iter().zip(c.component_inputs(n)) {
                let _ = writeln!(out, "  {s} -> {v} [style=dotted, arrowhead=none];");
            }
            for (t, v) in g.targets(bx).iter().zip(c.component_outputs(n)) {
                let _ = writeln!(out, "  {v} -> {t} [style=dotted, arrowhead=none];");
            }
        }
    }
    let rank = |vs: Vec<_>, kind: &str, out: &mut String| {
        if !vs.is_empty() {
            let names: Vec<String> = vs.iter().map(|v| format!("{v};")).collect();
            let _ = writeln!(out, "  {{ rank={kind}; {} }}", names.join(" "));
        }
    };
    let ins = c.inputs();
    let outs: Vec<_> = c.outputs().into_iter().filter(|v| !ins.contains(v)).collect();
    rank(ins, "source", &mut out);
    rank(outs, "sink", &mut out);
    out.push_str("}\n");
    out
}

fn emit_level(c: &ExtendedCospan, level: Option<Nesting>, depth: usize, out: &mut String) {
    let g = &c.carrier;
    let pad = "  ".repeat(depth);
    let (ins, outs) = (c.inputs(), c.outputs());
    for x in g.elems().filter(|&x| g.nesting(x) == level) {
        match x {
            Elem::Vertex(v) => {
                let mut label = String::new();
                if let Some(i) = ins.iter().position(|w| *w == v) {
                    let _ = write!(label, "in{i}");
                }
                if let Some(o) = outs.iter().position(|w| *w == v) {
                    if !label.is_empty() {
                        label.push('/');
                    }
                    let _ = write!(label, "out{o}");
                }
                let _ = writeln!(out, "{pad}{v} [shape=point, xlabel=\"{label}\"];");
            }
            Elem::Edge(e) if g.label(e).is_hierarchical() => emit_box(c, e, depth, out),
            Elem::Edge(e) => {
                let _ = writeln!(out, "{pad}{e} [shape=box, label=\"{}\"];", g.label(e));
            }
        }
    }
}

fn emit_box(c: &ExtendedCospan, bx: EdgeId, depth: usize, out: &mut String) {
    let g = &c.carrier;
    let pad = "  ".repeat(depth);
    let _ = writeln!(out, "{pad}subgraph cluster_{bx} {{");
    let _ = writeln!(out, "{pad}  style=dashed;\n{pad}  label=\"{bx}\";");
    for k in g.component_ids(bx) {
        let _ = writeln!(out, "{pad}  subgraph cluster_{bx}_{k} {{");
        let _ = writeln!(out, "{pad}    style=dashed;\n{pad}    label=\"{k}\";");
        emit_level(c, Some(Nesting { parent: bx, component: k }), depth + 2, out);
        let _ = writeln!(out, "{pad}  }}");
    }
    let _ = writeln!(out, "{pad}}}");
}
