//! Canonical text emission for models.
//!
//! `parse_model(format_model(m))` is structurally equal to `m`, and
//! formatting is idempotent. The canonical form is also the body
//! fingerprint used to decide Inherited vs Overridden lock status.

use std::fmt::Write as _;

use crate::behavior::{Assign, BehaviorDef, Expr, NodeAction, Transition, TransitionKind};
use crate::model::{AttributeDef, BlockDef, BlockKind, FunctionDef, IoDirection, Model, Param};
use crate::DSL_VERSION;

/// Canonical text for a resolved model.
pub fn format_model(model: &Model) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "// modat {DSL_VERSION}");
    for def in model.blocks.values() {
        out.push('\n');
        format_block(&mut out, model, def);
    }
    if !model.system_functions.is_empty() {
        out.push('\n');
        out.push_str("system {\n");
        for f in &model.system_functions {
            let _ = writeln!(out, "  function {}({})", f.name, format_params(&f.params));
        }
        out.push_str("}\n");
    }
    out.push('\n');
    let _ = writeln!(out, "root {}: {}", model.root.instance, model.root.block);
    out
}

fn format_block(out: &mut String, model: &Model, def: &BlockDef) {
    let base_fn_names: Vec<String> = match model.base_of(def) {
        Some(base) => model.effective_functions(base).into_iter().map(|(f, _)| f.name).collect(),
        None => Vec::new(),
    };
    match &def.base {
        Some(base) => {
            let _ = write!(out, "variant {} of {}", def.name, base);
        }
        None => {
            let _ = write!(out, "block {} kind ", def.name);
            match def.kind {
                BlockKind::Component => {
                    out.push_str("component");
                    if let Some((ty, io)) = def.signal_io {
                        let dir = if io == IoDirection::Input { "in" } else { "out" };
                        let _ = write!(out, " {dir} {ty}");
                    }
                }
                BlockKind::Composite | BlockKind::System => out.push_str("composite"),
            }
        }
    }
    if def.parts.is_empty() && def.attributes.is_empty() && def.functions.is_empty() {
        out.push_str(" {}\n");
        return;
    }
    out.push_str(" {\n");
    for part in &def.parts {
        let _ = writeln!(out, "  part {}: {}", part.name, part.block);
    }
    for attr in &def.attributes {
        format_attr(out, attr);
    }
    for f in &def.functions {
        let marker = if base_fn_names.contains(&f.name) { "override " } else { "" };
        format_function(out, f, marker);
    }
    out.push_str("}\n");
}

fn format_attr(out: &mut String, attr: &AttributeDef) {
    let _ = writeln!(out, "  attr {}: {} = {}", attr.name, attr.ty, attr.initial);
}

fn format_params(params: &[Param]) -> String {
    params.iter().map(|p| format!("{}: {}", p.name, p.ty)).collect::<Vec<_>>().join(", ")
}

fn format_function(out: &mut String, f: &FunctionDef, marker: &str) {
    let _ = write!(out, "  {marker}function {}({})", f.name, format_params(&f.params));
    match &f.body {
        None => out.push('\n'),
        Some(body) => {
            out.push_str(" {\n");
            format_behavior(out, body);
            out.push_str("  }\n");
        }
    }
}

fn format_behavior(out: &mut String, body: &BehaviorDef) {
    let lanes: Vec<String> = body.lanes.iter().map(|l| l.name.to_string()).collect();
    let _ = writeln!(out, "    lanes {}", lanes.join(", "));
    for node in &body.nodes {
        let _ = write!(out, "    node {}: ", node.id);
        match &node.action {
            NodeAction::Call { target, function, args, .. } => {
                let args: Vec<String> = args.iter().map(format_expr).collect();
                let _ = write!(out, "call {target}.{function}({})", args.join(", "));
            }
            NodeAction::Set { assigns } => {
                let _ = write!(out, "set {}", format_assign(&assigns[0]));
            }
        }
        if !node.entry_ops.is_empty() {
            let _ = write!(out, " entry {}", format_assign_list(&node.entry_ops));
        }
        if !node.exit_ops.is_empty() {
            let _ = write!(out, " exit {}", format_assign_list(&node.exit_ops));
        }
        out.push('\n');
    }
    for t in &body.transitions {
        format_transition(out, t);
    }
}

fn format_transition(out: &mut String, t: &Transition) {
    let _ = write!(out, "    {} -> {}", t.source, t.target);
    match &t.kind {
        None => {}
        Some(TransitionKind::Completion) => out.push_str(" on completion"),
        Some(TransitionKind::Condition { cond, policy }) => {
            let _ = write!(out, " when {cond}");
            if let Some(p) = policy {
                let _ = write!(out, " policy {}", p.keyword());
            }
        }
    }
    if !t.ops.is_empty() {
        let _ = write!(out, " do {}", format_assign_list(&t.ops));
    }
    out.push('\n');
}

fn format_assign_list(assigns: &[Assign]) -> String {
    assigns.iter().map(format_assign).collect::<Vec<_>>().join(", ")
}

fn format_assign(a: &Assign) -> String {
    format!("{}.{} := {}", a.path, a.attr, format_expr(&a.value))
}

fn format_expr(e: &Expr) -> String {
    e.to_string()
}

/// Canonical fingerprint of one function definition (signature + body),
/// independent of where it was declared. Two definitions compare equal
/// structurally iff their fingerprints match.
pub fn function_fingerprint(f: &FunctionDef) -> String {
    let mut out = String::new();
    format_function(&mut out, f, "");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_model;

    const SAMPLE: &str = "\
block Valve kind component out BOOL {}
block Sensor kind component in INT {}
block Rig kind composite {
  part v: Valve
  part s: Sensor
  attr count: INT
  function go(limit: INT) {
    lanes self, v, s
    node n1: call v.setSignal(TRUE) entry self.count := 0 exit self.count := 1
    node n2: set self.count := 2
    start -> n1 do self.count := 9
    n1 -> n2 on completion
    n2 -> end when s.Signal >= limit policy restart
  }
}
variant BigRig of Rig {
  attr count: INT = 5
  override function go(limit: INT) {
    lanes self
    node n1: set self.count := 3
    start -> n1
    n1 -> end on completion
  }
}
root rig: BigRig
";

    #[test]
    fn round_trips_structurally() {
        let m1 = parse_model(SAMPLE, "s.modat").unwrap();
        let text = format_model(&m1);
        let m2 = parse_model(&text, "s.modat").unwrap();
        assert_eq!(m1, m2, "formatted text:\n{text}");
    }

    #[test]
    fn formatting_is_idempotent() {
        let m1 = parse_model(SAMPLE, "s.modat").unwrap();
        let once = format_model(&m1);
        let twice = format_model(&parse_model(&once, "s.modat").unwrap());
        assert_eq!(once, twice);
    }

    #[test]
    fn override_marker_is_recomputed() {
        // mislabelled input: `go` is an override but written plain, and the
        // formatter corrects the marker without changing structure
        let m = parse_model(SAMPLE, "s.modat").unwrap();
        let text = format_model(&m);
        assert!(text.contains("override function go"), "{text}");
    }

    #[test]
    fn fingerprints_separate_bodies() {
        let m = parse_model(SAMPLE, "s.modat").unwrap();
        let base_go = m.block("Rig").unwrap().function("go").unwrap();
        let var_go = m.block("BigRig").unwrap().function("go").unwrap();
        assert_ne!(function_fingerprint(base_go), function_fingerprint(var_go));
        assert_eq!(function_fingerprint(base_go), function_fingerprint(&base_go.clone()));
    }
}
