//! Simulation scenarios: one root invocation, scripted sensor inputs,
//! per-cycle assertions, and a cycle bound.
//!
//! Scenario files are resolved against their companion model at parse time:
//! unknown paths, literal type mismatches, io-direction violations, and
//! out-of-bounds assertion cycles are all rejected here so the simulator can
//! run unchecked.

use std::fmt;

use crate::behavior::CmpOp;
use crate::diag::Diagnostic;
use crate::lexer::{lex, Tok};
use crate::model::{IoDirection, Model, ObjectInstance, TypeTag, Value};
use crate::parser::Cursor;
use crate::span::Span;

#[derive(Clone, Debug, PartialEq)]
pub struct Invocation {
    /// Instance path of the invoked object (dotted, from the root name).
    pub path: String,
    pub function: String,
    pub args: Vec<Value>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InputEvent {
    pub cycle: u64,
    /// Instance path of the driven component.
    pub path: String,
    pub attr: String,
    pub value: Value,
    pub span: Span,
}

impl InputEvent {
    pub fn var_key(&self) -> String {
        format!("{}.{}", self.path, self.attr)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScnOperand {
    Lit(Value),
    Attr { path: String, attr: String },
}

impl ScnOperand {
    pub fn var_key(&self) -> Option<String> {
        match self {
            ScnOperand::Lit(_) => None,
            ScnOperand::Attr { path, attr } => Some(format!("{path}.{attr}")),
        }
    }
}

impl fmt::Display for ScnOperand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScnOperand::Lit(v) => write!(f, "{v}"),
            ScnOperand::Attr { path, attr } => write!(f, "{path}.{attr}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Assertion {
    pub cycle: u64,
    pub lhs: ScnOperand,
    pub op: CmpOp,
    pub rhs: ScnOperand,
    pub span: Span,
}

impl fmt::Display for Assertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.op.symbol(), self.rhs)
    }
}

impl Assertion {
    /// Evaluates against a cycle-end variable snapshot.
    pub fn eval(&self, lookup: &dyn Fn(&str) -> Option<Value>) -> bool {
        let value = |op: &ScnOperand| match op {
            ScnOperand::Lit(v) => Some(*v),
            ScnOperand::Attr { .. } => lookup(&op.var_key().unwrap()),
        };
        match (value(&self.lhs), value(&self.rhs)) {
            (Some(a), Some(b)) => compare_values(self.op, a, b).unwrap_or(false),
            _ => false,
        }
    }
}

/// Strict two-valued comparison; `None` when the type tags differ or an
/// ordering operator meets BOOL.
pub fn compare_values(op: CmpOp, a: Value, b: Value) -> Option<bool> {
    if a.type_tag() != b.type_tag() {
        return None;
    }
    let ord = match (a, b) {
        (Value::Bool(x), Value::Bool(y)) => {
            return match op {
                CmpOp::Eq => Some(x == y),
                CmpOp::Ne => Some(x != y),
                _ => None,
            };
        }
        (Value::Int(x), Value::Int(y)) => x.cmp(&y),
        (Value::Time(x), Value::Time(y)) => x.cmp(&y),
        (Value::Real(x), Value::Real(y)) => x.partial_cmp(&y)?,
        _ => unreachable!("tags checked above"),
    };
    Some(match op {
        CmpOp::Eq => ord.is_eq(),
        CmpOp::Ne => !ord.is_eq(),
        CmpOp::Lt => ord.is_lt(),
        CmpOp::Le => ord.is_le(),
        CmpOp::Gt => ord.is_gt(),
        CmpOp::Ge => ord.is_ge(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub invocation: Invocation,
    pub inputs: Vec<InputEvent>,
    pub assertions: Vec<Assertion>,
    pub max_cycles: u64,
}

impl Scenario {
    /// Input events latched at the start of `cycle`, with their variable keys.
    pub fn inputs_for_cycle(&self, cycle: u64) -> Vec<(&InputEvent, String)> {
        self.inputs.iter().filter(|i| i.cycle == cycle).map(|i| (i, i.var_key())).collect()
    }
}

/// Parses a `.scn` file against its companion model.
pub fn parse_scenario(text: &str, file: &str, model: &Model) -> Result<Scenario, Vec<Diagnostic>> {
    let toks = lex(text, file).map_err(|d| vec![d])?;
    let mut cur = Cursor::new(toks);
    let tree = model.instantiate_root().map_err(|e| {
        vec![Diagnostic::error("E301", format!("model cannot be instantiated: {e}"), Span::synthetic())]
    })?;

    let mut diags: Vec<Diagnostic> = Vec::new();
    let mut invocation: Option<Invocation> = None;
    let mut inputs = Vec::new();
    let mut assertions = Vec::new();
    let mut max_cycles: Option<(u64, Span)> = None;

    let result: Result<(), Diagnostic> = (|| {
        loop {
            match cur.peek() {
                Tok::Eof => return Ok(()),
                Tok::KwInvoke => {
                    let kw = cur.bump();
                    let inv = parse_invocation(&mut cur, kw.span, model, &tree, &mut diags)?;
                    if invocation.is_some() {
                        diags.push(Diagnostic::error(
                            "E306",
                            "scenario declares more than one `invoke`",
                            inv.span.clone(),
                        ));
                    }
                    invocation = Some(inv);
                }
                Tok::KwAt => {
                    cur.bump();
                    let cycle_span = cur.span();
                    let cycle = parse_cycle_index(&mut cur)?;
                    match cur.peek() {
                        Tok::KwSet => {
                            cur.bump();
                            let event = parse_input(&mut cur, cycle, model, &tree, &mut diags)?;
                            inputs.push(event);
                        }
                        Tok::KwExpect => {
                            cur.bump();
                            let assertion = parse_assertion(&mut cur, cycle, cycle_span, model, &tree, &mut diags)?;
                            assertions.push(assertion);
                        }
                        _ => return Err(cur.unexpected("expected `set` or `expect` after the cycle index")),
                    }
                }
                Tok::KwMaxcycles => {
                    let kw = cur.bump();
                    let n = parse_cycle_index(&mut cur)?;
                    if max_cycles.is_some() {
                        diags.push(Diagnostic::error("E306", "`maxcycles` is declared twice", kw.span.clone()));
                    }
                    max_cycles = Some((n, kw.span));
                }
                _ => return Err(cur.unexpected("expected scenario line (`invoke`, `at`, or `maxcycles`)")),
            }
        }
    })();
    if let Err(d) = result {
        diags.push(d);
    }

    let max_cycles = match max_cycles {
        Some((n, _)) => n,
        None => {
            diags.push(Diagnostic::error(
                "E306",
                "scenario is missing a `maxcycles` line",
                Span::new(std::sync::Arc::from(file), 1, 1, 1, 1),
            ));
            0
        }
    };
    let invocation = match invocation {
        Some(inv) => inv,
        None => {
            diags.push(Diagnostic::error(
                "E306",
                "scenario is missing an `invoke` line",
                Span::new(std::sync::Arc::from(file), 1, 1, 1, 1),
            ));
            Invocation { path: String::new(), function: String::new(), args: Vec::new(), span: Span::synthetic() }
        }
    };
    for a in &assertions {
        if a.cycle >= max_cycles {
            diags.push(Diagnostic::error(
                "E304",
                format!("assertion at cycle {} is outside maxcycles {}", a.cycle, max_cycles),
                a.span.clone(),
            ));
        }
    }
    for i in &inputs {
        if i.cycle >= max_cycles {
            diags.push(Diagnostic::error(
                "E304",
                format!("input at cycle {} is outside maxcycles {}", i.cycle, max_cycles),
                i.span.clone(),
            ));
        }
    }

    if diags.is_empty() {
        Ok(Scenario { invocation, inputs, assertions, max_cycles })
    } else {
        crate::diag::sort_diagnostics(&mut diags);
        Err(diags)
    }
}

fn parse_cycle_index(cur: &mut Cursor) -> Result<u64, Diagnostic> {
    match *cur.peek() {
        Tok::Int(v) if v >= 0 => {
            cur.bump();
            Ok(v as u64)
        }
        _ => Err(cur.unexpected("expected non-negative cycle index")),
    }
}

/// `a.b.c` — dotted identifier chain, returned with its span.
fn parse_dotted(cur: &mut Cursor) -> Result<(Vec<String>, Span), Diagnostic> {
    let (first, first_span) = cur.expect_ident("instance path")?;
    let mut segs = vec![first];
    let mut span = first_span;
    while cur.eat(&Tok::Dot) {
        let (seg, seg_span) = cur.expect_ident("path segment")?;
        segs.push(seg);
        span = span.merge(&seg_span);
    }
    Ok((segs, span))
}

fn parse_invocation(
    cur: &mut Cursor,
    kw_span: Span,
    model: &Model,
    tree: &ObjectInstance,
    diags: &mut Vec<Diagnostic>,
) -> Result<Invocation, Diagnostic> {
    let (mut segs, span) = parse_dotted(cur)?;
    let function = segs.pop().expect("dotted path has a segment");
    let path = segs.join(".");
    cur.expect(Tok::LParen)?;
    let mut args = Vec::new();
    if !cur.eat(&Tok::RParen) {
        loop {
            let lit_span = cur.span();
            let value = crate::parser::parse_literal(cur).map_err(|_| {
                Diagnostic::error("E302", "invocation arguments must be literals", lit_span.clone())
            })?;
            args.push((value, lit_span));
            if cur.eat(&Tok::RParen) {
                break;
            }
            cur.expect(Tok::Comma)?;
        }
    }
    let span = kw_span.merge(&span);

    let Some(instance) = tree.find(&path) else {
        diags.push(Diagnostic::error("E301", format!("unknown instance path `{path}`"), span.clone()));
        return Ok(Invocation { path, function, args: args.into_iter().map(|(v, _)| v).collect(), span });
    };
    let block = model.block(&instance.block).expect("instance block resolves");
    let iface = model.effective_functions(block);
    match iface.iter().find(|(f, _)| f.name == function) {
        None => diags.push(Diagnostic::error(
            "E307",
            format!("block `{}` has no function `{function}`", instance.block),
            span.clone(),
        )),
        Some((f, _)) => {
            if f.params.len() != args.len() {
                diags.push(Diagnostic::error(
                    "E305",
                    format!("`{function}` takes {} argument(s), {} given", f.params.len(), args.len()),
                    span.clone(),
                ));
            } else {
                for (param, (value, lit_span)) in f.params.iter().zip(&args) {
                    if param.ty != value.type_tag() {
                        diags.push(Diagnostic::error(
                            "E302",
                            format!("argument `{}` expects {}, got {}", param.name, param.ty, value.type_tag()),
                            lit_span.clone(),
                        ));
                    }
                }
            }
        }
    }
    Ok(Invocation { path, function, args: args.into_iter().map(|(v, _)| v).collect(), span })
}

fn parse_input(
    cur: &mut Cursor,
    cycle: u64,
    model: &Model,
    tree: &ObjectInstance,
    diags: &mut Vec<Diagnostic>,
) -> Result<InputEvent, Diagnostic> {
    let (mut segs, span) = parse_dotted(cur)?;
    let attr = segs.pop().expect("dotted path has a segment");
    let path = segs.join(".");
    cur.expect(Tok::Eq)?;
    let lit_span = cur.span();
    let value = crate::parser::parse_literal(cur)?;

    match tree.find(&path) {
        None => diags.push(Diagnostic::error("E301", format!("unknown instance path `{path}`"), span.clone())),
        Some(instance) => {
            let attrs = model.effective_attributes(&instance.block).expect("instance block resolves");
            match attrs.iter().find(|a| a.name == attr) {
                None => diags.push(Diagnostic::error(
                    "E301",
                    format!("instance `{path}` has no attribute `{attr}`"),
                    span.clone(),
                )),
                Some(a) => {
                    match a.io {
                        IoDirection::Input => {}
                        IoDirection::Output => diags.push(Diagnostic::error(
                            "E303",
                            format!("cannot drive output signal `{path}.{attr}`"),
                            span.clone(),
                        )),
                        IoDirection::None => diags.push(Diagnostic::error(
                            "E303",
                            format!("`{path}.{attr}` is not an input signal"),
                            span.clone(),
                        )),
                    }
                    if a.ty != value.type_tag() {
                        diags.push(Diagnostic::error(
                            "E302",
                            format!("`{path}.{attr}` is {}, got {}", a.ty, value.type_tag()),
                            lit_span,
                        ));
                    }
                }
            }
        }
    }
    Ok(InputEvent { cycle, path, attr, value, span })
}

fn parse_assertion(
    cur: &mut Cursor,
    cycle: u64,
    cycle_span: Span,
    model: &Model,
    tree: &ObjectInstance,
    diags: &mut Vec<Diagnostic>,
) -> Result<Assertion, Diagnostic> {
    let (lhs, lhs_ty) = parse_operand(cur, model, tree, diags)?;
    let op = match cur.peek() {
        Tok::EqEq => CmpOp::Eq,
        Tok::Ne => CmpOp::Ne,
        Tok::Lt => CmpOp::Lt,
        Tok::Le => CmpOp::Le,
        Tok::Gt => CmpOp::Gt,
        Tok::Ge => CmpOp::Ge,
        _ => return Err(cur.unexpected("expected comparison operator")),
    };
    cur.bump();
    let (rhs, rhs_ty) = parse_operand(cur, model, tree, diags)?;
    let span = cycle_span.merge(&cur.prev_span());
    match (lhs_ty, rhs_ty) {
        (Some(a), Some(b)) if a != b => {
            diags.push(Diagnostic::error("E302", format!("assertion compares {a} with {b}"), span.clone()))
        }
        (Some(TypeTag::Bool), _) | (_, Some(TypeTag::Bool)) if op.is_ordering() => {
            diags.push(Diagnostic::error("E302", "ordering comparison on BOOL", span.clone()))
        }
        _ => {}
    }
    Ok(Assertion { cycle, lhs, op, rhs, span })
}

fn parse_operand(
    cur: &mut Cursor,
    model: &Model,
    tree: &ObjectInstance,
    diags: &mut Vec<Diagnostic>,
) -> Result<(ScnOperand, Option<TypeTag>), Diagnostic> {
    match cur.peek() {
        Tok::Ident(_) => {
            let (mut segs, span) = parse_dotted(cur)?;
            if segs.len() < 2 {
                diags.push(Diagnostic::error(
                    "E301",
                    "assertion operand must be `instance.path.attribute` or a literal",
                    span.clone(),
                ));
                return Ok((ScnOperand::Attr { path: segs.join("."), attr: String::new() }, None));
            }
            let attr = segs.pop().expect("len checked");
            let path = segs.join(".");
            let ty = match tree.find(&path) {
                None => {
                    diags.push(Diagnostic::error("E301", format!("unknown instance path `{path}`"), span));
                    None
                }
                Some(instance) => {
                    let attrs = model.effective_attributes(&instance.block).expect("instance block resolves");
                    match attrs.iter().find(|a| a.name == attr) {
                        None => {
                            diags.push(Diagnostic::error(
                                "E301",
                                format!("instance `{path}` has no attribute `{attr}`"),
                                span,
                            ));
                            None
                        }
                        Some(a) => Some(a.ty),
                    }
                }
            };
            Ok((ScnOperand::Attr { path, attr }, ty))
        }
        _ => {
            let value = crate::parser::parse_literal(cur)?;
            Ok((ScnOperand::Lit(value), Some(value.type_tag())))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_model;

    const MODEL: &str = "\
block Valve kind component out BOOL {}
block Sensor kind component in INT {}
block Rig kind composite {
  part v: Valve
  part s: Sensor
  function go(limit: INT) {
    lanes self, v, s
    node n1: call v.setSignal(TRUE)
    start -> n1
    n1 -> end when s.Signal >= limit
  }
}
root rig: Rig
";

    fn model() -> Model {
        parse_model(MODEL, "m.modat").unwrap()
    }

    #[test]
    fn well_typed_scenario_parses() {
        let scn = "\
invoke rig.go(40)
at 0 set rig.s.Signal = 0
at 2 set rig.s.Signal = 50
at 3 expect rig.v.Signal == TRUE
maxcycles 10
";
        let s = parse_scenario(scn, "t.scn", &model()).unwrap();
        assert_eq!(s.invocation.path, "rig");
        assert_eq!(s.invocation.args, vec![Value::Int(40)]);
        assert_eq!(s.inputs.len(), 2);
        assert_eq!(s.assertions.len(), 1);
        assert_eq!(s.max_cycles, 10);
    }

    #[test]
    fn driving_an_output_is_rejected() {
        let scn = "invoke rig.go(1)\nat 0 set rig.v.Signal = TRUE\nmaxcycles 5\n";
        let diags = parse_scenario(scn, "t.scn", &model()).unwrap_err();
        assert!(diags.iter().any(|d| d.code == "E303" && d.message.contains("cannot drive output")), "{diags:?}");
    }

    #[test]
    fn assertion_beyond_maxcycles_is_rejected() {
        let scn = "invoke rig.go(1)\nat 7 expect rig.v.Signal == TRUE\nmaxcycles 5\n";
        let diags = parse_scenario(scn, "t.scn", &model()).unwrap_err();
        assert!(diags.iter().any(|d| d.code == "E304"), "{diags:?}");
    }

    #[test]
    fn arity_and_types_are_checked() {
        let diags = parse_scenario("invoke rig.go()\nmaxcycles 5\n", "t.scn", &model()).unwrap_err();
        assert!(diags.iter().any(|d| d.code == "E305"), "{diags:?}");
        let diags = parse_scenario("invoke rig.go(TRUE)\nmaxcycles 5\n", "t.scn", &model()).unwrap_err();
        assert!(diags.iter().any(|d| d.code == "E302"), "{diags:?}");
        let diags = parse_scenario("invoke rig.stop()\nmaxcycles 5\n", "t.scn", &model()).unwrap_err();
        assert!(diags.iter().any(|d| d.code == "E307"), "{diags:?}");
    }

    #[test]
    fn unknown_paths_are_rejected() {
        let diags =
            parse_scenario("invoke rig.go(1)\nat 0 set rig.ghost.Signal = 1\nmaxcycles 5\n", "t.scn", &model())
                .unwrap_err();
        assert!(diags.iter().any(|d| d.code == "E301"), "{diags:?}");
    }

    #[test]
    fn intrinsics_are_invocable() {
        let s = parse_scenario("invoke rig.v.setSignal(TRUE)\nmaxcycles 3\n", "t.scn", &model()).unwrap();
        assert_eq!(s.invocation.path, "rig.v");
        assert_eq!(s.invocation.function, "setSignal");
    }

    #[test]
    fn compare_values_is_strict() {
        assert_eq!(compare_values(CmpOp::Ge, Value::Int(40), Value::Int(40)), Some(true));
        assert_eq!(compare_values(CmpOp::Eq, Value::Int(1), Value::Bool(true)), None);
        assert_eq!(compare_values(CmpOp::Lt, Value::Bool(false), Value::Bool(true)), None);
        assert_eq!(compare_values(CmpOp::Ne, Value::Time(5), Value::Time(6)), Some(true));
    }
}
