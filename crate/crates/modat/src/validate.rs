//! Structural and behavioral well-formedness rules.
//!
//! Every rule is independently executable via [`check_rule`]; [`validate`]
//! is the ordered union of all rules. Rules never report on prerequisites
//! owned by another rule: a node whose call target is unresolvable under
//! E004 is silently skipped by E008, so each fault surfaces under exactly
//! one code.
//!
//! | code | rule |
//! |------|------|
//! | E001 | inheritance depth: a variant's base must not itself be a variant |
//! | E002 | component leaf: components declare no parts and no functions |
//! | E003 | lane binding: lanes ⊆ {self, effective parts of the host, system} |
//! | E004 | access scope: targets are declared lanes; system calls must be registered |
//! | E005 | deep access: dotted paths through more than one part level |
//! | E006 | condition operands: literal, host parameter, or same-level lane attribute |
//! | E007 | behavior shape: exactly one bare start transition; policies on call exits only |
//! | E008 | type checking: assignments, comparisons, call arity/types, adaption types, bodies present |
//! | W001 | node unreachable from start, or unable to reach end |
//! | W002 | node with no outgoing transition |

use crate::behavior::{
    Assign, BehaviorDef, Condition, Endpoint, Expr, LaneName, LanePath, Node, NodeAction, TransitionKind,
};
use crate::diag::{sort_diagnostics, Diagnostic};
use crate::model::{BlockDef, BlockKind, FunctionDef, Model, ModelError, Param, TypeTag};
use crate::sim::builtins;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RuleId {
    E001,
    E002,
    E003,
    E004,
    E005,
    E006,
    E007,
    E008,
    W001,
    W002,
}

impl RuleId {
    pub const ALL: [RuleId; 10] = [
        RuleId::E001,
        RuleId::E002,
        RuleId::E003,
        RuleId::E004,
        RuleId::E005,
        RuleId::E006,
        RuleId::E007,
        RuleId::E008,
        RuleId::W001,
        RuleId::W002,
    ];

    pub fn code(self) -> &'static str {
        match self {
            RuleId::E001 => "E001",
            RuleId::E002 => "E002",
            RuleId::E003 => "E003",
            RuleId::E004 => "E004",
            RuleId::E005 => "E005",
            RuleId::E006 => "E006",
            RuleId::E007 => "E007",
            RuleId::E008 => "E008",
            RuleId::W001 => "W001",
            RuleId::W002 => "W002",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            RuleId::E001 => "inheritance depth is limited to one",
            RuleId::E002 => "component blocks declare no parts and no functions",
            RuleId::E003 => "behavior lanes must be self, effective parts of the host, or system",
            RuleId::E004 => "targets must be declared lanes (self, direct parts, registered system functions)",
            RuleId::E005 => "dotted access through more than one part level",
            RuleId::E006 => "condition operands: literal, host parameter, or same-level lane attribute",
            RuleId::E007 => "behavior shape: exactly one bare start transition, policies on call exits only",
            RuleId::E008 => "type checking of assignments, comparisons, and calls",
            RuleId::W001 => "unreachable node",
            RuleId::W002 => "node with no outgoing transition",
        }
    }

    pub fn parse(code: &str) -> Result<RuleId, ModelError> {
        RuleId::ALL.into_iter().find(|r| r.code() == code).ok_or_else(|| ModelError::UnknownRule(code.to_string()))
    }
}

/// Runs every rule and returns the diagnostics in total order
/// (file, line, col, code). Empty output means the model is valid.
pub fn validate(model: &Model) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for rule in RuleId::ALL {
        out.extend(check_rule(model, rule));
    }
    sort_diagnostics(&mut out);
    out
}

/// Runs a single rule.
pub fn check_rule(model: &Model, rule: RuleId) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    match rule {
        RuleId::E001 => e001(model, &mut out),
        RuleId::E002 => e002(model, &mut out),
        RuleId::E003 => e003(model, &mut out),
        RuleId::E004 => e004(model, &mut out),
        RuleId::E005 => e005(model, &mut out),
        RuleId::E006 => e006(model, &mut out),
        RuleId::E007 => e007(model, &mut out),
        RuleId::E008 => e008(model, &mut out),
        RuleId::W001 => w001(model, &mut out),
        RuleId::W002 => w002(model, &mut out),
    }
    sort_diagnostics(&mut out);
    out
}

/// All behavior bodies with their declaring host block and function.
/// Inherited bodies are validated once, at the block that declares them;
/// variants only ever widen the part set, so a body that is valid for its
/// declaring host stays valid in every variant.
fn diagrams(model: &Model) -> impl Iterator<Item = (&BlockDef, &FunctionDef, &BehaviorDef)> {
    model
        .blocks
        .values()
        .flat_map(|def| def.functions.iter().filter_map(move |f| f.body.as_ref().map(|b| (def, f, b))))
}

fn part_block<'a>(model: &'a Model, host: &BlockDef, part_name: &str) -> Option<&'a BlockDef> {
    let parts = model.effective_parts(&host.name).ok()?;
    let part = parts.iter().find(|p| p.name == part_name)?;
    model.block(&part.block)
}

/// Callee resolution for a shallow, declared lane. `None` when any
/// prerequisite fails (another rule owns that failure).
fn resolve_callee(
    model: &Model,
    host: &BlockDef,
    body: &BehaviorDef,
    target: &LanePath,
    function: &str,
) -> Option<FunctionDef> {
    if target.is_deep() || !body.has_lane(&target.head) {
        return None;
    }
    match &target.head {
        LaneName::SelfLane => {
            model.effective_functions(host).into_iter().find(|(f, _)| f.name == function).map(|(f, _)| f)
        }
        LaneName::System => model.system_function(function).cloned(),
        LaneName::Named(p) => {
            let block = part_block(model, host, p)?;
            model.effective_functions(block).into_iter().find(|(f, _)| f.name == function).map(|(f, _)| f)
        }
    }
}

/// Attribute type of `path.attr` for a shallow, declared lane.
fn resolve_attr_type(
    model: &Model,
    host: &BlockDef,
    body: &BehaviorDef,
    path: &LanePath,
    attr: &str,
) -> Option<TypeTag> {
    if path.is_deep() || !body.has_lane(&path.head) {
        return None;
    }
    let block = match &path.head {
        LaneName::SelfLane => host,
        LaneName::System => return None,
        LaneName::Named(p) => part_block(model, host, p)?,
    };
    model.effective_attributes(&block.name).ok()?.into_iter().find(|a| a.name == attr).map(|a| a.ty)
}

fn expr_type(model: &Model, host: &BlockDef, body: &BehaviorDef, params: &[Param], e: &Expr) -> Option<TypeTag> {
    match e {
        Expr::Lit { value, .. } => Some(value.type_tag()),
        Expr::Param { name, .. } => params.iter().find(|p| &p.name == name).map(|p| p.ty),
        Expr::Attr { path, attr, .. } => resolve_attr_type(model, host, body, path, attr),
    }
}

fn node_assign_lists(node: &Node) -> Vec<&Assign> {
    let mut out: Vec<&Assign> = Vec::new();
    if let NodeAction::Set { assigns } = &node.action {
        out.extend(assigns.iter());
    }
    out.extend(node.entry_ops.iter());
    out.extend(node.exit_ops.iter());
    out
}

// --- E001 -------------------------------------------------------------

fn e001(model: &Model, out: &mut Vec<Diagnostic>) {
    for def in model.blocks.values() {
        if let Some(base) = model.base_of(def) {
            if let Some(grand) = &base.base {
                out.push(Diagnostic::error(
                    "E001",
                    format!(
                        "variant `{}` inherits from `{}`, which is itself a variant of `{}`; \
                         inheritance depth is limited to one",
                        def.name, base.name, grand
                    ),
                    def.span.clone(),
                ));
            }
        }
    }
}

// --- E002 -------------------------------------------------------------

fn e002(model: &Model, out: &mut Vec<Diagnostic>) {
    for def in model.blocks.values() {
        if model.kind_of(def) != BlockKind::Component {
            continue;
        }
        for part in &def.parts {
            out.push(Diagnostic::error(
                "E002",
                format!("component block `{}` cannot integrate parts (`{}`)", def.name, part.name),
                part.span.clone(),
            ));
        }
        for f in &def.functions {
            out.push(Diagnostic::error(
                "E002",
                format!(
                    "component block `{}` cannot declare functions (`{}`); its interface is the \
                     intrinsic setSignal/getSignal",
                    def.name, f.name
                ),
                f.span.clone(),
            ));
        }
    }
}

// --- E003 -------------------------------------------------------------

fn e003(model: &Model, out: &mut Vec<Diagnostic>) {
    for (host, _, body) in diagrams(model) {
        let parts = model.effective_parts(&host.name).unwrap_or_default();
        let mut seen: Vec<&LaneName> = Vec::new();
        for lane in &body.lanes {
            if seen.contains(&&lane.name) {
                out.push(Diagnostic::error(
                    "E003",
                    format!("lane `{}` is listed twice", lane.name),
                    lane.span.clone(),
                ));
            }
            seen.push(&lane.name);
            if let LaneName::Named(n) = &lane.name {
                if !parts.iter().any(|p| &p.name == n) {
                    out.push(Diagnostic::error(
                        "E003",
                        format!("lane `{n}` is not a part of `{}`", host.name),
                        lane.span.clone(),
                    ));
                }
            }
        }
    }
}

// --- E004 -------------------------------------------------------------

fn check_lane_declared(body: &BehaviorDef, path: &LanePath, context: &str, out: &mut Vec<Diagnostic>) -> bool {
    if body.has_lane(&path.head) {
        true
    } else {
        out.push(Diagnostic::error(
            "E004",
            format!("{context} `{}` is not a declared lane", path.head),
            path.span.clone(),
        ));
        false
    }
}

/// Assignment targets: `self` attributes only (part signals are written via
/// the setSignal intrinsic).
fn e004_assign(model: &Model, host: &BlockDef, body: &BehaviorDef, a: &Assign, out: &mut Vec<Diagnostic>) {
    if !a.path.is_deep() {
        match &a.path.head {
            LaneName::SelfLane => {
                if check_lane_declared(body, &a.path, "assignment target", out) {
                    let attrs = model.effective_attributes(&host.name).unwrap_or_default();
                    if !attrs.iter().any(|at| at.name == a.attr) {
                        out.push(Diagnostic::error(
                            "E004",
                            format!("`{}` has no attribute `{}`", host.name, a.attr),
                            a.span.clone(),
                        ));
                    }
                }
            }
            _ => out.push(Diagnostic::error(
                "E004",
                format!(
                    "assignments may only target `self` attributes; write `{}` signals via setSignal",
                    a.path.head
                ),
                a.span.clone(),
            )),
        }
    }
    e004_expr(model, host, body, &a.value, out);
}

/// Attribute reads inside expressions (arguments and assignment values).
fn e004_expr(model: &Model, host: &BlockDef, body: &BehaviorDef, e: &Expr, out: &mut Vec<Diagnostic>) {
    let Expr::Attr { path, attr, span } = e else { return };
    if path.is_deep() {
        return; // E005
    }
    if !check_lane_declared(body, path, "lane", out) {
        return;
    }
    let block = match &path.head {
        LaneName::SelfLane => host,
        LaneName::System => {
            out.push(Diagnostic::error("E004", "`system` has no attributes", span.clone()));
            return;
        }
        LaneName::Named(p) => match part_block(model, host, p) {
            Some(b) => b,
            None => return, // lane is not a part: E003 owns it
        },
    };
    let attrs = model.effective_attributes(&block.name).unwrap_or_default();
    if !attrs.iter().any(|a| &a.name == attr) {
        out.push(Diagnostic::error("E004", format!("`{}` has no attribute `{attr}`", block.name), span.clone()));
    }
}

fn e004(model: &Model, out: &mut Vec<Diagnostic>) {
    for (host, _, body) in diagrams(model) {
        for node in &body.nodes {
            match &node.action {
                NodeAction::Call { target, function, args, span } => {
                    if target.is_deep() {
                        continue; // E005
                    }
                    if !check_lane_declared(body, target, "call target", out) {
                        continue;
                    }
                    match &target.head {
                        LaneName::SelfLane => {
                            if !model.effective_functions(host).iter().any(|(f, _)| &f.name == function) {
                                out.push(Diagnostic::error(
                                    "E004",
                                    format!("`{}` has no function `{function}`", host.name),
                                    span.clone(),
                                ));
                            }
                        }
                        LaneName::System => match model.system_function(function) {
                            None => out.push(Diagnostic::error(
                                "E004",
                                format!("call to undeclared system function `{function}`"),
                                span.clone(),
                            )),
                            Some(decl) => {
                                let declared: Vec<TypeTag> = decl.params.iter().map(|p| p.ty).collect();
                                if !builtins::is_registered(function, &declared) {
                                    out.push(Diagnostic::error(
                                        "E004",
                                        format!(
                                            "system function `{function}` is not in the built-in registry ({})",
                                            builtins::registry_summary()
                                        ),
                                        span.clone(),
                                    ));
                                }
                            }
                        },
                        LaneName::Named(p) => {
                            if let Some(block) = part_block(model, host, p) {
                                if !model.effective_functions(block).iter().any(|(f, _)| &f.name == function) {
                                    out.push(Diagnostic::error(
                                        "E004",
                                        format!("`{}` has no function `{function}`", block.name),
                                        span.clone(),
                                    ));
                                }
                            }
                        }
                    }
                    for arg in args {
                        e004_expr(model, host, body, arg, out);
                    }
                }
                NodeAction::Set { .. } => {}
            }
            for a in node_assign_lists(node) {
                e004_assign(model, host, body, a, out);
            }
        }
        for t in &body.transitions {
            for a in &t.ops {
                e004_assign(model, host, body, a, out);
            }
        }
    }
    e004_self_call_cycles(model, out);
}

/// Self-call cycles over the *effective* bodies of each block: the only way
/// a function-instance key can re-enter itself, since part calls strictly
/// descend the finite instance tree.
fn e004_self_call_cycles(model: &Model, out: &mut Vec<Diagnostic>) {
    for def in model.blocks.values() {
        let effective = model.effective_functions(def);
        let edges: Vec<(String, String)> = effective
            .iter()
            .filter_map(|(f, _)| f.body.as_ref().map(|b| (f, b)))
            .flat_map(|(f, b)| {
                b.nodes.iter().filter_map(move |n| match &n.action {
                    NodeAction::Call { target, function, .. }
                        if target.head == LaneName::SelfLane && !target.is_deep() =>
                    {
                        Some((f.name.clone(), function.clone()))
                    }
                    _ => None,
                })
            })
            .collect();
        for (origin, _) in &effective {
            let mut stack = vec![origin.name.clone()];
            let mut seen = vec![origin.name.clone()];
            let mut cyclic = false;
            while let Some(cur) = stack.pop() {
                for (_, next) in edges.iter().filter(|(from, _)| *from == cur) {
                    if next == &origin.name {
                        cyclic = true;
                    } else if !seen.contains(next) {
                        seen.push(next.clone());
                        stack.push(next.clone());
                    }
                }
            }
            if cyclic {
                out.push(Diagnostic::error(
                    "E004",
                    format!("function `{}` of `{}` reaches itself through self calls", origin.name, def.name),
                    def.span.clone(),
                ));
            }
        }
    }
}

// --- E005 -------------------------------------------------------------

fn e005_path(path: &LanePath, context: &str, out: &mut Vec<Diagnostic>) {
    if path.is_deep() {
        out.push(Diagnostic::error(
            "E005",
            format!(
                "{context} `{path}` reaches through more than one part level; only the same or the \
                 adjacent lower hierarchy level is accessible"
            ),
            path.span.clone(),
        ));
    }
}

fn e005(model: &Model, out: &mut Vec<Diagnostic>) {
    for (_, _, body) in diagrams(model) {
        for node in &body.nodes {
            if let NodeAction::Call { target, args, .. } = &node.action {
                e005_path(target, "call target", out);
                for arg in args {
                    if let Expr::Attr { path, .. } = arg {
                        e005_path(path, "attribute read", out);
                    }
                }
            }
            for a in node_assign_lists(node) {
                e005_path(&a.path, "assignment target", out);
                if let Expr::Attr { path, .. } = &a.value {
                    e005_path(path, "attribute read", out);
                }
            }
        }
        for t in &body.transitions {
            for a in &t.ops {
                e005_path(&a.path, "assignment target", out);
                if let Expr::Attr { path, .. } = &a.value {
                    e005_path(path, "attribute read", out);
                }
            }
        }
    }
}

// --- E006 -------------------------------------------------------------

fn e006_operand(
    model: &Model,
    host: &BlockDef,
    body: &BehaviorDef,
    params: &[Param],
    e: &Expr,
    side: &str,
    is_rhs: bool,
    out: &mut Vec<Diagnostic>,
) {
    match e {
        Expr::Lit { span, .. } => {
            if !is_rhs {
                out.push(Diagnostic::error(
                    "E006",
                    format!("condition {side} must be a lane attribute"),
                    span.clone(),
                ));
            }
        }
        Expr::Param { name, span } => {
            if !is_rhs {
                out.push(Diagnostic::error(
                    "E006",
                    format!("condition {side} must be a lane attribute"),
                    span.clone(),
                ));
            } else if !params.iter().any(|p| &p.name == name) {
                out.push(Diagnostic::error(
                    "E006",
                    format!("`{name}` is not a parameter of the host function"),
                    span.clone(),
                ));
            }
        }
        Expr::Attr { path, attr, span } => {
            if path.is_deep() {
                out.push(Diagnostic::error(
                    "E006",
                    format!("condition operand `{path}.{attr}` is not at the same hierarchy level"),
                    span.clone(),
                ));
                return;
            }
            if path.head == LaneName::System {
                out.push(Diagnostic::error("E006", "`system` has no attributes", span.clone()));
                return;
            }
            if !body.has_lane(&path.head) {
                out.push(Diagnostic::error(
                    "E006",
                    format!("condition operand references `{}`, which is not a declared lane", path.head),
                    span.clone(),
                ));
                return;
            }
            if resolve_attr_type(model, host, body, path, attr).is_none() {
                // lane is declared but the attribute is missing; an illegal
                // lane in the lanes list itself is E003's finding
                let lane_resolves = match &path.head {
                    LaneName::SelfLane => true,
                    LaneName::Named(p) => part_block(model, host, p).is_some(),
                    LaneName::System => false,
                };
                if lane_resolves {
                    out.push(Diagnostic::error(
                        "E006",
                        format!("`{}` has no attribute `{attr}`", path.head),
                        span.clone(),
                    ));
                }
            }
        }
    }
}

fn e006(model: &Model, out: &mut Vec<Diagnostic>) {
    for (host, f, body) in diagrams(model) {
        for t in &body.transitions {
            if let Some(TransitionKind::Condition { cond, .. }) = &t.kind {
                e006_operand(model, host, body, &f.params, &cond.lhs, "left-hand side", false, out);
                e006_operand(model, host, body, &f.params, &cond.rhs, "right-hand side", true, out);
            }
        }
    }
}

// --- E007 -------------------------------------------------------------

fn e007(model: &Model, out: &mut Vec<Diagnostic>) {
    for (_, f, body) in diagrams(model) {
        let starts: Vec<_> = body.start_transitions().collect();
        if starts.is_empty() {
            out.push(Diagnostic::error(
                "E007",
                format!("behavior of `{}` has no start transition", f.name),
                body.span.clone(),
            ));
        }
        for extra in starts.iter().skip(1) {
            out.push(Diagnostic::error(
                "E007",
                format!("behavior of `{}` has more than one start transition", f.name),
                extra.span.clone(),
            ));
        }
        for t in &body.transitions {
            if t.source == Endpoint::Start && t.kind.is_some() {
                out.push(Diagnostic::error(
                    "E007",
                    "the start transition fires on invocation and carries no trigger clause",
                    t.span.clone(),
                ));
            }
            for endpoint in [&t.source, &t.target] {
                if let Endpoint::Node(n) = endpoint {
                    if body.node(n).is_none() {
                        out.push(Diagnostic::error(
                            "E007",
                            format!("transition references unknown node `{n}`"),
                            t.span.clone(),
                        ));
                    }
                }
            }
            if let Some(TransitionKind::Condition { policy: Some(p), .. }) = &t.kind {
                let source_is_call = match &t.source {
                    Endpoint::Node(n) => body.node(n).map(|node| matches!(node.action, NodeAction::Call { .. })),
                    _ => Some(false),
                };
                if source_is_call == Some(false) {
                    out.push(Diagnostic::error(
                        "E007",
                        format!(
                            "policy `{}` is only meaningful on a condition transition leaving a \
                             function-call node",
                            p.keyword()
                        ),
                        t.span.clone(),
                    ));
                }
            }
        }
    }
    let _ = model;
}

// --- E008 -------------------------------------------------------------

fn e008(model: &Model, out: &mut Vec<Diagnostic>) {
    for def in model.blocks.values() {
        // variant attribute adaption must keep the base type
        if let Some(base) = model.base_of(def) {
            let base_attrs = model.effective_attributes(&base.name).unwrap_or_default();
            for attr in &def.attributes {
                if let Some(base_attr) = base_attrs.iter().find(|a| a.name == attr.name) {
                    if base_attr.ty != attr.ty {
                        out.push(Diagnostic::error(
                            "E008",
                            format!(
                                "attribute `{}` adapts the initial value but changes the type ({} to {})",
                                attr.name, base_attr.ty, attr.ty
                            ),
                            attr.span.clone(),
                        ));
                    }
                }
            }
        }
        for attr in &def.attributes {
            if attr.initial.type_tag() != attr.ty {
                out.push(Diagnostic::error(
                    "E008",
                    format!(
                        "initial value of `{}` is {}, expected {}",
                        attr.name,
                        attr.initial.type_tag(),
                        attr.ty
                    ),
                    attr.span.clone(),
                ));
            }
        }
        // every composite function must have a body once linking is done
        if model.kind_of(def) == BlockKind::Composite {
            for (f, _) in model.effective_functions(def) {
                if f.body.is_none() {
                    out.push(Diagnostic::error(
                        "E008",
                        format!("composite function `{}` of `{}` has no behavior", f.name, def.name),
                        def.function(&f.name).map(|own| own.span.clone()).unwrap_or_else(|| def.span.clone()),
                    ));
                }
            }
        }
    }
    for (host, f, body) in diagrams(model) {
        let mut seen: Vec<&str> = Vec::new();
        for p in &f.params {
            if seen.contains(&p.name.as_str()) {
                out.push(Diagnostic::error(
                    "E008",
                    format!("parameter `{}` is declared twice", p.name),
                    p.span.clone(),
                ));
            }
            seen.push(&p.name);
        }
        for node in &body.nodes {
            if let NodeAction::Call { target, function, args, span } = &node.action {
                if let Some(callee) = resolve_callee(model, host, body, target, function) {
                    if callee.params.len() != args.len() {
                        out.push(Diagnostic::error(
                            "E008",
                            format!("`{function}` takes {} argument(s), {} given", callee.params.len(), args.len()),
                            span.clone(),
                        ));
                    } else {
                        for (param, arg) in callee.params.iter().zip(args) {
                            match expr_type(model, host, body, &f.params, arg) {
                                Some(t) if t != param.ty => out.push(Diagnostic::error(
                                    "E008",
                                    format!("argument `{}` expects {}, got {t}", param.name, param.ty),
                                    arg.span().clone(),
                                )),
                                Some(_) => {}
                                None => {
                                    if let Expr::Param { name, span } = arg {
                                        out.push(Diagnostic::error(
                                            "E008",
                                            format!("`{name}` is not a parameter of the host function"),
                                            span.clone(),
                                        ));
                                    }
                                }
                            }
                        }
                    }
                }
            }
            for a in node_assign_lists(node) {
                e008_assign(model, host, body, &f.params, a, out);
            }
        }
        for t in &body.transitions {
            for a in &t.ops {
                e008_assign(model, host, body, &f.params, a, out);
            }
            if let Some(TransitionKind::Condition { cond, .. }) = &t.kind {
                e008_condition(model, host, body, &f.params, cond, out);
            }
        }
    }
}

fn e008_assign(
    model: &Model,
    host: &BlockDef,
    body: &BehaviorDef,
    params: &[Param],
    a: &Assign,
    out: &mut Vec<Diagnostic>,
) {
    let target_ty = resolve_attr_type(model, host, body, &a.path, &a.attr);
    let value_ty = expr_type(model, host, body, params, &a.value);
    match (target_ty, value_ty) {
        (Some(t), Some(v)) if t != v => out.push(Diagnostic::error(
            "E008",
            format!("assignment to `{}.{}` expects {t}, got {v}", a.path, a.attr),
            a.span.clone(),
        )),
        (Some(_), None) => {
            if let Expr::Param { name, span } = &a.value {
                out.push(Diagnostic::error(
                    "E008",
                    format!("`{name}` is not a parameter of the host function"),
                    span.clone(),
                ));
            }
        }
        _ => {}
    }
}

fn e008_condition(
    model: &Model,
    host: &BlockDef,
    body: &BehaviorDef,
    params: &[Param],
    cond: &Condition,
    out: &mut Vec<Diagnostic>,
) {
    let lhs = expr_type(model, host, body, params, &cond.lhs);
    let rhs = expr_type(model, host, body, params, &cond.rhs);
    match (lhs, rhs) {
        (Some(a), Some(b)) if a != b => {
            out.push(Diagnostic::error("E008", format!("comparison of {a} with {b}"), cond.span.clone()))
        }
        (Some(TypeTag::Bool), Some(TypeTag::Bool)) if cond.op.is_ordering() => {
            out.push(Diagnostic::error("E008", "ordering comparison on BOOL", cond.span.clone()))
        }
        _ => {}
    }
}

// --- W001 / W002 --------------------------------------------------------

fn reachability(body: &BehaviorDef) -> (Vec<String>, Vec<String>) {
    let mut forward: Vec<String> = Vec::new();
    let mut stack: Vec<String> = body
        .start_transitions()
        .filter_map(|t| match &t.target {
            Endpoint::Node(n) => Some(n.clone()),
            _ => None,
        })
        .collect();
    while let Some(n) = stack.pop() {
        if forward.contains(&n) {
            continue;
        }
        forward.push(n.clone());
        for t in body.outgoing(&n) {
            if let Endpoint::Node(next) = &t.target {
                stack.push(next.clone());
            }
        }
    }
    let mut backward: Vec<String> = Vec::new();
    let mut stack: Vec<String> = body
        .transitions
        .iter()
        .filter(|t| t.target == Endpoint::End)
        .filter_map(|t| match &t.source {
            Endpoint::Node(n) => Some(n.clone()),
            _ => None,
        })
        .collect();
    while let Some(n) = stack.pop() {
        if backward.contains(&n) {
            continue;
        }
        backward.push(n.clone());
        for t in &body.transitions {
            if let (Endpoint::Node(src), Endpoint::Node(tgt)) = (&t.source, &t.target) {
                if tgt == &n {
                    stack.push(src.clone());
                }
            }
        }
    }
    (forward, backward)
}

fn w001(model: &Model, out: &mut Vec<Diagnostic>) {
    for (_, _, body) in diagrams(model) {
        let (forward, backward) = reachability(body);
        for node in &body.nodes {
            if !forward.contains(&node.id) {
                out.push(Diagnostic::warning(
                    "W001",
                    format!("node `{}` is unreachable from start", node.id),
                    node.span.clone(),
                ));
            } else if !backward.contains(&node.id) && body.outgoing(&node.id).next().is_some() {
                out.push(Diagnostic::warning(
                    "W001",
                    format!("node `{}` cannot reach end", node.id),
                    node.span.clone(),
                ));
            }
        }
    }
}

fn w002(model: &Model, out: &mut Vec<Diagnostic>) {
    for (_, _, body) in diagrams(model) {
        for node in &body.nodes {
            if body.outgoing(&node.id).next().is_none() {
                out.push(Diagnostic::warning(
                    "W002",
                    format!("node `{}` has no outgoing transition", node.id),
                    node.span.clone(),
                ));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_model;

    fn validate_text(text: &str) -> Vec<Diagnostic> {
        let model = parse_model(text, "t.modat").unwrap();
        validate(&model)
    }

    fn codes(diags: &[Diagnostic]) -> Vec<&str> {
        diags.iter().map(|d| d.code).collect()
    }

    const VALID: &str = "\
block Valve kind component out BOOL {}
block Sensor kind component in INT {}
block Rig kind composite {
  part v: Valve
  part s: Sensor
  attr count: INT = 0
  function go(limit: INT) {
    lanes self, v, s
    node n1: call v.setSignal(TRUE) entry self.count := 0
    node n2: set self.count := 1
    start -> n1
    n1 -> n2 on completion
    n2 -> end when s.Signal >= limit
  }
}
root rig: Rig
";

    #[test]
    fn valid_model_is_clean() {
        assert_eq!(validate_text(VALID), vec![]);
    }

    #[test]
    fn e001_depth_two() {
        let body = VALID.replace("root rig: Rig\n", "");
        let text = format!("{body}variant A of Rig {{ }}\nvariant B of A {{ }}\nroot rig: Rig\n");
        assert_eq!(codes(&validate_text(&text)), vec!["E001"]);
    }

    #[test]
    fn e002_component_with_member() {
        let text = "\
block Valve kind component out BOOL {}
block Odd kind component in BOOL {
  part v: Valve
}
root v: Valve
";
        assert_eq!(codes(&validate_text(text)), vec!["E002"]);
    }

    #[test]
    fn e003_unknown_lane() {
        let text = VALID.replace("lanes self, v, s", "lanes self, v, s, ghost");
        assert_eq!(codes(&validate_text(&text)), vec!["E003"]);
    }

    #[test]
    fn e004_undeclared_lane_target() {
        let text = VALID.replace("lanes self, v, s", "lanes self, s");
        assert_eq!(codes(&validate_text(&text)), vec!["E004"]);
    }

    #[test]
    fn e004_part_writes_rejected() {
        let text = VALID.replace("node n2: set self.count := 1", "node n2: set v.Signal := TRUE");
        assert_eq!(codes(&validate_text(&text)), vec!["E004"]);
    }

    #[test]
    fn e004_unregistered_system_function() {
        let text = "\
block Rig kind composite {
  attr x: INT = 0
  function go() {
    lanes self, system
    node n1: call system.mystery(self.x)
    start -> n1
    n1 -> end on completion
  }
}
system {
  function mystery(a: INT)
}
root rig: Rig
";
        let diags = validate_text(text);
        assert_eq!(codes(&diags), vec!["E004"]);
        assert!(diags[0].message.contains("registry"));
    }

    #[test]
    fn e004_self_call_cycle() {
        let text = "\
block Rig kind composite {
  attr x: INT = 0
  function f() {
    lanes self
    node n1: call self.g()
    start -> n1
    n1 -> end on completion
  }
  function g() {
    lanes self
    node n1: call self.f()
    start -> n1
    n1 -> end on completion
  }
}
root rig: Rig
";
        assert_eq!(codes(&validate_text(text)), vec!["E004", "E004"]);
    }

    #[test]
    fn e005_deep_call() {
        let text = "\
block Valve kind component out BOOL {}
block Cyl kind composite {
  part v: Valve
  function go() {
    lanes self, v
    node n1: call v.setSignal(TRUE)
    start -> n1
    n1 -> end on completion
  }
}
block Station kind composite {
  part cyl: Cyl
  function work() {
    lanes self, cyl
    node n1: call cyl.v.setSignal(TRUE)
    start -> n1
    n1 -> end on completion
  }
}
root st: Station
";
        assert_eq!(codes(&validate_text(text)), vec!["E005"]);
    }

    #[test]
    fn e006_deep_condition_operand() {
        let text = VALID.replace("when s.Signal >= limit", "when s.Signal == other.sub.value");
        assert_eq!(codes(&validate_text(&text)), vec!["E006"]);
    }

    #[test]
    fn e006_literal_lhs() {
        let text = VALID.replace("when s.Signal >= limit", "when 40 <= limit");
        assert_eq!(codes(&validate_text(&text)), vec!["E006"]);
    }

    #[test]
    fn e007_two_starts() {
        let text = VALID.replace("start -> n1", "start -> n1\n    start -> n2");
        assert_eq!(codes(&validate_text(&text)), vec!["E007"]);
    }

    #[test]
    fn e007_policy_on_set_node() {
        let text =
            VALID.replace("n2 -> end when s.Signal >= limit", "n2 -> end when s.Signal >= limit policy resume");
        assert_eq!(codes(&validate_text(&text)), vec!["E007"]);
    }

    #[test]
    fn e008_assignment_type_mismatch() {
        let text = VALID.replace("set self.count := 1", "set self.count := TRUE");
        assert_eq!(codes(&validate_text(&text)), vec!["E008"]);
    }

    #[test]
    fn e008_call_arity() {
        let text = VALID.replace("call v.setSignal(TRUE)", "call v.setSignal()");
        assert_eq!(codes(&validate_text(&text)), vec!["E008"]);
    }

    #[test]
    fn e008_adaption_cannot_change_type() {
        let body = VALID.replace("root rig: Rig\n", "");
        let text = format!("{body}variant Big of Rig {{\n  attr count: BOOL = TRUE\n}}\nroot rig: Rig\n");
        assert_eq!(codes(&validate_text(&text)), vec!["E008"]);
    }

    #[test]
    fn e008_bodiless_composite_function() {
        let text = VALID.replace("  function go(limit: INT) {", "  function idle()\n  function go(limit: INT) {");
        assert_eq!(codes(&validate_text(&text)), vec!["E008"]);
    }

    #[test]
    fn warnings_for_unreachable_and_dead_end() {
        let text = "\
block Rig kind composite {
  attr x: INT = 0
  function go() {
    lanes self
    node a: set self.x := 1
    node b: set self.x := 2
    node c: set self.x := 3
    start -> a
    a -> end on completion
    b -> c on completion
  }
}
root rig: Rig
";
        let diags = validate_text(text);
        // b unreachable, c unreachable, c dead end
        assert_eq!(codes(&diags), vec!["W001", "W001", "W002"]);
        assert!(diags.iter().all(|d| !d.is_error()));
    }

    #[test]
    fn check_rule_union_matches_validate() {
        let text = VALID.replace("call v.setSignal(TRUE)", "call v.setSignal()");
        let model = parse_model(&text, "t.modat").unwrap();
        let mut union: Vec<Diagnostic> = RuleId::ALL.into_iter().flat_map(|r| check_rule(&model, r)).collect();
        sort_diagnostics(&mut union);
        assert_eq!(union, validate(&model));
    }

    #[test]
    fn unknown_rule_is_an_error() {
        assert!(RuleId::parse("E999").is_err());
        assert_eq!(RuleId::parse("E006").unwrap(), RuleId::E006);
    }

    #[test]
    fn monotonic_under_unused_valid_block() {
        let base = validate_text(VALID);
        let text = VALID.replace("root rig: Rig", "block Spare kind component in BOOL {}\nroot rig: Rig");
        assert_eq!(validate_text(&text), base);
    }
}
