//! Behavior diagrams: lane-structured nodes and transitions for one function.
//!
//! A diagram's lanes are the host block itself (`self`), its direct parts,
//! and the `system` column. Each node occupies one field of a lane and either
//! calls one function or performs attribute assignments; transitions connect
//! the start point, nodes, and the end point.

use std::fmt;

use crate::model::{TypeTag, Value};
use crate::span::Span;

/// Head of a lane path: the host itself, the system column, or a named part.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum LaneName {
    SelfLane,
    System,
    Named(String),
}

impl fmt::Display for LaneName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LaneName::SelfLane => write!(f, "self"),
            LaneName::System => write!(f, "system"),
            LaneName::Named(n) => write!(f, "{n}"),
        }
    }
}

/// A dotted object path as written in a node or expression. Valid diagrams
/// only ever use single-segment paths (the lane itself); deeper paths are
/// kept so the validator can reject them with a precise message (E005/E006).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LanePath {
    pub head: LaneName,
    pub rest: Vec<String>,
    pub span: Span,
}

impl LanePath {
    pub fn lane(head: LaneName, span: Span) -> Self {
        LanePath { head, rest: Vec::new(), span }
    }

    pub fn is_deep(&self) -> bool {
        !self.rest.is_empty()
    }
}

impl fmt::Display for LanePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        for seg in &self.rest {
            write!(f, ".{seg}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn is_ordering(self) -> bool {
        !matches!(self, CmpOp::Eq | CmpOp::Ne)
    }
}

/// Operand expression: a literal, a host-function parameter, or an attribute
/// of a lane. There is deliberately no arithmetic — values flow between
/// signals, attributes, and parameters unmodified.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Lit { value: Value, span: Span },
    Param { name: String, span: Span },
    Attr { path: LanePath, attr: String, span: Span },
}

impl Expr {
    pub fn span(&self) -> &Span {
        match self {
            Expr::Lit { span, .. } | Expr::Param { span, .. } | Expr::Attr { span, .. } => span,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Lit { value, .. } => write!(f, "{value}"),
            Expr::Param { name, .. } => write!(f, "{name}"),
            Expr::Attr { path, attr, .. } => write!(f, "{path}.{attr}"),
        }
    }
}

/// A single comparison; the only condition form of the notation.
#[derive(Clone, Debug, PartialEq)]
pub struct Condition {
    pub lhs: Expr,
    pub op: CmpOp,
    pub rhs: Expr,
    pub span: Span,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.op.symbol(), self.rhs)
    }
}

/// One attribute assignment `lane.attr := expr`.
#[derive(Clone, Debug, PartialEq)]
pub struct Assign {
    pub path: LanePath,
    pub attr: String,
    pub value: Expr,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeAction {
    /// Call one function of the lane (oval frame).
    Call { target: LanePath, function: String, args: Vec<Expr>, span: Span },
    /// Assign attributes (rectangular frame).
    Set { assigns: Vec<Assign> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: String,
    pub action: NodeAction,
    pub entry_ops: Vec<Assign>,
    pub exit_ops: Vec<Assign>,
    pub span: Span,
}

impl Node {
    /// The lane this node's field belongs to: the call target's lane, or
    /// `self` for attribute operations (assignments are host-scoped).
    pub fn lane(&self) -> LaneName {
        match &self.action {
            NodeAction::Call { target, .. } => target.head.clone(),
            NodeAction::Set { .. } => LaneName::SelfLane,
        }
    }
}

/// Policy applied to a running function call preempted by a condition
/// transition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Policy {
    Resume,
    Restart,
    Continue,
}

impl Policy {
    pub fn keyword(self) -> &'static str {
        match self {
            Policy::Resume => "resume",
            Policy::Restart => "restart",
            Policy::Continue => "continue",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TransitionKind {
    /// Fires once the source node's action has finished.
    Completion,
    /// Fires when the comparison holds, regardless of action completeness.
    Condition { cond: Condition, policy: Option<Policy> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Endpoint {
    Start,
    End,
    Node(String),
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Start => write!(f, "start"),
            Endpoint::End => write!(f, "end"),
            Endpoint::Node(n) => write!(f, "{n}"),
        }
    }
}

/// Priority is declaration order: the first enabled transition (by position
/// in [`BehaviorDef::transitions`]) wins.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub source: Endpoint,
    pub target: Endpoint,
    /// `None` only for the bare start transition; node-sourced transitions
    /// without an explicit clause are normalized to `Completion` at parse.
    pub kind: Option<TransitionKind>,
    pub ops: Vec<Assign>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lane {
    pub name: LaneName,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BehaviorDef {
    pub lanes: Vec<Lane>,
    pub nodes: Vec<Node>,
    pub transitions: Vec<Transition>,
    pub span: Span,
}

impl BehaviorDef {
    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn start_transitions(&self) -> impl Iterator<Item = &Transition> {
        self.transitions.iter().filter(|t| t.source == Endpoint::Start)
    }

    /// Outgoing transitions of a node, in declaration (priority) order.
    pub fn outgoing<'a>(&'a self, node_id: &'a str) -> impl Iterator<Item = &'a Transition> + 'a {
        self.transitions
            .iter()
            .filter(move |t| matches!(&t.source, Endpoint::Node(n) if n == node_id))
    }

    pub fn has_lane(&self, name: &LaneName) -> bool {
        self.lanes.iter().any(|l| &l.name == name)
    }
}

/// Declared-type lookup helper used by the validator and simulator when
/// resolving expression operand types against a parameter list.
pub fn param_type(params: &[(String, TypeTag)], name: &str) -> Option<TypeTag> {
    params.iter().find(|(n, _)| n == name).map(|(_, t)| *t)
}
