//! Deterministic execution of behavior models under cyclic PLC scan
//! semantics.
//!
//! One [`step_cycle`] is one scan cycle:
//!
//! 1. latch scripted inputs into Input-io signals,
//! 2. step the root function instance (unless it has completed),
//! 3. step every detached instance in creation (detachment) order,
//! 4. snapshot all variables, record, increment the cycle counter.
//!
//! Stepping an instance fires at most one transition per cycle (all nodes
//! are multicycle nodes). Function instances are persistent per
//! (object path, function) key, which is what makes the resume policy work:
//! a preempted callee keeps its active node and simply stops being stepped
//! until the same key is invoked again.
//!
//! Condition transitions are purely preemptive: they fire on their
//! comparison alone, regardless of whether the node's action has finished.
//! When no policy is written, a preempted running call is restarted.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::behavior::{Assign, Condition, Endpoint, Expr, LaneName, LanePath, NodeAction, Policy, TransitionKind};
use crate::model::{BlockKind, FunctionDef, Model, TypeTag, Value};
use crate::scenario::{compare_values, Assertion, Scenario};

/// Black-box system functions. Calls to anything not listed here are
/// rejected by validator rule E004.
pub mod builtins {
    use crate::model::TypeTag;

    pub struct Builtin {
        pub name: &'static str,
        pub params: &'static [TypeTag],
    }

    /// `delay(ticks)` completes after being stepped `ticks` cycles (a
    /// TON-style timer counted in scan cycles); `noop()` completes on the
    /// cycle it is invoked, like the component intrinsics.
    pub const REGISTRY: &[Builtin] = &[
        Builtin { name: "delay", params: &[TypeTag::Int] },
        Builtin { name: "noop", params: &[] },
    ];

    pub fn lookup(name: &str) -> Option<&'static Builtin> {
        REGISTRY.iter().find(|b| b.name == name)
    }

    pub fn is_registered(name: &str, params: &[TypeTag]) -> bool {
        lookup(name).is_some_and(|b| b.params == params)
    }

    pub fn registry_summary() -> String {
        REGISTRY
            .iter()
            .map(|b| {
                let params: Vec<&str> = b.params.iter().map(|t| t.keyword()).collect();
                format!("{}({})", b.name, params.join(", "))
            })
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Persistent identity of one function execution record.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct InstanceKey {
    pub path: String,
    pub function: String,
}

impl InstanceKey {
    pub fn new(path: impl Into<String>, function: impl Into<String>) -> Self {
        InstanceKey { path: path.into(), function: function.into() }
    }
}

impl fmt::Display for InstanceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.path, self.function)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Fresh,
    Running,
    Detached,
    Completed,
}

/// What executing an instance means: a behavior diagram, a component
/// intrinsic, or a registered system built-in. System call sites get their
/// own key (`path!fn!node`), mirroring IEC's one-timer-instance-per-use.
#[derive(Clone, Debug, PartialEq)]
enum Executable {
    Diagram { block: String },
    SetSignal,
    GetSignal,
    Builtin { name: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct FunctionInstanceState {
    pub key: InstanceKey,
    pub status: Status,
    pub active_node: Option<String>,
    pub bound_args: Vec<Value>,
    /// Times the current node's action has executed (its "Do" count).
    pub do_count: u32,
    /// Steps consumed by a running `delay` built-in.
    sys_elapsed: i64,
    /// Cycle in which the instance was detached; it is first stepped (and
    /// first recorded) in the following cycle.
    detached_at: Option<u64>,
    exec: Executable,
}

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("unknown invocation target `{0}`")]
    UnknownTarget(String),
    #[error("`{function}` takes {expected} argument(s), {got} given")]
    ArityMismatch { function: String, expected: usize, got: usize },
    #[error("argument {index} of `{function}` expects {expected}, got {got}")]
    ArgType { function: String, index: usize, expected: TypeTag, got: TypeTag },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiredEvent {
    pub key: String,
    pub from: String,
    pub to: String,
    pub kind: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ActiveEntry {
    pub key: String,
    pub node: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssertOutcome {
    pub expr: String,
    pub pass: bool,
}

/// One scan cycle of the trace. Field order is the wire order of the
/// JSON-lines output and is fixed for byte-stable goldens.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CycleRecord {
    pub cycle: u64,
    pub fired: Vec<FiredEvent>,
    pub active: Vec<ActiveEntry>,
    pub detached: Vec<String>,
    pub vars: BTreeMap<String, Value>,
    pub asserts: Vec<AssertOutcome>,
}

impl CycleRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("cycle record serializes")
    }
}

/// Summary entry for one scenario assertion; `outcome` is `None` when the
/// run ended before the assertion's cycle.
#[derive(Clone, Debug, PartialEq)]
pub struct AssertResult {
    pub cycle: u64,
    pub expr: String,
    pub outcome: Option<bool>,
}

impl AssertResult {
    pub fn passed(&self) -> bool {
        self.outcome == Some(true)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub cycles: Vec<CycleRecord>,
    pub asserts: Vec<AssertResult>,
    /// The run hit its cycle bound before the root completed and every
    /// detached instance drained.
    pub diverged: bool,
}

impl Trace {
    pub fn passed(&self) -> bool {
        !self.diverged && self.asserts.iter().all(AssertResult::passed)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for record in &self.cycles {
            out.push_str(&record.to_json_line());
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct ScanState {
    model: Arc<Model>,
    /// Current value of every instance attribute, keyed `path.attr`.
    pub vars: BTreeMap<String, Value>,
    instances: BTreeMap<InstanceKey, FunctionInstanceState>,
    /// Detached keys in detachment order.
    detached: Vec<InstanceKey>,
    root_key: InstanceKey,
    pub cycle: u64,
    /// Instance path -> block name, for lane resolution.
    path_block: BTreeMap<String, String>,
    /// Block name -> effective functions (bodies resolved through the base).
    effective: BTreeMap<String, Vec<FunctionDef>>,
}

struct CycleCtx {
    stepped: BTreeSet<InstanceKey>,
    fired: Vec<FiredEvent>,
}

/// Initializes a run: all variables at their declared initial values, the
/// invoked instance Fresh, cycle 0.
pub fn init_run(model: &Model, path: &str, function: &str, args: &[Value]) -> Result<ScanState, SimError> {
    let tree = model.instantiate_root().map_err(|e| SimError::UnknownTarget(e.to_string()))?;
    let mut vars = BTreeMap::new();
    let mut path_block = BTreeMap::new();
    let mut all = Vec::new();
    tree.walk(&mut all);
    for inst in &all {
        path_block.insert(inst.path.clone(), inst.block.clone());
        for (attr, value) in &inst.variables {
            vars.insert(format!("{}.{attr}", inst.path), *value);
        }
    }
    let effective = model
        .blocks
        .iter()
        .map(|(name, def)| (name.clone(), model.effective_functions(def).into_iter().map(|(f, _)| f).collect()))
        .collect();

    let mut state = ScanState {
        model: Arc::new(model.clone()),
        vars,
        instances: BTreeMap::new(),
        detached: Vec::new(),
        root_key: InstanceKey::new(path, function),
        cycle: 0,
        path_block,
        effective,
    };

    let block = state
        .path_block
        .get(path)
        .cloned()
        .ok_or_else(|| SimError::UnknownTarget(path.to_string()))?;
    let def = state
        .function_of(&block, function)
        .ok_or_else(|| SimError::UnknownTarget(format!("{path}.{function}")))?;
    if def.params.len() != args.len() {
        return Err(SimError::ArityMismatch {
            function: function.to_string(),
            expected: def.params.len(),
            got: args.len(),
        });
    }
    for (i, (param, arg)) in def.params.iter().zip(args).enumerate() {
        if param.ty != arg.type_tag() {
            return Err(SimError::ArgType {
                function: function.to_string(),
                index: i,
                expected: param.ty,
                got: arg.type_tag(),
            });
        }
    }
    let exec = state.executable_for(&block, function);
    let key = state.root_key.clone();
    state.instances.insert(key.clone(), fresh_instance(key, args.to_vec(), exec));
    Ok(state)
}

fn fresh_instance(key: InstanceKey, args: Vec<Value>, exec: Executable) -> FunctionInstanceState {
    FunctionInstanceState {
        key,
        status: Status::Fresh,
        active_node: None,
        bound_args: args,
        do_count: 0,
        sys_elapsed: 0,
        detached_at: None,
        exec,
    }
}

impl ScanState {
    pub fn root_status(&self) -> Status {
        self.instances.get(&self.root_key).map(|i| i.status).unwrap_or(Status::Fresh)
    }

    pub fn finished(&self) -> bool {
        self.root_status() == Status::Completed && self.detached.is_empty()
    }

    pub fn instance(&self, key: &InstanceKey) -> Option<&FunctionInstanceState> {
        self.instances.get(key)
    }

    fn function_of(&self, block: &str, function: &str) -> Option<FunctionDef> {
        self.effective.get(block)?.iter().find(|f| f.name == function).cloned()
    }

    fn executable_for(&self, block: &str, function: &str) -> Executable {
        let def = self.model.block(block).expect("block resolves");
        if self.model.kind_of(def) == BlockKind::Component {
            match function {
                crate::model::SET_SIGNAL => Executable::SetSignal,
                crate::model::GET_SIGNAL => Executable::GetSignal,
                _ => Executable::Diagram { block: block.to_string() },
            }
        } else {
            Executable::Diagram { block: block.to_string() }
        }
    }

    fn lane_path(&self, base: &str, lane: &LanePath) -> String {
        match &lane.head {
            LaneName::SelfLane => base.to_string(),
            LaneName::System => format!("{base}!system"),
            LaneName::Named(n) => format!("{base}.{n}"),
        }
    }

    fn eval_expr(&self, inst: &FunctionInstanceState, def: &FunctionDef, e: &Expr) -> Value {
        match e {
            Expr::Lit { value, .. } => *value,
            Expr::Param { name, .. } => {
                let idx = def
                    .params
                    .iter()
                    .position(|p| &p.name == name)
                    .expect("validated parameter reference");
                inst.bound_args[idx]
            }
            Expr::Attr { path, attr, .. } => {
                let key = format!("{}.{attr}", self.lane_path(&inst.key.path, path));
                *self.vars.get(&key).expect("validated attribute reference")
            }
        }
    }

    fn run_assigns(&mut self, key: &InstanceKey, assigns: &[Assign]) {
        let inst = self.instances.get(key).expect("instance exists").clone();
        let def = self.def_of(&inst);
        for a in assigns {
            let value = self.eval_expr(&inst, &def, &a.value);
            let var = format!("{}.{}", self.lane_path(&inst.key.path, &a.path), a.attr);
            self.vars.insert(var, value);
        }
    }

    fn def_of(&self, inst: &FunctionInstanceState) -> FunctionDef {
        match &inst.exec {
            Executable::Diagram { block } => {
                self.function_of(block, &inst.key.function).expect("validated function")
            }
            Executable::SetSignal | Executable::GetSignal => {
                let block = self.path_block.get(&inst.key.path).expect("component path resolves");
                let def = self.model.block(block).expect("block resolves");
                self.model
                    .intrinsic_functions(def)
                    .into_iter()
                    .find(|f| f.name == inst.key.function)
                    .expect("intrinsic exists")
            }
            Executable::Builtin { name } => {
                self.model.system_function(name).cloned().expect("validated system function")
            }
        }
    }

    fn eval_cond(&self, key: &InstanceKey, cond: &Condition) -> bool {
        let inst = self.instances.get(key).expect("instance exists");
        let def = self.def_of(inst);
        let lhs = self.eval_expr(inst, &def, &cond.lhs);
        let rhs = self.eval_expr(inst, &def, &cond.rhs);
        // type agreement is validated (E008); a mismatch here is an internal
        // fault and reads as false rather than tearing the engine down
        debug_assert_eq!(lhs.type_tag(), rhs.type_tag());
        compare_values(cond.op, lhs, rhs).unwrap_or(false)
    }
}

/// Public strict condition evaluation over a variable snapshot, parameter
/// bindings, and a lane base path.
pub fn eval_condition(
    vars: &BTreeMap<String, Value>,
    base_path: &str,
    params: &[(String, Value)],
    cond: &Condition,
) -> bool {
    let eval = |e: &Expr| -> Option<Value> {
        match e {
            Expr::Lit { value, .. } => Some(*value),
            Expr::Param { name, .. } => params.iter().find(|(n, _)| n == name).map(|(_, v)| *v),
            Expr::Attr { path, attr, .. } => {
                let base = match &path.head {
                    LaneName::SelfLane => base_path.to_string(),
                    LaneName::System => return None,
                    LaneName::Named(n) => format!("{base_path}.{n}"),
                };
                vars.get(&format!("{base}.{attr}")).copied()
            }
        }
    };
    match (eval(&cond.lhs), eval(&cond.rhs)) {
        (Some(a), Some(b)) => compare_values(cond.op, a, b).unwrap_or(false),
        _ => false,
    }
}

/// Executes exactly one scan cycle. Pure: the result depends only on
/// `(state, inputs)`.
pub fn step_cycle(state: &ScanState, inputs: &[(String, Value)]) -> (ScanState, CycleRecord) {
    let mut st = state.clone();
    let mut ctx = CycleCtx { stepped: BTreeSet::new(), fired: Vec::new() };

    // 1. latch inputs
    for (var, value) in inputs {
        st.vars.insert(var.clone(), *value);
    }

    // 2. root instance
    if st.root_status() != Status::Completed {
        let root = st.root_key.clone();
        step_instance(&mut st, &mut ctx, &root);
    }

    // 3. detached instances, in detachment order, skipping ones detached
    //    this very cycle (they are first stepped next cycle)
    let snapshot: Vec<InstanceKey> = st.detached.clone();
    for key in snapshot {
        let Some(inst) = st.instances.get(&key) else { continue };
        if inst.status == Status::Detached && inst.detached_at.is_some_and(|c| c < st.cycle) {
            step_instance(&mut st, &mut ctx, &key);
        }
    }
    st.detached.retain(|k| st.instances.get(k).is_some_and(|i| i.status == Status::Detached));

    // 4. snapshot and record
    let record = CycleRecord {
        cycle: st.cycle,
        fired: ctx.fired,
        active: active_chain(&st),
        detached: st
            .detached
            .iter()
            .filter(|k| {
                st.instances
                    .get(k)
                    .is_some_and(|i| i.detached_at.is_some_and(|c| c < st.cycle))
            })
            .map(|k| k.to_string())
            .collect(),
        vars: st.vars.clone(),
        asserts: Vec::new(),
    };
    st.cycle += 1;
    (st, record)
}

/// Root-to-leaf chain of running diagram instances.
fn active_chain(st: &ScanState) -> Vec<ActiveEntry> {
    let mut out = Vec::new();
    let mut cur = st.root_key.clone();
    loop {
        let Some(inst) = st.instances.get(&cur) else { break };
        if inst.status != Status::Running {
            break;
        }
        let Executable::Diagram { block } = &inst.exec else { break };
        let Some(node_id) = &inst.active_node else { break };
        out.push(ActiveEntry { key: cur.to_string(), node: node_id.clone() });
        // descend into an attached running callee
        let Some(def) = st.function_of(block, &cur.function) else { break };
        let Some(body) = def.body.as_ref() else { break };
        let Some(node) = body.node(node_id) else { break };
        let NodeAction::Call { target, function, .. } = &node.action else { break };
        let callee_path = match &target.head {
            LaneName::System => format!("{}!{}!{}", inst.key.path, inst.key.function, node_id),
            _ => st.lane_path(&inst.key.path, target),
        };
        cur = InstanceKey::new(callee_path, function.clone());
    }
    out
}

fn step_instance(st: &mut ScanState, ctx: &mut CycleCtx, key: &InstanceKey) {
    if !ctx.stepped.insert(key.clone()) {
        return; // already stepped this cycle (one transition per cycle)
    }
    let Some(inst) = st.instances.get(key) else { return };
    match (inst.status, inst.exec.clone()) {
        (Status::Completed, _) => {}
        (Status::Fresh, Executable::SetSignal) => {
            let value = inst.bound_args[0];
            st.vars.insert(format!("{}.{}", key.path, crate::model::SIGNAL_ATTR), value);
            complete(st, key);
        }
        (Status::Fresh, Executable::GetSignal) => complete(st, key),
        (Status::Fresh, Executable::Builtin { name }) => {
            let inst = st.instances.get_mut(key).expect("instance exists");
            match name.as_str() {
                "noop" => inst.status = Status::Completed,
                "delay" => {
                    inst.sys_elapsed = 1;
                    let ticks = match inst.bound_args[0] {
                        Value::Int(t) => t,
                        _ => 0,
                    };
                    inst.status = if inst.sys_elapsed >= ticks { Status::Completed } else { Status::Running };
                }
                other => unreachable!("unregistered builtin `{other}` passed validation"),
            }
        }
        (Status::Running | Status::Detached, Executable::Builtin { name }) => {
            let inst = st.instances.get_mut(key).expect("instance exists");
            if name == "delay" {
                inst.sys_elapsed += 1;
                let ticks = match inst.bound_args[0] {
                    Value::Int(t) => t,
                    _ => 0,
                };
                if inst.sys_elapsed >= ticks {
                    inst.status = Status::Completed;
                }
            }
        }
        (Status::Running | Status::Detached, Executable::SetSignal | Executable::GetSignal) => {
            unreachable!("intrinsics complete on their first step")
        }
        (Status::Fresh, Executable::Diagram { block }) => {
            let def = st.function_of(&block, &key.function).expect("validated function");
            let body = def.body.clone().expect("composite functions have bodies");
            let start = body
                .start_transitions()
                .next()
                .cloned()
                .expect("validated diagram has a start transition");
            st.run_assigns(key, &start.ops);
            ctx.fired.push(FiredEvent {
                key: key.to_string(),
                from: "start".into(),
                to: start.target.to_string(),
                kind: "start".into(),
            });
            match &start.target {
                Endpoint::End => complete(st, key),
                Endpoint::Node(n) => {
                    {
                        let inst = st.instances.get_mut(key).expect("instance exists");
                        inst.status = Status::Running;
                        inst.active_node = Some(n.clone());
                        inst.do_count = 0;
                    }
                    let node = body.node(n).expect("validated node reference").clone();
                    st.run_assigns(key, &node.entry_ops);
                    // first Do executes on the arrival cycle for the start
                    // transition, then the instance stops for this cycle
                    do_action(st, ctx, key, &def, &node);
                }
                Endpoint::Start => unreachable!("start is never a target"),
            }
        }
        (Status::Running | Status::Detached, Executable::Diagram { block }) => {
            let def = st.function_of(&block, &key.function).expect("validated function");
            let body = def.body.clone().expect("composite functions have bodies");
            let node_id = st.instances.get(key).and_then(|i| i.active_node.clone()).expect("running instance has a node");
            let node = body.node(&node_id).expect("validated node reference").clone();

            let enabled = body.outgoing(&node_id).find(|t| match t.kind.as_ref().expect("node transitions are kinded") {
                TransitionKind::Completion => action_complete(st, key, &node),
                TransitionKind::Condition { cond, .. } => st.eval_cond(key, cond),
            });

            match enabled.cloned() {
                Some(t) => {
                    st.run_assigns(key, &node.exit_ops);
                    if let NodeAction::Call { target, function, .. } = &node.action {
                        let callee = callee_key(st, key, &node.id, target, function);
                        if let Some(callee_inst) = st.instances.get(&callee) {
                            if callee_inst.status == Status::Running {
                                let policy = match &t.kind {
                                    Some(TransitionKind::Condition { policy, .. }) => {
                                        policy.unwrap_or(Policy::Restart)
                                    }
                                    _ => Policy::Restart,
                                };
                                apply_policy(st, &callee, policy);
                            }
                        }
                    }
                    st.run_assigns(key, &t.ops);
                    let kind = match &t.kind {
                        Some(TransitionKind::Completion) => "completion",
                        Some(TransitionKind::Condition { .. }) => "condition",
                        None => "start",
                    };
                    ctx.fired.push(FiredEvent {
                        key: key.to_string(),
                        from: node_id.clone(),
                        to: t.target.to_string(),
                        kind: kind.into(),
                    });
                    match &t.target {
                        Endpoint::End => complete(st, key),
                        Endpoint::Node(n) => {
                            {
                                let inst = st.instances.get_mut(key).expect("instance exists");
                                inst.active_node = Some(n.clone());
                                inst.do_count = 0;
                            }
                            let next = body.node(n).expect("validated node reference").clone();
                            st.run_assigns(key, &next.entry_ops);
                            // first Do of the new node executes next cycle
                        }
                        Endpoint::Start => unreachable!("start is never a target"),
                    }
                }
                None => do_action(st, ctx, key, &def, &node),
            }
        }
    }
}

/// A completion transition is enabled once the node's action has run at
/// least once in this activation and (for calls) the callee has completed.
/// The do-count guard keeps a stale completed callee from satisfying a
/// revisited node before its first Do re-invokes it.
fn action_complete(st: &ScanState, key: &InstanceKey, node: &crate::behavior::Node) -> bool {
    let inst = st.instances.get(key).expect("instance exists");
    if inst.do_count == 0 {
        return false;
    }
    match &node.action {
        NodeAction::Set { .. } => true,
        NodeAction::Call { target, function, .. } => {
            let callee = callee_key(st, key, &node.id, target, function);
            st.instances.get(&callee).is_some_and(|i| i.status == Status::Completed)
        }
    }
}

fn callee_key(
    st: &ScanState,
    caller: &InstanceKey,
    node_id: &str,
    target: &LanePath,
    function: &str,
) -> InstanceKey {
    let path = match &target.head {
        // one timer/builtin instance per call site
        LaneName::System => format!("{}!{}!{}", caller.path, caller.function, node_id),
        _ => st.lane_path(&caller.path, target),
    };
    InstanceKey::new(path, function.to_string())
}

fn complete(st: &mut ScanState, key: &InstanceKey) {
    let inst = st.instances.get_mut(key).expect("instance exists");
    inst.status = Status::Completed;
    inst.active_node = None;
    inst.detached_at = None;
}

fn apply_policy(st: &mut ScanState, callee: &InstanceKey, policy: Policy) {
    match policy {
        // the callee keeps its node and waits, paused, for re-invocation
        Policy::Resume => {}
        Policy::Restart => {
            let inst = st.instances.get_mut(callee).expect("instance exists");
            inst.status = Status::Fresh;
            inst.active_node = None;
            inst.do_count = 0;
            inst.sys_elapsed = 0;
        }
        Policy::Continue => {
            let cycle = st.cycle;
            let inst = st.instances.get_mut(callee).expect("instance exists");
            inst.status = Status::Detached;
            inst.detached_at = Some(cycle);
            let key = inst.key.clone();
            if !st.detached.contains(&key) {
                st.detached.push(key);
            }
        }
    }
}

/// One execution of the node's action: assignments re-run; calls invoke,
/// re-invoke, adopt, or advance the callee within this same cycle.
fn do_action(
    st: &mut ScanState,
    ctx: &mut CycleCtx,
    key: &InstanceKey,
    def: &FunctionDef,
    node: &crate::behavior::Node,
) {
    match &node.action {
        NodeAction::Set { assigns } => {
            st.run_assigns(key, assigns);
        }
        NodeAction::Call { target, function, args, .. } => {
            let callee = callee_key(st, key, &node.id, target, function);
            let status = st.instances.get(&callee).map(|i| i.status);
            match status {
                Some(Status::Running) => step_instance(st, ctx, &callee),
                Some(Status::Detached) => {
                    // the caller attaches and waits: the instance leaves the
                    // detached set and is treated as the running call again
                    let inst = st.instances.get_mut(&callee).expect("instance exists");
                    inst.status = Status::Running;
                    inst.detached_at = None;
                    st.detached.retain(|k| k != &callee);
                    step_instance(st, ctx, &callee);
                }
                Some(Status::Fresh) | Some(Status::Completed) | None => {
                    // (re-)invocation binds arguments in the caller's context
                    let caller = st.instances.get(key).expect("instance exists").clone();
                    let values: Vec<Value> = args.iter().map(|a| st.eval_expr(&caller, def, a)).collect();
                    let exec = match &target.head {
                        LaneName::System => Executable::Builtin { name: function.clone() },
                        _ => {
                            let block = st.path_block.get(&callee.path).expect("validated part path").clone();
                            st.executable_for(&block, function)
                        }
                    };
                    st.instances.insert(callee.clone(), fresh_instance(callee.clone(), values, exec));
                    step_instance(st, ctx, &callee);
                }
            }
        }
    }
    if let Some(inst) = st.instances.get_mut(key) {
        inst.do_count += 1;
    }
}

/// Runs a scenario to completion: iterates [`step_cycle`] until the root
/// completes and the detached set drains, or the cycle bound trips
/// (recorded as divergence, not an error). Assertion failures are recorded,
/// never thrown.
pub fn run(model: &Model, scenario: &Scenario) -> Result<Trace, SimError> {
    let inv = &scenario.invocation;
    let mut state = init_run(model, &inv.path, &inv.function, &inv.args)?;
    let mut cycles = Vec::new();
    let mut diverged = true;
    for cycle in 0..scenario.max_cycles {
        if state.finished() {
            diverged = false;
            break;
        }
        let inputs: Vec<(String, Value)> =
            scenario.inputs_for_cycle(cycle).into_iter().map(|(i, k)| (k, i.value)).collect();
        let (next, mut record) = step_cycle(&state, &inputs);
        record.asserts = scenario
            .assertions
            .iter()
            .filter(|a| a.cycle == cycle)
            .map(|a| AssertOutcome { expr: a.to_string(), pass: eval_assert(a, &record.vars) })
            .collect();
        cycles.push(record);
        state = next;
    }
    if state.finished() {
        diverged = false;
    }
    let asserts = scenario
        .assertions
        .iter()
        .map(|a| {
            let outcome = cycles
                .iter()
                .find(|r| r.cycle == a.cycle)
                .map(|r| eval_assert(a, &r.vars));
            AssertResult { cycle: a.cycle, expr: a.to_string(), outcome }
        })
        .collect();
    Ok(Trace { cycles, asserts, diverged })
}

fn eval_assert(a: &Assertion, vars: &BTreeMap<String, Value>) -> bool {
    a.eval(&|key| vars.get(key).copied())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_model;
    use crate::scenario::parse_scenario;

    fn model(text: &str) -> Model {
        let m = parse_model(text, "t.modat").unwrap();
        let diags = crate::validate::validate(&m);
        assert!(diags.is_empty(), "model not clean: {diags:?}");
        m
    }

    const MINIMAL: &str = "\
block Rig kind composite {
  attr x: INT = 0
  function go() {
    lanes self
    node a: set self.x := 1
    start -> a
    a -> end on completion
  }
}
root rig: Rig
";

    #[test]
    fn minimal_program_completes_after_two_cycles() {
        let m = model(MINIMAL);
        let scn = parse_scenario("invoke rig.go()\nmaxcycles 10\n", "t.scn", &m).unwrap();
        let trace = run(&m, &scn).unwrap();
        assert!(!trace.diverged);
        assert_eq!(trace.cycles.len(), 2);
        // cycle 0: start fires and the first Do runs
        assert_eq!(trace.cycles[0].fired.len(), 1);
        assert_eq!(trace.cycles[0].fired[0].kind, "start");
        assert_eq!(trace.cycles[0].vars["rig.x"], Value::Int(1));
        // cycle 1: the completion transition fires
        assert_eq!(trace.cycles[1].fired[0].kind, "completion");
        assert_eq!(trace.cycles[1].fired[0].to, "end");
    }

    #[test]
    fn max_cycles_zero_is_an_empty_diverged_trace() {
        let m = model(MINIMAL);
        let scn = parse_scenario("invoke rig.go()\nmaxcycles 0\n", "t.scn", &m).unwrap();
        let trace = run(&m, &scn).unwrap();
        assert!(trace.cycles.is_empty());
        assert!(trace.diverged);
        assert!(!trace.passed());
    }

    #[test]
    fn init_checks_target_and_arity() {
        let m = model(MINIMAL);
        assert_eq!(
            init_run(&m, "rig.ghost", "go", &[]).unwrap_err(),
            SimError::UnknownTarget("rig.ghost".into())
        );
        assert_eq!(
            init_run(&m, "rig", "go", &[Value::Int(1)]).unwrap_err(),
            SimError::ArityMismatch { function: "go".into(), expected: 0, got: 1 }
        );
    }

    const FIG5_PATTERN: &str = "\
block BinaryActuator kind component out BOOL {}
block AnalogSensor kind component in INT {}
block StampCylinder kind composite {
  part valveExtend: BinaryActuator
  part valveRetract: BinaryActuator
  part pressureSensor: AnalogSensor
  function extend(targetPressure: INT) {
    lanes self, valveRetract, valveExtend, pressureSensor
    node n1: call valveRetract.setSignal(FALSE)
    node n2: call valveExtend.setSignal(TRUE)
    start -> n1
    n1 -> n2 on completion
    n2 -> end when pressureSensor.Signal >= targetPressure
  }
}
root sc: StampCylinder
";

    #[test]
    fn pressure_ramp_reaches_end_when_threshold_latched() {
        let m = model(FIG5_PATTERN);
        let scn = parse_scenario(
            "invoke sc.extend(40)\n\
             at 0 set sc.pressureSensor.Signal = 0\n\
             at 1 set sc.pressureSensor.Signal = 10\n\
             at 2 set sc.pressureSensor.Signal = 20\n\
             at 3 set sc.pressureSensor.Signal = 30\n\
             at 4 set sc.pressureSensor.Signal = 40\n\
             at 5 set sc.pressureSensor.Signal = 50\n\
             maxcycles 10\n",
            "t.scn",
            &m,
        )
        .unwrap();
        let trace = run(&m, &scn).unwrap();
        assert!(!trace.diverged);
        // hand trace: c0 start->n1 + setSignal(FALSE); c1 completion n1->n2;
        // c2, c3 repeat valveExtend.setSignal(TRUE); c4 condition 40>=40 fires
        assert_eq!(trace.cycles.len(), 5);
        assert_eq!(trace.cycles[0].vars["sc.valveRetract.Signal"], Value::Bool(false));
        assert_eq!(trace.cycles[1].fired[0].kind, "completion");
        assert_eq!(trace.cycles[2].vars["sc.valveExtend.Signal"], Value::Bool(true));
        assert_eq!(trace.cycles[4].fired[0].kind, "condition");
        assert_eq!(trace.cycles[4].fired[0].to, "end");
    }

    #[test]
    fn active_chain_lists_running_diagram_instances() {
        let m = model(FIG5_PATTERN);
        let scn = parse_scenario("invoke sc.extend(40)\nmaxcycles 3\n", "t.scn", &m).unwrap();
        let trace = run(&m, &scn).unwrap();
        let active = &trace.cycles[1].active;
        assert_eq!(active.len(), 1);
        assert_eq!(active[0].key, "sc:extend");
        assert_eq!(active[0].node, "n2");
    }

    #[test]
    fn traces_are_replayable_byte_identical() {
        let m = model(FIG5_PATTERN);
        let scn = parse_scenario(
            "invoke sc.extend(40)\nat 2 set sc.pressureSensor.Signal = 45\nmaxcycles 10\n",
            "t.scn",
            &m,
        )
        .unwrap();
        let a = run(&m, &scn).unwrap();
        let b = run(&m, &scn).unwrap();
        assert_eq!(a.to_jsonl(), b.to_jsonl());
        assert_eq!(a, b);
    }

    #[test]
    fn delay_builtin_counts_scan_cycles() {
        let text = "\
block Rig kind composite {
  attr x: INT = 0
  function go() {
    lanes self, system
    node w: call system.delay(3)
    node m: set self.x := 7
    start -> w
    w -> m on completion
    m -> end on completion
  }
}
system {
  function delay(ticks: INT)
}
root rig: Rig
";
        let m = model(text);
        let scn = parse_scenario("invoke rig.go()\nmaxcycles 10\n", "t.scn", &m).unwrap();
        let trace = run(&m, &scn).unwrap();
        // c0 start->w + delay step1; c1 step2; c2 step3 completes; c3 w->m;
        // c4 do x:=7; c5 m->end
        assert_eq!(trace.cycles.len(), 6);
        assert_eq!(trace.cycles[3].fired[0].kind, "completion");
        assert_eq!(trace.cycles[4].vars["rig.x"], Value::Int(7));
    }

    #[test]
    fn intrinsic_root_invocation_completes_in_one_cycle() {
        let text = "\
block Valve kind component out BOOL {}
block Rig kind composite {
  part v: Valve
  function go() {
    lanes self, v
    node a: call v.setSignal(TRUE)
    start -> a
    a -> end on completion
  }
}
root rig: Rig
";
        let m = model(text);
        let scn = parse_scenario("invoke rig.v.setSignal(TRUE)\nmaxcycles 5\n", "t.scn", &m).unwrap();
        let trace = run(&m, &scn).unwrap();
        assert_eq!(trace.cycles.len(), 1);
        assert_eq!(trace.cycles[0].vars["rig.v.Signal"], Value::Bool(true));
    }
}
