//! In-memory representation of the modAT4rMS meta-model: block definitions,
//! single-level inheritance, effective interfaces, and instantiation.
//!
//! [`Model`] values are immutable after construction; the `define_*`
//! operations return a new model. The DSL parser builds models through its
//! own batch resolution (so that depth violations reach the validator as
//! E001 instead of failing the parse), while the eager API here enforces the
//! meta-model rules directly for programmatic construction.

use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

use crate::behavior::BehaviorDef;
use crate::span::Span;

/// Implicit single-signal attribute every component block exposes.
pub const SIGNAL_ATTR: &str = "Signal";
/// Intrinsic setter offered by every component block.
pub const SET_SIGNAL: &str = "setSignal";
/// Intrinsic getter offered by every component block.
pub const GET_SIGNAL: &str = "getSignal";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TypeTag {
    Bool,
    Int,
    Real,
    Time,
}

impl TypeTag {
    pub fn keyword(self) -> &'static str {
        match self {
            TypeTag::Bool => "BOOL",
            TypeTag::Int => "INT",
            TypeTag::Real => "REAL",
            TypeTag::Time => "TIME",
        }
    }

    pub fn zero(self) -> Value {
        match self {
            TypeTag::Bool => Value::Bool(false),
            TypeTag::Int => Value::Int(0),
            TypeTag::Real => Value::Real(0.0),
            TypeTag::Time => Value::Time(0),
        }
    }
}

impl fmt::Display for TypeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.keyword())
    }
}

/// A runtime value / literal. `Time` is a duration in milliseconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Real(f64),
    Time(i64),
}

impl Value {
    pub fn type_tag(&self) -> TypeTag {
        match self {
            Value::Bool(_) => TypeTag::Bool,
            Value::Int(_) => TypeTag::Int,
            Value::Real(_) => TypeTag::Real,
            Value::Time(_) => TypeTag::Time,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(true) => write!(f, "TRUE"),
            Value::Bool(false) => write!(f, "FALSE"),
            Value::Int(i) => write!(f, "{i}"),
            // {:?} keeps a decimal point or exponent, so the literal reparses
            // as REAL ("40.0", "1e300"), unlike Display ("40").
            Value::Real(r) => write!(f, "{r:?}"),
            Value::Time(ms) => write!(f, "{ms}ms"),
        }
    }
}

/// Trace wire form: BOOL/INT/REAL as JSON primitives, TIME as `"<ms>ms"`.
impl serde::Serialize for Value {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Bool(b) => serializer.serialize_bool(*b),
            Value::Int(i) => serializer.serialize_i64(*i),
            Value::Real(r) => serializer.serialize_f64(*r),
            Value::Time(ms) => serializer.serialize_str(&format!("{ms}ms")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BlockKind {
    Component,
    Composite,
    System,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IoDirection {
    None,
    Input,
    Output,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttributeDef {
    pub name: String,
    pub ty: TypeTag,
    pub initial: Value,
    pub io: IoDirection,
    pub span: Span,
}

impl AttributeDef {
    pub fn new(name: impl Into<String>, ty: TypeTag, initial: Value) -> Self {
        AttributeDef { name: name.into(), ty, initial, io: IoDirection::None, span: Span::synthetic() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: TypeTag,
    pub span: Span,
}

impl Param {
    pub fn new(name: impl Into<String>, ty: TypeTag) -> Self {
        Param { name: name.into(), ty, span: Span::synthetic() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<Param>,
    /// Absent only for component intrinsics and system functions.
    pub body: Option<BehaviorDef>,
    pub span: Span,
}

impl FunctionDef {
    pub fn signature(name: impl Into<String>, params: Vec<Param>) -> Self {
        FunctionDef { name: name.into(), params, body: None, span: Span::synthetic() }
    }

    pub fn param_types(&self) -> Vec<(String, TypeTag)> {
        self.params.iter().map(|p| (p.name.clone(), p.ty)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartDef {
    pub name: String,
    pub block: String,
    pub span: Span,
}

impl PartDef {
    pub fn new(name: impl Into<String>, block: impl Into<String>) -> Self {
        PartDef { name: name.into(), block: block.into(), span: Span::synthetic() }
    }
}

/// One block definition. A block with `base` set is a variant of that base.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockDef {
    pub name: String,
    pub kind: BlockKind,
    pub base: Option<String>,
    /// Component io clause: type and direction of the implicit Signal.
    /// `None` on composites, and on components defaulting to (BOOL, io None).
    pub signal_io: Option<(TypeTag, IoDirection)>,
    pub parts: Vec<PartDef>,
    pub attributes: Vec<AttributeDef>,
    pub functions: Vec<FunctionDef>,
    pub span: Span,
}

impl BlockDef {
    pub fn composite(name: impl Into<String>) -> Self {
        BlockDef {
            name: name.into(),
            kind: BlockKind::Composite,
            base: None,
            signal_io: None,
            parts: Vec::new(),
            attributes: Vec::new(),
            functions: Vec::new(),
            span: Span::synthetic(),
        }
    }

    pub fn component(name: impl Into<String>, ty: TypeTag, io: IoDirection) -> Self {
        BlockDef {
            name: name.into(),
            kind: BlockKind::Component,
            base: None,
            signal_io: Some((ty, io)),
            parts: Vec::new(),
            attributes: Vec::new(),
            functions: Vec::new(),
            span: Span::synthetic(),
        }
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn attribute(&self, name: &str) -> Option<&AttributeDef> {
        self.attributes.iter().find(|a| a.name == name)
    }
}

/// Visual lock status of a variant's function: closed padlock, open padlock,
/// or key. Computed, never stored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LockStatus {
    Inherited,
    Overridden,
    New,
}

impl fmt::Display for LockStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LockStatus::Inherited => write!(f, "inherited"),
            LockStatus::Overridden => write!(f, "overridden"),
            LockStatus::New => write!(f, "new"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RootDecl {
    pub block: String,
    pub instance: String,
    pub span: Span,
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("block `{0}` is already defined")]
    DuplicateBlock(String),
    #[error("block `{block}` references undefined block `{reference}`")]
    UnresolvedReference { block: String, reference: String },
    #[error("base `{base}` is itself a variant (inheritance depth is limited to one)")]
    BaseIsVariant { base: String },
    #[error("part `{part}` is already present in the effective part set of `{block}`")]
    DuplicatePart { block: String, part: String },
    #[error("block `{0}` transitively contains itself")]
    CyclicContainment(String),
    #[error("unknown block `{0}`")]
    UnknownBlock(String),
    #[error("block `{block}` has no function `{function}` in its effective interface")]
    UnknownFunction { block: String, function: String },
    #[error("block `{0}` has no base; lock status is defined for variants")]
    NotAVariant(String),
    #[error("block `{variant}` is not a variant of `{base}`")]
    NotAVariantOf { variant: String, base: String },
    #[error(
        "variant `{variant}` adds members ({members}) to its base; promoting it cannot preserve \
         the effective definitions of the other family members"
    )]
    AdditiveVariant { variant: String, members: String },
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
}

/// Library of block definitions plus system-function signatures and the
/// single root instance declaration.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub blocks: IndexMap<String, BlockDef>,
    pub system_functions: Vec<FunctionDef>,
    pub root: RootDecl,
}

impl Model {
    pub fn new(root_block: impl Into<String>, root_instance: impl Into<String>) -> Self {
        Model {
            blocks: IndexMap::new(),
            system_functions: Vec::new(),
            root: RootDecl { block: root_block.into(), instance: root_instance.into(), span: Span::synthetic() },
        }
    }

    pub fn block(&self, name: &str) -> Option<&BlockDef> {
        self.blocks.get(name)
    }

    pub fn system_function(&self, name: &str) -> Option<&FunctionDef> {
        self.system_functions.iter().find(|f| f.name == name)
    }

    fn require(&self, name: &str) -> Result<&BlockDef, ModelError> {
        self.block(name).ok_or_else(|| ModelError::UnknownBlock(name.to_string()))
    }

    /// Base definition of a block, if any.
    pub fn base_of(&self, def: &BlockDef) -> Option<&BlockDef> {
        def.base.as_deref().and_then(|b| self.block(b))
    }

    /// Adds a definition. References (parts, base) must resolve against the
    /// already-defined blocks or the definition itself; deeper rules are the
    /// validator's business.
    pub fn define_block(&self, def: BlockDef) -> Result<Model, ModelError> {
        if self.blocks.contains_key(&def.name) {
            return Err(ModelError::DuplicateBlock(def.name));
        }
        for part in &def.parts {
            if part.block != def.name && !self.blocks.contains_key(&part.block) {
                return Err(ModelError::UnresolvedReference {
                    block: def.name.clone(),
                    reference: part.block.clone(),
                });
            }
        }
        if let Some(base) = &def.base {
            if !self.blocks.contains_key(base) {
                return Err(ModelError::UnresolvedReference { block: def.name.clone(), reference: base.clone() });
            }
        }
        let mut next = self.clone();
        next.blocks.insert(def.name.clone(), def);
        Ok(next)
    }

    /// Adds a variant of `base_name`. The depth-one rule is enforced eagerly:
    /// a base that is itself a variant is rejected.
    pub fn define_variant(&self, base_name: &str, mut def: BlockDef) -> Result<Model, ModelError> {
        let base = self.require(base_name)?;
        if base.base.is_some() {
            return Err(ModelError::BaseIsVariant { base: base_name.to_string() });
        }
        def.base = Some(base_name.to_string());
        def.kind = base.kind;
        self.define_block(def)
    }

    /// Effective-interface entries come from [`effective_functions`]: base
    /// declaration order with overrides in place, then new functions, each
    /// tagged with its lock status. Component blocks expose exactly their
    /// intrinsics.
    pub fn effective_interface(&self, block_name: &str) -> Result<Vec<(FunctionDef, LockStatus)>, ModelError> {
        let def = self.require(block_name)?;
        Ok(self.effective_functions(def))
    }

    fn effective_signal(&self, def: &BlockDef) -> (TypeTag, IoDirection) {
        let mut cur = def;
        for _ in 0..=self.blocks.len() {
            if let Some(sig) = cur.signal_io {
                return sig;
            }
            match self.base_of(cur) {
                Some(base) => cur = base,
                None => break,
            }
        }
        (TypeTag::Bool, IoDirection::None)
    }

    /// Intrinsic interface of a component block.
    pub fn intrinsic_functions(&self, def: &BlockDef) -> Vec<FunctionDef> {
        let (ty, _) = self.effective_signal(def);
        vec![
            FunctionDef::signature(SET_SIGNAL, vec![Param::new("v", ty)]),
            FunctionDef::signature(GET_SIGNAL, vec![]),
        ]
    }

    pub fn effective_functions(&self, def: &BlockDef) -> Vec<(FunctionDef, LockStatus)> {
        if self.kind_of(def) == BlockKind::Component {
            let status = if def.base.is_some() { LockStatus::Inherited } else { LockStatus::New };
            return self.intrinsic_functions(def).into_iter().map(|f| (f, status)).collect();
        }
        let Some(base) = self.base_of(def) else {
            return def.functions.iter().map(|f| (f.clone(), LockStatus::New)).collect();
        };
        let inherited = self.effective_functions(base);
        let mut out: Vec<(FunctionDef, LockStatus)> = Vec::with_capacity(inherited.len());
        for (base_fn, _) in inherited {
            match def.function(&base_fn.name) {
                // A redeclaration identical to the base definition shows a
                // closed padlock; only an altered one opens it.
                Some(own) if *own == base_fn => out.push((own.clone(), LockStatus::Inherited)),
                Some(own) => out.push((own.clone(), LockStatus::Overridden)),
                None => out.push((base_fn, LockStatus::Inherited)),
            }
        }
        for own in &def.functions {
            if !out.iter().any(|(f, _)| f.name == own.name) {
                out.push((own.clone(), LockStatus::New));
            }
        }
        out
    }

    /// Kind of a block, following the base chain for variants (the variant
    /// syntax carries no kind of its own).
    pub fn kind_of(&self, def: &BlockDef) -> BlockKind {
        let mut cur = def;
        for _ in 0..=self.blocks.len() {
            match self.base_of(cur) {
                Some(base) => cur = base,
                None => break,
            }
        }
        cur.kind
    }

    /// Base parts in declaration order followed by variant-added parts.
    pub fn effective_parts(&self, block_name: &str) -> Result<Vec<PartDef>, ModelError> {
        let def = self.require(block_name)?;
        let mut out: Vec<PartDef> = match self.base_of(def) {
            Some(base) => self.effective_parts(&base.name)?,
            None => Vec::new(),
        };
        for part in &def.parts {
            if out.iter().any(|p| p.name == part.name) {
                return Err(ModelError::DuplicatePart { block: def.name.clone(), part: part.name.clone() });
            }
            out.push(part.clone());
        }
        Ok(out)
    }

    /// Base attributes (with variant initial-value adaptions applied in
    /// place) followed by variant-added attributes. Components additionally
    /// lead with the implicit Signal.
    pub fn effective_attributes(&self, block_name: &str) -> Result<Vec<AttributeDef>, ModelError> {
        let def = self.require(block_name)?;
        let mut out: Vec<AttributeDef> = match self.base_of(def) {
            Some(base) => self.effective_attributes(&base.name)?,
            None => {
                if self.kind_of(def) == BlockKind::Component {
                    let (ty, io) = self.effective_signal(def);
                    vec![AttributeDef {
                        name: SIGNAL_ATTR.to_string(),
                        ty,
                        initial: ty.zero(),
                        io,
                        span: def.span.clone(),
                    }]
                } else {
                    Vec::new()
                }
            }
        };
        for attr in &def.attributes {
            match out.iter_mut().find(|a| a.name == attr.name) {
                Some(existing) => *existing = attr.clone(),
                None => out.push(attr.clone()),
            }
        }
        Ok(out)
    }

    /// Full instance tree rooted at `instance_name`, every effective
    /// attribute initialized to its declared initial value.
    pub fn instantiate(&self, block_name: &str, instance_name: &str) -> Result<ObjectInstance, ModelError> {
        let mut visiting = Vec::new();
        self.instantiate_at(block_name, instance_name.to_string(), &mut visiting)
    }

    fn instantiate_at(
        &self,
        block_name: &str,
        path: String,
        visiting: &mut Vec<String>,
    ) -> Result<ObjectInstance, ModelError> {
        let def = self.require(block_name)?;
        if visiting.iter().any(|b| b == block_name) {
            return Err(ModelError::CyclicContainment(block_name.to_string()));
        }
        visiting.push(block_name.to_string());
        let mut variables = IndexMap::new();
        for attr in self.effective_attributes(block_name)? {
            variables.insert(attr.name.clone(), attr.initial);
        }
        let mut children = Vec::new();
        for part in self.effective_parts(block_name)? {
            let child_path = format!("{path}.{}", part.name);
            children.push(self.instantiate_at(&part.block, child_path, visiting)?);
        }
        visiting.pop();
        Ok(ObjectInstance { path, block: def.name.clone(), children, variables })
    }

    /// Instantiates the declared root.
    pub fn instantiate_root(&self) -> Result<ObjectInstance, ModelError> {
        self.instantiate(&self.root.block.clone(), &self.root.instance.clone())
    }
}

/// One node of the instance tree: dotted path from the root, resolved block,
/// part instances, and current attribute values.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectInstance {
    pub path: String,
    pub block: String,
    pub children: Vec<ObjectInstance>,
    pub variables: IndexMap<String, Value>,
}

impl ObjectInstance {
    /// Locates a descendant (or self) by full dotted path.
    pub fn find(&self, path: &str) -> Option<&ObjectInstance> {
        if self.path == path {
            return Some(self);
        }
        if !path.starts_with(&self.path) {
            return None;
        }
        self.children.iter().find_map(|c| c.find(path))
    }

    /// Depth-first walk over the whole tree, self first then parts in order.
    pub fn walk<'a>(&'a self, out: &mut Vec<&'a ObjectInstance>) {
        out.push(self);
        for child in &self.children {
            child.walk(out);
        }
    }

    pub fn count(&self) -> usize {
        1 + self.children.iter().map(ObjectInstance::count).sum::<usize>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cylinder_family() -> Model {
        let mut model = Model::new("Cylinder", "cyl");
        model = model
            .define_block(BlockDef::component("BinaryActuator", TypeTag::Bool, IoDirection::Output))
            .unwrap();
        model = model
            .define_block(BlockDef::component("AnalogSensor", TypeTag::Int, IoDirection::Input))
            .unwrap();
        let mut cyl = BlockDef::composite("Cylinder");
        cyl.parts = vec![PartDef::new("valveExtend", "BinaryActuator"), PartDef::new("valveRetract", "BinaryActuator")];
        cyl.functions = vec![
            FunctionDef::signature("retract", vec![]),
            FunctionDef::signature("selftest", vec![]),
            FunctionDef::signature("extend", vec![]),
        ];
        model = model.define_block(cyl).unwrap();
        let mut stamp_cyl = BlockDef::composite("StampCylinder");
        stamp_cyl.parts = vec![PartDef::new("pressureSensor", "AnalogSensor")];
        stamp_cyl.functions =
            vec![FunctionDef::signature("extend", vec![Param::new("targetPressure", TypeTag::Int)])];
        model = model.define_variant("Cylinder", stamp_cyl).unwrap();
        model
    }

    #[test]
    fn define_block_rejects_duplicates() {
        let model = cylinder_family();
        let err = model.define_block(BlockDef::composite("Cylinder")).unwrap_err();
        assert_eq!(err, ModelError::DuplicateBlock("Cylinder".into()));
    }

    #[test]
    fn define_block_rejects_dangling_part() {
        let model = Model::new("Stamp", "stamp");
        let mut stamp = BlockDef::composite("Stamp");
        stamp.parts = vec![PartDef::new("foo", "Foo")];
        let err = model.define_block(stamp).unwrap_err();
        assert_eq!(err, ModelError::UnresolvedReference { block: "Stamp".into(), reference: "Foo".into() });
    }

    #[test]
    fn self_reference_is_defined_but_cyclic_to_instantiate() {
        let model = Model::new("A", "a");
        let mut a = BlockDef::composite("A");
        a.parts = vec![PartDef::new("inner", "A")];
        let model = model.define_block(a).unwrap();
        assert_eq!(model.instantiate("A", "a").unwrap_err(), ModelError::CyclicContainment("A".into()));
    }

    #[test]
    fn define_variant_rejects_depth_two() {
        let model = cylinder_family();
        let err = model.define_variant("StampCylinder", BlockDef::composite("SuperStampCylinder")).unwrap_err();
        assert_eq!(err, ModelError::BaseIsVariant { base: "StampCylinder".into() });
    }

    #[test]
    fn effective_interface_orders_and_tags() {
        let model = cylinder_family();
        let iface = model.effective_interface("StampCylinder").unwrap();
        let tags: Vec<(&str, LockStatus)> = iface.iter().map(|(f, s)| (f.name.as_str(), *s)).collect();
        assert_eq!(
            tags,
            vec![
                ("retract", LockStatus::Inherited),
                ("selftest", LockStatus::Inherited),
                ("extend", LockStatus::Overridden),
            ]
        );
        // the overridden entry carries the variant's signature
        assert_eq!(iface[2].0.params.len(), 1);
    }

    #[test]
    fn base_block_functions_are_all_new() {
        let model = cylinder_family();
        let iface = model.effective_interface("Cylinder").unwrap();
        assert!(iface.iter().all(|(_, s)| *s == LockStatus::New));
        assert_eq!(iface.len(), 3);
    }

    #[test]
    fn identical_redeclaration_stays_inherited() {
        let model = cylinder_family();
        let mut twin = BlockDef::composite("TwinCylinder");
        twin.functions = vec![FunctionDef::signature("retract", vec![])];
        let model = model.define_variant("Cylinder", twin).unwrap();
        let iface = model.effective_interface("TwinCylinder").unwrap();
        assert_eq!(iface[0].0.name, "retract");
        assert_eq!(iface[0].1, LockStatus::Inherited);
    }

    #[test]
    fn component_interface_is_the_intrinsics() {
        let model = cylinder_family();
        let iface = model.effective_interface("AnalogSensor").unwrap();
        let names: Vec<&str> = iface.iter().map(|(f, _)| f.name.as_str()).collect();
        assert_eq!(names, vec![SET_SIGNAL, GET_SIGNAL]);
        assert_eq!(iface[0].0.params[0].ty, TypeTag::Int);
    }

    #[test]
    fn effective_parts_appends_variant_parts() {
        let model = cylinder_family();
        let mut transport = BlockDef::composite("TransportCylinder");
        transport.parts = vec![PartDef::new("endPosFront", "AnalogSensor"), PartDef::new("endPosBack", "AnalogSensor")];
        let model = model.define_variant("Cylinder", transport).unwrap();
        let parts: Vec<String> =
            model.effective_parts("TransportCylinder").unwrap().into_iter().map(|p| p.name).collect();
        assert_eq!(parts, vec!["valveExtend", "valveRetract", "endPosFront", "endPosBack"]);
        assert!(model.effective_parts("BinaryActuator").unwrap().is_empty());
    }

    #[test]
    fn part_shadowing_is_a_duplicate() {
        let model = cylinder_family();
        let mut bad = BlockDef::composite("BadCylinder");
        bad.parts = vec![PartDef::new("valveExtend", "BinaryActuator")];
        let model = model.define_variant("Cylinder", bad).unwrap();
        assert_eq!(
            model.effective_parts("BadCylinder").unwrap_err(),
            ModelError::DuplicatePart { block: "BadCylinder".into(), part: "valveExtend".into() }
        );
    }

    #[test]
    fn instantiate_initializes_every_attribute() {
        let model = cylinder_family();
        let tree = model.instantiate("StampCylinder", "sc").unwrap();
        assert_eq!(tree.count(), 4); // sc + two valves + pressure sensor
        let valve = tree.find("sc.valveExtend").unwrap();
        assert_eq!(valve.variables.get(SIGNAL_ATTR), Some(&Value::Bool(false)));
        let sensor = tree.find("sc.pressureSensor").unwrap();
        assert_eq!(sensor.variables.get(SIGNAL_ATTR), Some(&Value::Int(0)));
    }

    #[test]
    fn attribute_adaption_changes_initial_only() {
        let mut model = cylinder_family();
        let mut base = BlockDef::composite("Holder");
        base.attributes = vec![AttributeDef::new("limit", TypeTag::Int, Value::Int(10))];
        model = model.define_block(base).unwrap();
        let mut var = BlockDef::composite("BigHolder");
        var.attributes = vec![AttributeDef::new("limit", TypeTag::Int, Value::Int(99))];
        model = model.define_variant("Holder", var).unwrap();
        let attrs = model.effective_attributes("BigHolder").unwrap();
        assert_eq!(attrs.len(), 1);
        assert_eq!(attrs[0].initial, Value::Int(99));
    }

    #[test]
    fn definition_ops_are_pure() {
        let model = cylinder_family();
        let before = model.clone();
        let _ = model.define_block(BlockDef::composite("Extra")).unwrap();
        assert_eq!(model, before);
    }
}
