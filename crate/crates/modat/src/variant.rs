//! Variant lifecycle transformations: lock-status computation, interface
//! diffing, and the base-block change (rebase).
//!
//! Rebase promotes a chosen variant to be the new family base: the new base
//! takes the family name and carries the variant's effective definition, the
//! old base is demoted to a variant (default name `<Name>_Classic`), the
//! promoted variant's own name survives as an empty alias variant, and every
//! other variant keeps its effective definition by materializing (copying
//! down) each inherited member whose value would change under the new base.
//!
//! Promotion is refused for variants that *add* members (functions,
//! attributes, or any part): the meta-model has no member removal, so an
//! added member would necessarily leak into the effective definition of the
//! demoted base and of every sibling — exactly the "keep their distinct
//! functionalities" contract a rebase must not break.

use indexmap::IndexMap;

use crate::formatter::function_fingerprint;
use crate::model::{AttributeDef, BlockDef, FunctionDef, LockStatus, Model, ModelError};

/// Set differences between two effective interfaces. The three sets are
/// pairwise disjoint.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InterfaceDiff {
    pub added: Vec<String>,
    pub removed: Vec<String>,
    pub changed: Vec<String>,
}

impl InterfaceDiff {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty() && self.changed.is_empty()
    }
}

/// Padlock/key status of one function of a variant block.
pub fn compute_lock_status(model: &Model, variant_name: &str, function_name: &str) -> Result<LockStatus, ModelError> {
    let def = model.block(variant_name).ok_or_else(|| ModelError::UnknownBlock(variant_name.to_string()))?;
    if def.base.is_none() {
        return Err(ModelError::NotAVariant(variant_name.to_string()));
    }
    model
        .effective_functions(def)
        .into_iter()
        .find(|(f, _)| f.name == function_name)
        .map(|(_, status)| status)
        .ok_or_else(|| ModelError::UnknownFunction {
            block: variant_name.to_string(),
            function: function_name.to_string(),
        })
}

/// Effective-interface difference from `a` to `b`, by name; `changed`
/// compares signature and body through the canonical fingerprint.
pub fn diff_interface(model: &Model, a: &str, b: &str) -> Result<InterfaceDiff, ModelError> {
    let def_a = model.block(a).ok_or_else(|| ModelError::UnknownBlock(a.to_string()))?;
    let def_b = model.block(b).ok_or_else(|| ModelError::UnknownBlock(b.to_string()))?;
    let fns_a: Vec<FunctionDef> = model.effective_functions(def_a).into_iter().map(|(f, _)| f).collect();
    let fns_b: Vec<FunctionDef> = model.effective_functions(def_b).into_iter().map(|(f, _)| f).collect();
    let mut diff = InterfaceDiff::default();
    for f in &fns_b {
        if !fns_a.iter().any(|g| g.name == f.name) {
            diff.added.push(f.name.clone());
        }
    }
    for f in &fns_a {
        match fns_b.iter().find(|g| g.name == f.name) {
            None => diff.removed.push(f.name.clone()),
            Some(g) => {
                if function_fingerprint(f) != function_fingerprint(g) {
                    diff.changed.push(f.name.clone());
                }
            }
        }
    }
    Ok(diff)
}

/// Result of a base-block change: the transformed model plus the name the
/// demoted former base received.
#[derive(Clone, Debug)]
pub struct RebaseOutcome {
    pub model: Model,
    pub demoted_name: String,
}

/// Members the variant adds over its base; promotion requires this to be
/// empty.
fn added_members(base: &BlockDef, variant: &BlockDef) -> Vec<String> {
    let mut out = Vec::new();
    for p in &variant.parts {
        out.push(format!("part {}", p.name));
    }
    for a in &variant.attributes {
        if base.attribute(&a.name).is_none() {
            out.push(format!("attr {}", a.name));
        }
    }
    for f in &variant.functions {
        if base.function(&f.name).is_none() {
            out.push(format!("function {}", f.name));
        }
    }
    out
}

/// Base-block change (see module docs). `demoted_name` overrides the
/// default `<Name>_Classic`.
pub fn rebase(
    model: &Model,
    old_base_name: &str,
    variant_name: &str,
    demoted_name: Option<&str>,
) -> Result<RebaseOutcome, ModelError> {
    let old_base = model.block(old_base_name).ok_or_else(|| ModelError::UnknownBlock(old_base_name.to_string()))?;
    let variant = model.block(variant_name).ok_or_else(|| ModelError::UnknownBlock(variant_name.to_string()))?;
    if variant.base.as_deref() != Some(old_base_name) {
        return Err(ModelError::NotAVariantOf {
            variant: variant_name.to_string(),
            base: old_base_name.to_string(),
        });
    }
    let added = added_members(old_base, variant);
    if !added.is_empty() {
        return Err(ModelError::AdditiveVariant { variant: variant_name.to_string(), members: added.join(", ") });
    }

    // the new base: the old base's member skeleton with the promoted
    // variant's overrides and adaptions applied in place
    let new_base = BlockDef {
        name: old_base_name.to_string(),
        kind: old_base.kind,
        base: None,
        signal_io: old_base.signal_io,
        parts: old_base.parts.clone(),
        attributes: old_base
            .attributes
            .iter()
            .map(|a| variant.attribute(&a.name).unwrap_or(a).clone())
            .collect(),
        functions: old_base
            .functions
            .iter()
            .map(|f| variant.function(&f.name).unwrap_or(f).clone())
            .collect(),
        span: variant.span.clone(),
    };

    // demoted former base: redeclare exactly the members whose inherited
    // value under the new base would differ from the old definition
    let demoted_name = match demoted_name {
        Some(name) => {
            if model.blocks.contains_key(name) {
                return Err(ModelError::DuplicateBlock(name.to_string()));
            }
            name.to_string()
        }
        None => {
            let mut candidate = format!("{old_base_name}_Classic");
            let mut n = 1;
            while model.blocks.contains_key(&candidate) {
                n += 1;
                candidate = format!("{old_base_name}_Classic{n}");
            }
            candidate
        }
    };
    let demoted = BlockDef {
        name: demoted_name.clone(),
        kind: old_base.kind,
        base: Some(old_base_name.to_string()),
        signal_io: None,
        parts: Vec::new(),
        attributes: materialize_attrs(&old_base.attributes, &new_base, &[]),
        functions: materialize_fns(&old_base.functions, &new_base, &[]),
        span: old_base.span.clone(),
    };

    // the promoted variant's name survives as an empty alias variant, so
    // part references to it keep resolving (and keep their meaning)
    let alias = BlockDef {
        name: variant_name.to_string(),
        kind: old_base.kind,
        base: Some(old_base_name.to_string()),
        signal_io: None,
        parts: Vec::new(),
        attributes: Vec::new(),
        functions: Vec::new(),
        span: variant.span.clone(),
    };

    let mut blocks: IndexMap<String, BlockDef> = IndexMap::new();
    for (name, def) in &model.blocks {
        if name == old_base_name {
            blocks.insert(new_base.name.clone(), new_base.clone());
            blocks.insert(demoted.name.clone(), demoted.clone());
        } else if name == variant_name {
            blocks.insert(alias.name.clone(), alias.clone());
        } else if def.base.as_deref() == Some(old_base_name) {
            // sibling variant: materialize inherited members whose value
            // changes under the new base, keep everything else
            let mut sibling = def.clone();
            sibling.attributes = {
                let mut attrs = materialize_attrs(&old_base.attributes, &new_base, &def.attributes);
                attrs.extend(def.attributes.iter().cloned());
                attrs
            };
            sibling.functions = {
                let mut fns = materialize_fns(&old_base.functions, &new_base, &def.functions);
                fns.extend(def.functions.iter().cloned());
                fns
            };
            blocks.insert(name.clone(), sibling);
        } else {
            blocks.insert(name.clone(), def.clone());
        }
    }

    let model = Model { blocks, system_functions: model.system_functions.clone(), root: model.root.clone() };
    for def in model.blocks.values() {
        if let Some(base) = model.base_of(def) {
            assert!(base.base.is_none(), "rebase produced an inheritance chain deeper than one");
        }
    }
    Ok(RebaseOutcome { model, demoted_name })
}

/// Old-base attributes whose value under `new_base` differs and that
/// `own` does not already redeclare.
fn materialize_attrs(old: &[AttributeDef], new_base: &BlockDef, own: &[AttributeDef]) -> Vec<AttributeDef> {
    old.iter()
        .filter(|a| {
            let changed = new_base.attribute(&a.name) != Some(*a);
            changed && !own.iter().any(|o| o.name == a.name)
        })
        .cloned()
        .collect()
}

fn materialize_fns(old: &[FunctionDef], new_base: &BlockDef, own: &[FunctionDef]) -> Vec<FunctionDef> {
    old.iter()
        .filter(|f| {
            let changed = new_base.function(&f.name) != Some(*f);
            changed && !own.iter().any(|o| o.name == f.name)
        })
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LockStatus;
    use crate::parser::parse_model;
    use crate::validate::validate;

    const FAMILY: &str = "\
block Valve kind component out BOOL {}
block BlockX kind composite {
  part v: Valve
  attr speed: INT = 10
  function run() {
    lanes self, v
    node a: call v.setSignal(TRUE)
    start -> a
    a -> end on completion
  }
  function stop() {
    lanes self, v
    node a: call v.setSignal(FALSE)
    start -> a
    a -> end on completion
  }
}
variant Variant1 of BlockX {
  attr speed: INT = 20
}
variant Variant2 of BlockX {
  override function stop() {
    lanes self, v
    node a: call v.setSignal(FALSE)
    node b: call v.setSignal(FALSE)
    start -> a
    a -> b on completion
    b -> end on completion
  }
}
variant Variant3 of BlockX {
  attr speed: INT = 99
  override function run() {
    lanes self, v
    node a: call v.setSignal(TRUE)
    node b: call v.setSignal(TRUE)
    start -> a
    a -> b on completion
    b -> end on completion
  }
}
root x: BlockX
";

    fn family() -> Model {
        let m = parse_model(FAMILY, "f.modat").unwrap();
        assert!(validate(&m).is_empty());
        m
    }

    #[test]
    fn lock_status_matches_spec_cases() {
        let m = family();
        assert_eq!(compute_lock_status(&m, "Variant3", "stop").unwrap(), LockStatus::Inherited);
        assert_eq!(compute_lock_status(&m, "Variant3", "run").unwrap(), LockStatus::Overridden);
        assert_eq!(
            compute_lock_status(&m, "BlockX", "run").unwrap_err(),
            ModelError::NotAVariant("BlockX".into())
        );
        assert!(matches!(
            compute_lock_status(&m, "Variant3", "ghost").unwrap_err(),
            ModelError::UnknownFunction { .. }
        ));
    }

    #[test]
    fn diff_is_reflexively_empty_and_antisymmetric() {
        let m = family();
        assert!(diff_interface(&m, "Variant2", "Variant2").unwrap().is_empty());
        let ab = diff_interface(&m, "Variant1", "Variant2").unwrap();
        let ba = diff_interface(&m, "Variant2", "Variant1").unwrap();
        assert_eq!(ab.added, ba.removed);
        assert_eq!(ab.removed, ba.added);
        assert_eq!(ab.changed, ba.changed);
        // stop differs between them (Variant2 overrides it)
        assert_eq!(ab.changed, vec!["stop"]);
    }

    #[test]
    fn rebase_promotes_variant3() {
        let m = family();
        let out = rebase(&m, "BlockX", "Variant3", None).unwrap();
        let post = &out.model;
        assert_eq!(out.demoted_name, "BlockX_Classic");
        assert!(validate(post).is_empty(), "{:?}", validate(post));

        // the family name now carries Variant3's effective definition
        let new_base = post.block("BlockX").unwrap();
        assert!(new_base.base.is_none());
        assert_eq!(new_base.attribute("speed").unwrap().initial, crate::model::Value::Int(99));
        assert_eq!(new_base.function("run").unwrap().body.as_ref().unwrap().nodes.len(), 2);

        // the demoted base redeclares exactly what changed
        let demoted = post.block("BlockX_Classic").unwrap();
        assert_eq!(demoted.base.as_deref(), Some("BlockX"));
        assert_eq!(demoted.attribute("speed").unwrap().initial, crate::model::Value::Int(10));
        assert!(demoted.function("run").is_some());
        assert!(demoted.function("stop").is_none(), "unchanged member must stay inherited");

        // the promoted name is an empty alias
        let alias = post.block("Variant3").unwrap();
        assert!(alias.functions.is_empty() && alias.attributes.is_empty() && alias.parts.is_empty());

        // sibling variants keep their effective definitions
        let v1 = post.block("Variant1").unwrap();
        assert_eq!(v1.attribute("speed").unwrap().initial, crate::model::Value::Int(20));
        assert!(v1.function("run").is_some(), "run changed under the new base, so it is materialized");
        let v2 = post.block("Variant2").unwrap();
        assert_eq!(v2.attribute("speed").unwrap().initial, crate::model::Value::Int(10), "materialized old initial");
    }

    #[test]
    fn rebase_rejects_additive_variants() {
        let text = FAMILY.replace(
            "variant Variant3 of BlockX {\n  attr speed: INT = 99",
            "variant Variant3 of BlockX {\n  attr extra: BOOL = TRUE\n  attr speed: INT = 99",
        );
        let m = parse_model(&text, "f.modat").unwrap();
        let err = rebase(&m, "BlockX", "Variant3", None).unwrap_err();
        assert!(matches!(err, ModelError::AdditiveVariant { .. }), "{err}");
    }

    #[test]
    fn rebase_requires_the_variant_base_relation() {
        let m = family();
        assert!(matches!(
            rebase(&m, "Variant1", "Variant2", None).unwrap_err(),
            ModelError::NotAVariantOf { .. }
        ));
    }

    #[test]
    fn identity_rebase_changes_only_naming() {
        let text = FAMILY.replace("root x: BlockX\n", "variant Same of BlockX { }\nroot x: BlockX\n");
        let m = parse_model(&text, "f.modat").unwrap();
        let out = rebase(&m, "BlockX", "Same", None).unwrap();
        let post = &out.model;
        // nothing materialized anywhere
        assert!(post.block("BlockX_Classic").unwrap().functions.is_empty());
        assert!(post.block("BlockX_Classic").unwrap().attributes.is_empty());
        assert_eq!(post.block("Variant1").unwrap().functions.len(), m.block("Variant1").unwrap().functions.len());
        assert!(validate(post).is_empty());
    }
}
