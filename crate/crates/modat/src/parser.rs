//! Recursive-descent parser for `.modat` model files.
//!
//! Syntax errors (E1xx) stop at the first failure; reference resolution
//! (E2xx) collects everything it can. Inheritance *depth* violations are
//! deliberately not rejected here — they parse fine and are reported by
//! validator rule E001 — but reference cycles are fatal at resolution
//! because nothing downstream terminates on them.

use indexmap::IndexMap;

use crate::behavior::{
    Assign, BehaviorDef, CmpOp, Condition, Endpoint, Expr, Lane, LaneName, LanePath, Node, NodeAction, Policy,
    Transition, TransitionKind,
};
use crate::diag::{sort_diagnostics, Diagnostic};
use crate::lexer::{lex, Tok, Token};
use crate::model::{
    AttributeDef, BlockDef, BlockKind, FunctionDef, IoDirection, Model, Param, PartDef, RootDecl, TypeTag, Value,
    SIGNAL_ATTR,
};
use crate::span::Span;

pub(crate) struct Cursor {
    toks: Vec<Token>,
    pos: usize,
}

impl Cursor {
    pub(crate) fn new(toks: Vec<Token>) -> Self {
        Cursor { toks, pos: 0 }
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub(crate) fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].tok
    }

    pub(crate) fn span(&self) -> Span {
        self.toks[self.pos].span.clone()
    }

    pub(crate) fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span.clone()
    }

    pub(crate) fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, tok: Tok) -> Result<Token, Diagnostic> {
        if self.peek() == &tok {
            Ok(self.bump())
        } else {
            Err(self.unexpected(&format!("expected {}", tok.describe())))
        }
    }

    pub(crate) fn expect_ident(&mut self, what: &str) -> Result<(String, Span), Diagnostic> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let t = self.bump();
                Ok((name, t.span))
            }
            _ => Err(self.unexpected(&format!("expected {what}"))),
        }
    }

    pub(crate) fn unexpected(&self, expected: &str) -> Diagnostic {
        Diagnostic::error("E101", format!("{expected}, found {}", self.peek().describe()), self.span())
    }
}

/// Parses and resolves a model file. Every failure path yields at least one
/// spanned error diagnostic; no input panics.
pub fn parse_model(text: &str, file: &str) -> Result<Model, Vec<Diagnostic>> {
    let toks = lex(text, file).map_err(|d| vec![d])?;
    let mut cur = Cursor::new(toks);
    let parsed = parse_file(&mut cur).map_err(|d| vec![d])?;
    resolve(parsed)
}

struct ParsedFile {
    blocks: Vec<BlockDef>,
    system_functions: Vec<FunctionDef>,
    root: RootDecl,
}

fn parse_file(cur: &mut Cursor) -> Result<ParsedFile, Diagnostic> {
    if matches!(cur.peek(), Tok::Eof) {
        return Err(Diagnostic::error("E100", "expected top-level declaration", cur.span()));
    }
    let mut blocks = Vec::new();
    let mut system_functions: Vec<FunctionDef> = Vec::new();
    loop {
        match cur.peek() {
            Tok::KwBlock => blocks.push(parse_block_decl(cur)?),
            Tok::KwVariant => blocks.push(parse_variant_decl(cur)?),
            Tok::KwSystem => parse_system_decl(cur, &mut system_functions)?,
            Tok::KwRoot => break,
            _ => {
                return Err(cur.unexpected("expected top-level declaration (`block`, `variant`, `system`, or `root`)"))
            }
        }
    }
    let root_kw = cur.expect(Tok::KwRoot)?;
    let (instance, _) = cur.expect_ident("root instance name")?;
    cur.expect(Tok::Colon)?;
    let (block, block_span) = cur.expect_ident("root block name")?;
    if !matches!(cur.peek(), Tok::Eof) {
        return Err(cur.unexpected("expected end of file after the root declaration"));
    }
    let root = RootDecl { block, instance, span: root_kw.span.merge(&block_span) };
    Ok(ParsedFile { blocks, system_functions, root })
}

fn parse_block_decl(cur: &mut Cursor) -> Result<BlockDef, Diagnostic> {
    cur.expect(Tok::KwBlock)?;
    let (name, name_span) = cur.expect_ident("block name")?;
    cur.expect(Tok::KwKind)?;
    let (kind, signal_io) = match cur.peek() {
        Tok::KwComponent => {
            cur.bump();
            let io = match cur.peek() {
                Tok::KwIn => {
                    cur.bump();
                    Some((parse_type(cur)?, IoDirection::Input))
                }
                Tok::KwOut => {
                    cur.bump();
                    Some((parse_type(cur)?, IoDirection::Output))
                }
                _ => None,
            };
            (BlockKind::Component, io)
        }
        Tok::KwComposite => {
            cur.bump();
            (BlockKind::Composite, None)
        }
        _ => return Err(cur.unexpected("expected block kind (`component` or `composite`)")),
    };
    let mut def = BlockDef {
        name,
        kind,
        base: None,
        signal_io,
        parts: Vec::new(),
        attributes: Vec::new(),
        functions: Vec::new(),
        span: name_span,
    };
    parse_members(cur, &mut def)?;
    Ok(def)
}

fn parse_variant_decl(cur: &mut Cursor) -> Result<BlockDef, Diagnostic> {
    cur.expect(Tok::KwVariant)?;
    let (name, name_span) = cur.expect_ident("variant name")?;
    cur.expect(Tok::KwOf)?;
    let (base, _) = cur.expect_ident("base block name")?;
    let mut def = BlockDef {
        name,
        // placeholder; resolution copies the chain root's kind
        kind: BlockKind::Composite,
        base: Some(base),
        signal_io: None,
        parts: Vec::new(),
        attributes: Vec::new(),
        functions: Vec::new(),
        span: name_span,
    };
    parse_members(cur, &mut def)?;
    Ok(def)
}

fn parse_system_decl(cur: &mut Cursor, out: &mut Vec<FunctionDef>) -> Result<(), Diagnostic> {
    cur.expect(Tok::KwSystem)?;
    cur.expect(Tok::LBrace)?;
    while !cur.eat(&Tok::RBrace) {
        cur.expect(Tok::KwFunction)?;
        let (name, span) = cur.expect_ident("system function name")?;
        let params = parse_params(cur)?;
        out.push(FunctionDef { name, params, body: None, span });
    }
    Ok(())
}

fn parse_members(cur: &mut Cursor, def: &mut BlockDef) -> Result<(), Diagnostic> {
    cur.expect(Tok::LBrace)?;
    loop {
        match cur.peek() {
            Tok::RBrace => {
                cur.bump();
                return Ok(());
            }
            Tok::KwPart => {
                cur.bump();
                let (name, span) = cur.expect_ident("part name")?;
                cur.expect(Tok::Colon)?;
                let (block, block_span) = cur.expect_ident("part block name")?;
                def.parts.push(PartDef { name, block, span: span.merge(&block_span) });
            }
            Tok::KwAttr => {
                cur.bump();
                let (name, span) = cur.expect_ident("attribute name")?;
                cur.expect(Tok::Colon)?;
                let ty = parse_type(cur)?;
                let initial = if cur.eat(&Tok::Eq) { parse_literal(cur)? } else { ty.zero() };
                def.attributes.push(AttributeDef { name, ty, initial, io: IoDirection::None, span });
            }
            Tok::KwFunction | Tok::KwOverride => {
                // `override` is a display marker; the effective lock status is
                // always computed from the base, so both spellings parse alike
                if matches!(cur.peek(), Tok::KwOverride) {
                    cur.bump();
                }
                cur.expect(Tok::KwFunction)?;
                let (name, span) = cur.expect_ident("function name")?;
                let params = parse_params(cur)?;
                let body = if matches!(cur.peek(), Tok::LBrace) { Some(parse_behavior(cur)?) } else { None };
                def.functions.push(FunctionDef { name, params, body, span });
            }
            _ => return Err(cur.unexpected("expected member (`part`, `attr`, `function`) or `}`")),
        }
    }
}

fn parse_params(cur: &mut Cursor) -> Result<Vec<Param>, Diagnostic> {
    cur.expect(Tok::LParen)?;
    let mut params = Vec::new();
    if cur.eat(&Tok::RParen) {
        return Ok(params);
    }
    loop {
        let (name, span) = cur.expect_ident("parameter name")?;
        cur.expect(Tok::Colon)?;
        let ty = parse_type(cur)?;
        params.push(Param { name, ty, span });
        if cur.eat(&Tok::RParen) {
            return Ok(params);
        }
        cur.expect(Tok::Comma)?;
    }
}

fn parse_type(cur: &mut Cursor) -> Result<TypeTag, Diagnostic> {
    let ty = match cur.peek() {
        Tok::TyBool => TypeTag::Bool,
        Tok::TyInt => TypeTag::Int,
        Tok::TyReal => TypeTag::Real,
        Tok::TyTime => TypeTag::Time,
        _ => return Err(cur.unexpected("expected type (`BOOL`, `INT`, `REAL`, `TIME`)")),
    };
    cur.bump();
    Ok(ty)
}

pub(crate) fn parse_literal(cur: &mut Cursor) -> Result<Value, Diagnostic> {
    let negative = cur.eat(&Tok::Minus);
    let value = match cur.peek().clone() {
        Tok::Int(v) => Value::Int(v),
        Tok::Real(v) => Value::Real(v),
        Tok::Time(v) => Value::Time(v),
        Tok::True if !negative => Value::Bool(true),
        Tok::False if !negative => Value::Bool(false),
        _ => return Err(cur.unexpected("expected literal")),
    };
    cur.bump();
    Ok(match (negative, value) {
        (false, v) => v,
        (true, Value::Int(v)) => Value::Int(-v),
        (true, Value::Real(v)) => Value::Real(-v),
        (true, Value::Time(v)) => Value::Time(-v),
        (true, v @ Value::Bool(_)) => v,
    })
}

/// behavior := "{" "lanes" laneList nodeDecl* transDecl* "}"
fn parse_behavior(cur: &mut Cursor) -> Result<BehaviorDef, Diagnostic> {
    let open = cur.expect(Tok::LBrace)?;
    cur.expect(Tok::KwLanes)?;
    let mut lanes = Vec::new();
    loop {
        lanes.push(parse_lane(cur)?);
        if !cur.eat(&Tok::Comma) {
            break;
        }
    }
    let mut nodes = Vec::new();
    while matches!(cur.peek(), Tok::KwNode) {
        nodes.push(parse_node(cur)?);
    }
    let mut transitions = Vec::new();
    while matches!(cur.peek(), Tok::KwStart | Tok::Ident(_)) {
        transitions.push(parse_transition(cur)?);
    }
    let close = cur.expect(Tok::RBrace)?;
    Ok(BehaviorDef { lanes, nodes, transitions, span: open.span.merge(&close.span) })
}

fn parse_lane(cur: &mut Cursor) -> Result<Lane, Diagnostic> {
    let span = cur.span();
    let name = match cur.peek().clone() {
        Tok::KwSelf => {
            cur.bump();
            LaneName::SelfLane
        }
        Tok::KwSystem => {
            cur.bump();
            LaneName::System
        }
        Tok::Ident(n) => {
            cur.bump();
            LaneName::Named(n)
        }
        _ => return Err(cur.unexpected("expected lane (`self`, `system`, or a part name)")),
    };
    Ok(Lane { name, span })
}

/// Dotted path whose trailing segment names a function or attribute:
/// `valveExtend.setSignal` → (lane path [valveExtend], member setSignal).
fn parse_member_path(cur: &mut Cursor, what: &str) -> Result<(LanePath, String, Span), Diagnostic> {
    let head_span = cur.span();
    let head = match cur.peek().clone() {
        Tok::KwSelf => {
            cur.bump();
            LaneName::SelfLane
        }
        Tok::KwSystem => {
            cur.bump();
            LaneName::System
        }
        Tok::Ident(n) => {
            cur.bump();
            LaneName::Named(n)
        }
        _ => return Err(cur.unexpected(&format!("expected {what}"))),
    };
    let mut segments: Vec<(String, Span)> = Vec::new();
    cur.expect(Tok::Dot)?;
    loop {
        let (name, span) = cur.expect_ident("name after `.`")?;
        segments.push((name, span));
        if !cur.eat(&Tok::Dot) {
            break;
        }
    }
    let (member, member_span) = segments.pop().expect("at least one segment");
    let rest: Vec<String> = segments.iter().map(|(n, _)| n.clone()).collect();
    let path_span = match segments.last() {
        Some((_, last)) => head_span.merge(last),
        None => head_span,
    };
    let full_span = path_span.merge(&member_span);
    Ok((LanePath { head, rest, span: path_span }, member, full_span))
}

fn parse_node(cur: &mut Cursor) -> Result<Node, Diagnostic> {
    let node_kw = cur.expect(Tok::KwNode)?;
    let (id, _) = cur.expect_ident("node id")?;
    cur.expect(Tok::Colon)?;
    let action = match cur.peek() {
        Tok::KwCall => {
            cur.bump();
            let (target, function, span) = parse_member_path(cur, "call target")?;
            cur.expect(Tok::LParen)?;
            let mut args = Vec::new();
            if !cur.eat(&Tok::RParen) {
                loop {
                    args.push(parse_expr(cur)?);
                    if cur.eat(&Tok::RParen) {
                        break;
                    }
                    cur.expect(Tok::Comma)?;
                }
            }
            NodeAction::Call { target, function, args, span }
        }
        Tok::KwSet => {
            cur.bump();
            NodeAction::Set { assigns: vec![parse_assign(cur)?] }
        }
        _ => return Err(cur.unexpected("expected node action (`call` or `set`)")),
    };
    let entry_ops = if cur.eat(&Tok::KwEntry) { parse_assign_list(cur)? } else { Vec::new() };
    let exit_ops = if cur.eat(&Tok::KwExit) { parse_assign_list(cur)? } else { Vec::new() };
    let span = node_kw.span.merge(&cur.prev_span());
    Ok(Node { id, action, entry_ops, exit_ops, span })
}

fn parse_assign(cur: &mut Cursor) -> Result<Assign, Diagnostic> {
    let (path, attr, span) = parse_member_path(cur, "assignment target")?;
    cur.expect(Tok::Assign)?;
    let value = parse_expr(cur)?;
    let span = span.merge(value.span());
    Ok(Assign { path, attr, value, span })
}

fn parse_assign_list(cur: &mut Cursor) -> Result<Vec<Assign>, Diagnostic> {
    let mut out = vec![parse_assign(cur)?];
    while cur.eat(&Tok::Comma) {
        out.push(parse_assign(cur)?);
    }
    Ok(out)
}

pub(crate) fn parse_expr(cur: &mut Cursor) -> Result<Expr, Diagnostic> {
    match cur.peek().clone() {
        Tok::Minus | Tok::Int(_) | Tok::Real(_) | Tok::Time(_) | Tok::True | Tok::False => {
            let span = cur.span();
            let value = parse_literal(cur)?;
            Ok(Expr::Lit { value, span: span.merge(&cur.prev_span()) })
        }
        Tok::KwSelf | Tok::KwSystem => {
            let (path, attr, span) = parse_member_path(cur, "attribute reference")?;
            Ok(Expr::Attr { path, attr, span })
        }
        Tok::Ident(name) => {
            if matches!(cur.peek2(), Tok::Dot) {
                let (path, attr, span) = parse_member_path(cur, "attribute reference")?;
                Ok(Expr::Attr { path, attr, span })
            } else {
                let t = cur.bump();
                Ok(Expr::Param { name, span: t.span })
            }
        }
        _ => Err(cur.unexpected("expected expression (literal, parameter, or `lane.attribute`)")),
    }
}

fn parse_cmp_op(cur: &mut Cursor) -> Result<CmpOp, Diagnostic> {
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
    Ok(op)
}

pub(crate) fn parse_condition(cur: &mut Cursor) -> Result<Condition, Diagnostic> {
    let lhs = parse_expr(cur)?;
    let op = parse_cmp_op(cur)?;
    let rhs = parse_expr(cur)?;
    let span = lhs.span().merge(rhs.span());
    Ok(Condition { lhs, op, rhs, span })
}

fn parse_transition(cur: &mut Cursor) -> Result<Transition, Diagnostic> {
    let start_span = cur.span();
    let source = match cur.peek().clone() {
        Tok::KwStart => {
            cur.bump();
            Endpoint::Start
        }
        Tok::Ident(n) => {
            cur.bump();
            Endpoint::Node(n)
        }
        _ => return Err(cur.unexpected("expected transition source")),
    };
    cur.expect(Tok::Arrow)?;
    let target = match cur.peek().clone() {
        Tok::KwEnd => {
            cur.bump();
            Endpoint::End
        }
        Tok::Ident(n) => {
            cur.bump();
            Endpoint::Node(n)
        }
        _ => return Err(cur.unexpected("expected transition target")),
    };
    let kind = match cur.peek() {
        Tok::KwOn => {
            cur.bump();
            cur.expect(Tok::KwCompletion)?;
            Some(TransitionKind::Completion)
        }
        Tok::KwWhen => {
            cur.bump();
            let cond = parse_condition(cur)?;
            let policy = if cur.eat(&Tok::KwPolicy) {
                Some(match cur.peek() {
                    Tok::KwResume => Policy::Resume,
                    Tok::KwRestart => Policy::Restart,
                    Tok::KwContinue => Policy::Continue,
                    _ => return Err(cur.unexpected("expected policy (`resume`, `restart`, `continue`)")),
                })
            } else {
                None
            };
            if policy.is_some() {
                cur.bump();
            }
            Some(TransitionKind::Condition { cond, policy })
        }
        // a bare transition out of a node is the default completion
        // transition; a bare start transition stays unkinded
        _ => {
            if source == Endpoint::Start {
                None
            } else {
                Some(TransitionKind::Completion)
            }
        }
    };
    let ops = if cur.eat(&Tok::KwDo) { parse_assign_list(cur)? } else { Vec::new() };
    let span = start_span.merge(&cur.prev_span());
    Ok(Transition { source, target, kind, ops, span })
}

// ---------------------------------------------------------------------------
// resolution
// ---------------------------------------------------------------------------

fn resolve(parsed: ParsedFile) -> Result<Model, Vec<Diagnostic>> {
    let mut diags: Vec<Diagnostic> = Vec::new();
    let mut blocks: IndexMap<String, BlockDef> = IndexMap::new();
    for def in parsed.blocks {
        if blocks.contains_key(&def.name) {
            diags.push(Diagnostic::error(
                "E204",
                format!("block `{}` is already defined", def.name),
                def.span.clone(),
            ));
            continue;
        }
        blocks.insert(def.name.clone(), def);
    }

    // member-level duplicates
    for def in blocks.values() {
        let mut seen_attrs: Vec<&str> = Vec::new();
        for attr in &def.attributes {
            if seen_attrs.contains(&attr.name.as_str()) {
                diags.push(Diagnostic::error(
                    "E207",
                    format!("attribute `{}` is declared twice in `{}`", attr.name, def.name),
                    attr.span.clone(),
                ));
            }
            seen_attrs.push(&attr.name);
        }
        let mut seen_fns: Vec<&str> = Vec::new();
        for f in &def.functions {
            if seen_fns.contains(&f.name.as_str()) {
                diags.push(Diagnostic::error(
                    "E207",
                    format!("function `{}` is declared twice in `{}`", f.name, def.name),
                    f.span.clone(),
                ));
            }
            seen_fns.push(&f.name);
        }
        let mut seen_parts: Vec<&str> = Vec::new();
        for p in &def.parts {
            if seen_parts.contains(&p.name.as_str()) {
                diags.push(Diagnostic::error(
                    "E205",
                    format!("part `{}` is declared twice in `{}`", p.name, def.name),
                    p.span.clone(),
                ));
            }
            seen_parts.push(&p.name);
        }
    }
    let mut seen_sys: Vec<&str> = Vec::new();
    for f in &parsed.system_functions {
        if seen_sys.contains(&f.name.as_str()) {
            diags.push(Diagnostic::error(
                "E207",
                format!("system function `{}` is declared twice", f.name),
                f.span.clone(),
            ));
        }
        seen_sys.push(&f.name);
    }

    // reference resolution
    for def in blocks.values() {
        if let Some(base) = &def.base {
            if base == &def.name {
                diags.push(Diagnostic::error(
                    "E201",
                    format!("variant `{}` names itself as its base", def.name),
                    def.span.clone(),
                ));
            } else if !blocks.contains_key(base) {
                diags.push(Diagnostic::error(
                    "E202",
                    format!("variant `{}` references undefined base `{}`", def.name, base),
                    def.span.clone(),
                ));
            }
        }
        for part in &def.parts {
            if !blocks.contains_key(&part.block) {
                diags.push(Diagnostic::error(
                    "E203",
                    format!("part `{}` references undefined block `{}`", part.name, part.block),
                    part.span.clone(),
                ));
            }
        }
    }
    if !blocks.contains_key(&parsed.root.block) {
        diags.push(Diagnostic::error(
            "E206",
            format!("root references undefined block `{}`", parsed.root.block),
            parsed.root.span.clone(),
        ));
    }
    if !diags.is_empty() {
        sort_diagnostics(&mut diags);
        return Err(diags);
    }

    // base-chain cycles (self-reference already reported above)
    for (name, def) in &blocks {
        if def.base.is_none() {
            continue;
        }
        let mut cur = def;
        for _ in 0..blocks.len() {
            match cur.base.as_deref().and_then(|b| blocks.get(b)) {
                Some(next) if next.name == *name => {
                    diags.push(Diagnostic::error(
                        "E209",
                        format!("inheritance of `{name}` is cyclic"),
                        def.span.clone(),
                    ));
                    break;
                }
                Some(next) => cur = next,
                None => break,
            }
        }
    }
    if !diags.is_empty() {
        sort_diagnostics(&mut diags);
        return Err(diags);
    }

    // fill variant kinds from the chain root
    let kinds: IndexMap<String, BlockKind> = blocks
        .iter()
        .map(|(name, def)| {
            let mut cur = def;
            while let Some(base) = cur.base.as_deref().and_then(|b| blocks.get(b)) {
                cur = base;
            }
            (name.clone(), cur.kind)
        })
        .collect();
    for (name, def) in blocks.iter_mut() {
        def.kind = kinds[name];
    }

    // the implicit Signal name is reserved on component chains
    for def in blocks.values() {
        if def.kind == BlockKind::Component {
            if let Some(attr) = def.attributes.iter().find(|a| a.name == SIGNAL_ATTR) {
                diags.push(Diagnostic::error(
                    "E207",
                    format!("`{SIGNAL_ATTR}` is the implicit component signal and cannot be redeclared in `{}`", def.name),
                    attr.span.clone(),
                ));
            }
        }
    }

    let model = Model { blocks, system_functions: parsed.system_functions, root: parsed.root };

    // effective-part duplicates (variant shadowing a base part)
    for def in model.blocks.values() {
        let mut seen: Vec<String> = Vec::new();
        let mut chain: Vec<&BlockDef> = Vec::new();
        let mut cur = def;
        loop {
            chain.push(cur);
            match model.base_of(cur) {
                Some(base) => cur = base,
                None => break,
            }
        }
        for block in chain.iter().rev() {
            for part in &block.parts {
                if seen.contains(&part.name) && block.name == def.name {
                    diags.push(Diagnostic::error(
                        "E205",
                        format!(
                            "part `{}` in `{}` shadows a part inherited from `{}`",
                            part.name,
                            def.name,
                            def.base.as_deref().unwrap_or("?")
                        ),
                        part.span.clone(),
                    ));
                }
                seen.push(part.name.clone());
            }
        }
    }

    // containment cycles make every downstream stage non-terminating
    for name in model.blocks.keys() {
        if let Err(crate::model::ModelError::CyclicContainment(b)) = model.instantiate(name, "probe") {
            if &b == name {
                diags.push(Diagnostic::error(
                    "E210",
                    format!("block `{name}` transitively contains itself"),
                    model.blocks[name].span.clone(),
                ));
            }
        }
    }

    if diags.is_empty() {
        Ok(model)
    } else {
        sort_diagnostics(&mut diags);
        Err(diags)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_ok(text: &str) -> Model {
        match parse_model(text, "t.modat") {
            Ok(m) => m,
            Err(diags) => panic!("expected parse, got {:?}", diags.iter().map(|d| d.render()).collect::<Vec<_>>()),
        }
    }

    fn parse_err(text: &str) -> Vec<Diagnostic> {
        parse_model(text, "t.modat").expect_err("expected diagnostics")
    }

    #[test]
    fn empty_input_is_e100_at_1_1() {
        let diags = parse_err("");
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, "E100");
        assert_eq!((diags[0].span.start_line, diags[0].span.start_col), (1, 1));
    }

    #[test]
    fn self_base_is_e201() {
        let diags = parse_err("variant V of V { }\nroot v: V");
        assert!(diags.iter().any(|d| d.code == "E201"), "{diags:?}");
    }

    #[test]
    fn minimal_model_parses() {
        let m = parse_ok(
            "block Valve kind component out BOOL { }\n\
             block Rig kind composite {\n  part v: Valve\n  attr count: INT = 3\n  function go() {\n    lanes self, v\n    node n1: call v.setSignal(TRUE)\n    start -> n1\n    n1 -> end on completion\n  }\n}\n\
             root rig: Rig",
        );
        assert_eq!(m.blocks.len(), 2);
        assert_eq!(m.root.instance, "rig");
        let rig = m.block("Rig").unwrap();
        assert_eq!(rig.attributes[0].initial, Value::Int(3));
        let body = rig.functions[0].body.as_ref().unwrap();
        assert_eq!(body.lanes.len(), 2);
        assert_eq!(body.transitions.len(), 2);
        assert_eq!(body.transitions[0].kind, None); // bare start transition
        assert_eq!(body.transitions[1].kind, Some(TransitionKind::Completion));
    }

    #[test]
    fn bare_node_transition_normalizes_to_completion() {
        let m = parse_ok(
            "block Rig kind composite {\n  attr x: INT\n  function f() {\n    lanes self\n    node a: set self.x := 1\n    node b: set self.x := 2\n    start -> a\n    a -> b\n    b -> end\n  }\n}\nroot r: Rig",
        );
        let body = m.block("Rig").unwrap().functions[0].body.as_ref().unwrap();
        assert_eq!(body.transitions[1].kind, Some(TransitionKind::Completion));
    }

    #[test]
    fn variant_inherits_kind() {
        let m = parse_ok(
            "block Sensor kind component in INT { }\nvariant FineSensor of Sensor { }\nroot s: FineSensor",
        );
        let fine = m.block("FineSensor").unwrap();
        assert_eq!(m.kind_of(fine), BlockKind::Component);
        assert_eq!(fine.kind, BlockKind::Component);
    }

    #[test]
    fn depth_two_parses_for_the_validator() {
        let m = parse_ok(
            "block A kind composite { }\nvariant B of A { }\nvariant C of B { }\nroot a: A",
        );
        assert!(m.block("C").unwrap().base.as_deref() == Some("B"));
    }

    #[test]
    fn inheritance_cycle_is_e209() {
        let diags = parse_err("variant A of B { }\nvariant B of A { }\nroot a: A");
        assert!(diags.iter().all(|d| d.code == "E209"));
        assert_eq!(diags.len(), 2);
    }

    #[test]
    fn unknown_references_are_collected_together() {
        let diags = parse_err(
            "block Rig kind composite {\n  part v: Valve\n}\nvariant X of Ghost { }\nroot rig: Nothing",
        );
        let codes: Vec<&str> = diags.iter().map(|d| d.code).collect();
        assert!(codes.contains(&"E202"));
        assert!(codes.contains(&"E203"));
        assert!(codes.contains(&"E206"));
    }

    #[test]
    fn part_shadowing_is_e205() {
        let diags = parse_err(
            "block Valve kind component out BOOL { }\n\
             block Cyl kind composite { part valveExtend: Valve }\n\
             variant Bad of Cyl { part valveExtend: Valve }\n\
             root c: Cyl",
        );
        assert!(diags.iter().any(|d| d.code == "E205"), "{diags:?}");
    }

    #[test]
    fn containment_cycle_is_e210() {
        let diags = parse_err("block A kind composite { part inner: A }\nroot a: A");
        assert!(diags.iter().any(|d| d.code == "E210"), "{diags:?}");
    }

    #[test]
    fn signal_cannot_be_redeclared_on_components() {
        let diags = parse_err("block S kind component in BOOL { attr Signal: BOOL }\nroot s: S");
        assert!(diags.iter().any(|d| d.code == "E207"));
    }

    #[test]
    fn junk_after_root_is_rejected() {
        let diags = parse_err("block A kind composite { }\nroot a: A\nblock B kind composite { }");
        assert_eq!(diags[0].code, "E101");
    }

    #[test]
    fn parser_never_panics_on_probe_inputs() {
        for text in ["{", "block", "block X", "root", "root x", "node -> ->", "\u{7f}", "1.2.3", "--", "a\nb\nc"] {
            let _ = parse_model(text, "t.modat");
        }
    }
}
