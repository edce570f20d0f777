use std::collections::{BTreeSet, HashMap};

use super::model::*;
use super::sexpr::{self, Pos, Sexp};
use super::{PddlError, SUPPORTED_REQUIREMENTS};

fn syntax(pos: Pos, msg: impl Into<String>) -> PddlError {
    PddlError::Syntax {
        pos,
        msg: msg.into(),
    }
}

fn expect_list<'a>(s: &'a Sexp, what: &str) -> Result<&'a [Sexp], PddlError> {
    s.as_list()
        .ok_or_else(|| syntax(s.pos(), format!("expected list for {what}")))
}

fn expect_atom<'a>(s: &'a Sexp, what: &str) -> Result<&'a str, PddlError> {
    s.as_atom()
        .ok_or_else(|| syntax(s.pos(), format!("expected symbol for {what}")))
}

/// Split `(define (<kind> NAME) sections...)` into name and sections.
fn define_header<'a>(root: &'a Sexp, kind: &str) -> Result<(String, &'a [Sexp]), PddlError> {
    let items = expect_list(root, "define")?;
    if items.first().and_then(Sexp::as_atom) != Some("define") {
        return Err(syntax(root.pos(), "expected (define ...)"));
    }
    let header = items
        .get(1)
        .ok_or_else(|| syntax(root.pos(), format!("missing ({kind} NAME)")))?;
    let h = expect_list(header, kind)?;
    if h.len() != 2 || h[0].as_atom() != Some(kind) {
        return Err(syntax(header.pos(), format!("expected ({kind} NAME)")));
    }
    Ok((expect_atom(&h[1], "name")?.to_string(), &items[2..]))
}

/// A typed list: `a b - t c - u`. Returns (name, Some(type)) pairs; trailing
/// names with no `- type` get `None`.
fn typed_list(items: &[Sexp]) -> Result<Vec<(String, Option<String>, Pos)>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Pos)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let sym = expect_atom(&items[i], "typed list entry")?;
        if sym == "-" {
            let ty = items
                .get(i + 1)
                .ok_or_else(|| syntax(items[i].pos(), "missing type after '-'"))?;
            let ty = expect_atom(ty, "type")?.to_string();
            if pending.is_empty() {
                return Err(syntax(items[i].pos(), "'-' with no preceding names"));
            }
            for (n, p) in pending.drain(..) {
                out.push((n, Some(ty.clone()), p));
            }
            i += 2;
        } else {
            pending.push((sym.to_string(), items[i].pos()));
            i += 1;
        }
    }
    for (n, p) in pending {
        out.push((n, None, p));
    }
    Ok(out)
}

/// Parse a domain file.
pub fn parse_domain(text: &str) -> Result<DomainModel, PddlError> {
    let root = sexpr::read(text)?;
    let (name, sections) = define_header(&root, "domain")?;

    let mut requirements = Vec::new();
    let mut type_sec = None;
    let mut const_sec = None;
    let mut pred_sec = None;
    let mut action_secs = Vec::new();
    for sec in sections {
        match sec.head() {
            Some(":requirements") => {
                for r in &sec.as_list().unwrap()[1..] {
                    let r_name = expect_atom(r, "requirement")?;
                    if !SUPPORTED_REQUIREMENTS.contains(&r_name) {
                        return Err(PddlError::UnsupportedRequirement {
                            pos: r.pos(),
                            requirement: r_name.to_string(),
                        });
                    }
                    requirements.push(r_name.to_string());
                }
            }
            Some(":types") => type_sec = Some(sec),
            Some(":constants") => const_sec = Some(sec),
            Some(":predicates") => pred_sec = Some(sec),
            Some(":action") => action_secs.push(sec),
            Some(other) => {
                return Err(PddlError::Unsupported {
                    pos: sec.pos(),
                    construct: other.to_string(),
                })
            }
            None => return Err(syntax(sec.pos(), "expected a (:section ...)")),
        }
    }

    let mut types = Vec::new();
    if let Some(sec) = type_sec {
        for (n, parent, pos) in typed_list(&sec.as_list().unwrap()[1..])? {
            if n == ROOT_TYPE {
                return Err(syntax(pos, format!("{ROOT_TYPE} is implicit")));
            }
            types.push(TypeDecl {
                name: n,
                parent: Some(parent.unwrap_or_else(|| ROOT_TYPE.to_string())),
            });
        }
    }
    let mut domain = DomainModel {
        name,
        requirements,
        types,
        constants: Vec::new(),
        predicates: Vec::new(),
        actions: Vec::new(),
    };
    for t in &domain.types {
        let parent = t.parent.as_deref().unwrap_or(ROOT_TYPE);
        if !domain.has_type(parent) {
            return Err(PddlError::UndeclaredType {
                pos: Pos::default(),
                name: parent.to_string(),
            });
        }
    }

    if let Some(sec) = const_sec {
        for (n, ty, pos) in typed_list(&sec.as_list().unwrap()[1..])? {
            let ty = ty.ok_or_else(|| syntax(pos, format!("constant `{n}` has no type")))?;
            check_type(&domain, &ty, pos)?;
            domain.constants.push(Typed { name: n, ty });
        }
    }

    if let Some(sec) = pred_sec {
        for p in &sec.as_list().unwrap()[1..] {
            let items = expect_list(p, "predicate")?;
            let pname = expect_atom(
                items.first().ok_or_else(|| syntax(p.pos(), "empty predicate"))?,
                "predicate name",
            )?
            .to_string();
            let mut params = Vec::new();
            for (v, ty, pos) in typed_list(&items[1..])? {
                let var = v
                    .strip_prefix('?')
                    .ok_or_else(|| syntax(pos, "predicate parameters must be variables"))?;
                let ty = ty.ok_or_else(|| {
                    syntax(pos, format!("predicate `{pname}` parameter ?{var} has no type"))
                })?;
                check_type(&domain, &ty, pos)?;
                params.push(Typed::new(var, &ty));
            }
            if domain.predicate(&pname).is_some() {
                return Err(PddlError::DuplicatePredicate(pname));
            }
            domain.predicates.push(PredicateSchema {
                name: pname,
                params,
            });
        }
    }

    for sec in action_secs {
        let action = parse_action(&domain, sec)?;
        if domain.action(&action.name).is_some() {
            return Err(PddlError::DuplicateAction(action.name));
        }
        domain.actions.push(action);
    }
    Ok(domain)
}

fn check_type(domain: &DomainModel, ty: &str, pos: Pos) -> Result<(), PddlError> {
    if domain.has_type(ty) {
        Ok(())
    } else {
        Err(PddlError::UndeclaredType {
            pos,
            name: ty.to_string(),
        })
    }
}

struct ActionCtx<'a> {
    domain: &'a DomainModel,
    action: String,
    /// Variable name -> type, innermost binding last.
    scope: Vec<Typed>,
}

impl ActionCtx<'_> {
    fn var_type(&self, v: &str) -> Option<&str> {
        self.scope
            .iter()
            .rev()
            .find(|t| t.name == v)
            .map(|t| t.ty.as_str())
    }

    fn term(&self, s: &Sexp) -> Result<(Term, String), PddlError> {
        let sym = expect_atom(s, "term")?;
        if let Some(v) = sym.strip_prefix('?') {
            let ty = self.var_type(v).ok_or_else(|| PddlError::UnboundVariable {
                action: self.action.clone(),
                var: v.to_string(),
            })?;
            Ok((Term::Var(v.to_string()), ty.to_string()))
        } else {
            let c = self
                .domain
                .constants
                .iter()
                .find(|c| c.name == sym)
                .ok_or_else(|| PddlError::UnknownObject {
                    pos: s.pos(),
                    name: sym.to_string(),
                })?;
            Ok((Term::Const(sym.to_string()), c.ty.clone()))
        }
    }

    fn atom(&self, s: &Sexp) -> Result<AtomSchema, PddlError> {
        let items = expect_list(s, "atom")?;
        let pname = expect_atom(
            items.first().ok_or_else(|| syntax(s.pos(), "empty atom"))?,
            "predicate",
        )?;
        let schema = self
            .domain
            .predicate(pname)
            .ok_or_else(|| PddlError::UnknownPredicate {
                pos: s.pos(),
                name: pname.to_string(),
            })?;
        let args = &items[1..];
        if args.len() != schema.params.len() {
            return Err(PddlError::ArityMismatch {
                pos: s.pos(),
                predicate: pname.to_string(),
                expected: schema.params.len(),
                got: args.len(),
            });
        }
        let mut terms = Vec::with_capacity(args.len());
        for (a, p) in args.iter().zip(&schema.params) {
            let (t, ty) = self.term(a)?;
            if !types_compatible(self.domain, &ty, &p.ty) {
                return Err(PddlError::TypeMismatch {
                    context: format!("{} in {}", pname, self.action),
                    arg: t.to_string(),
                    arg_type: ty,
                    param_type: p.ty.clone(),
                });
            }
            terms.push(t);
        }
        Ok(AtomSchema {
            predicate: pname.to_string(),
            args: terms,
        })
    }
}

/// Arguments may be narrower or wider than the declared parameter type; only
/// unrelated types are an error.
fn types_compatible(domain: &DomainModel, arg: &str, param: &str) -> bool {
    domain.is_subtype(arg, param) || domain.is_subtype(param, arg)
}

fn parse_action(domain: &DomainModel, sec: &Sexp) -> Result<ActionSchema, PddlError> {
    let items = sec.as_list().unwrap();
    let name = expect_atom(
        items
            .get(1)
            .ok_or_else(|| syntax(sec.pos(), "action without name"))?,
        "action name",
    )?
    .to_string();

    let mut params = Vec::new();
    let mut pre = None;
    let mut eff = None;
    let mut i = 2;
    while i < items.len() {
        let key = expect_atom(&items[i], "action keyword")?;
        let val = items
            .get(i + 1)
            .ok_or_else(|| syntax(items[i].pos(), format!("{key} without value")))?;
        match key {
            ":parameters" => {
                for (v, ty, pos) in typed_list(expect_list(val, ":parameters")?)? {
                    let var = v
                        .strip_prefix('?')
                        .ok_or_else(|| syntax(pos, "parameters must be variables"))?
                        .to_string();
                    let ty = ty.ok_or_else(|| PddlError::MissingParameterType {
                        action: name.clone(),
                        param: var.clone(),
                    })?;
                    check_type(domain, &ty, pos)?;
                    params.push(Typed { name: var, ty });
                }
            }
            ":precondition" => pre = Some(val),
            ":effect" => eff = Some(val),
            other => {
                return Err(PddlError::Unsupported {
                    pos: items[i].pos(),
                    construct: other.to_string(),
                })
            }
        }
        i += 2;
    }

    let mut ctx = ActionCtx {
        domain,
        action: name.clone(),
        scope: params.clone(),
    };
    let mut precondition = Vec::new();
    if let Some(p) = pre {
        parse_condition(&mut ctx, p, &mut precondition)?;
    }
    let mut effect = Vec::new();
    if let Some(e) = eff {
        parse_effect(&ctx, e, &mut effect)?;
    }
    Ok(ActionSchema {
        name,
        params,
        precondition,
        effect,
    })
}

fn parse_condition(
    ctx: &mut ActionCtx<'_>,
    s: &Sexp,
    out: &mut Vec<Condition>,
) -> Result<(), PddlError> {
    let items = expect_list(s, "condition")?;
    match s.head() {
        None if items.is_empty() => Ok(()),
        Some("and") => {
            for c in &items[1..] {
                parse_condition(ctx, c, out)?;
            }
            Ok(())
        }
        Some("=") => {
            let (a, b) = eq_terms(ctx, s, items)?;
            out.push(Condition::Eq(a, b));
            Ok(())
        }
        Some("not") => {
            if items.len() != 2 {
                return Err(syntax(s.pos(), "(not X) takes one argument"));
            }
            let inner = &items[1];
            if inner.head() == Some("=") {
                let (a, b) = eq_terms(ctx, inner, inner.as_list().unwrap())?;
                out.push(Condition::Neq(a, b));
            } else {
                out.push(Condition::Neg(ctx.atom(inner)?));
            }
            Ok(())
        }
        Some("forall") => {
            if items.len() != 3 {
                return Err(syntax(s.pos(), "(forall (vars) body) expected"));
            }
            let mut vars = Vec::new();
            for (v, ty, pos) in typed_list(expect_list(&items[1], "forall variables")?)? {
                let var = v
                    .strip_prefix('?')
                    .ok_or_else(|| syntax(pos, "forall binds variables"))?;
                let ty = ty.ok_or_else(|| PddlError::MissingParameterType {
                    action: ctx.action.clone(),
                    param: var.to_string(),
                })?;
                check_type(ctx.domain, &ty, pos)?;
                vars.push(Typed::new(var, &ty));
            }
            let depth = ctx.scope.len();
            ctx.scope.extend(vars.iter().cloned());
            let body = &items[2];
            let negs: Vec<&Sexp> = match body.head() {
                Some("and") => body.as_list().unwrap()[1..].iter().collect(),
                _ => vec![body],
            };
            let mut result = Ok(());
            for n in negs {
                if n.head() != Some("not") || n.as_list().unwrap().len() != 2 {
                    result = Err(PddlError::Unsupported {
                        pos: n.pos(),
                        construct: "forall over non-negative literal".into(),
                    });
                    break;
                }
                match ctx.atom(&n.as_list().unwrap()[1]) {
                    Ok(atom) => out.push(Condition::ForallNot {
                        vars: vars.clone(),
                        atom,
                    }),
                    Err(e) => {
                        result = Err(e);
                        break;
                    }
                }
            }
            ctx.scope.truncate(depth);
            result
        }
        Some(h @ ("or" | "imply" | "exists" | "when")) => Err(PddlError::Unsupported {
            pos: s.pos(),
            construct: h.to_string(),
        }),
        Some(_) => {
            out.push(Condition::Pos(ctx.atom(s)?));
            Ok(())
        }
        None => Err(syntax(s.pos(), "malformed condition")),
    }
}

fn eq_terms(ctx: &ActionCtx<'_>, s: &Sexp, items: &[Sexp]) -> Result<(Term, Term), PddlError> {
    if items.len() != 3 {
        return Err(syntax(s.pos(), "(= a b) takes two terms"));
    }
    Ok((ctx.term(&items[1])?.0, ctx.term(&items[2])?.0))
}

fn parse_effect(ctx: &ActionCtx<'_>, s: &Sexp, out: &mut Vec<Effect>) -> Result<(), PddlError> {
    let items = expect_list(s, "effect")?;
    match s.head() {
        None if items.is_empty() => Ok(()),
        Some("and") => {
            for e in &items[1..] {
                parse_effect(ctx, e, out)?;
            }
            Ok(())
        }
        Some("not") => {
            if items.len() != 2 {
                return Err(syntax(s.pos(), "(not X) takes one argument"));
            }
            out.push(Effect::Del(ctx.atom(&items[1])?));
            Ok(())
        }
        Some(h @ ("forall" | "when" | "increase" | "decrease")) => Err(PddlError::Unsupported {
            pos: s.pos(),
            construct: h.to_string(),
        }),
        Some(_) => {
            out.push(Effect::Add(ctx.atom(s)?));
            Ok(())
        }
        None => Err(syntax(s.pos(), "malformed effect")),
    }
}

/// Parse a problem file against its domain.
pub fn parse_problem(domain: &DomainModel, text: &str) -> Result<ProblemModel, PddlError> {
    let root = sexpr::read(text)?;
    let (name, sections) = define_header(&root, "problem")?;
    let mut problem = ProblemModel {
        name,
        domain: domain.name.clone(),
        objects: Vec::new(),
        init: BTreeSet::new(),
        goal: GoalLiterals::default(),
    };
    let mut table: HashMap<String, String> = domain
        .constants
        .iter()
        .map(|c| (c.name.clone(), c.ty.clone()))
        .collect();

    let mut init_sec = None;
    let mut goal_sec = None;
    for sec in sections {
        match sec.head() {
            Some(":domain") => {
                let items = sec.as_list().unwrap();
                let d = expect_atom(
                    items.get(1).ok_or_else(|| syntax(sec.pos(), "(:domain NAME)"))?,
                    "domain name",
                )?;
                if d != domain.name {
                    return Err(PddlError::DomainMismatch {
                        expected: domain.name.clone(),
                        got: d.to_string(),
                    });
                }
            }
            Some(":objects") => {
                for (n, ty, pos) in typed_list(&sec.as_list().unwrap()[1..])? {
                    let ty =
                        ty.ok_or_else(|| syntax(pos, format!("object `{n}` has no type")))?;
                    check_type(domain, &ty, pos)?;
                    if let Some(prev) = table.get(&n) {
                        if prev != &ty {
                            return Err(PddlError::ConflictingObject {
                                name: n,
                                first: prev.clone(),
                                second: ty,
                            });
                        }
                    }
                    table.insert(n.clone(), ty.clone());
                    problem.objects.push(Typed { name: n, ty });
                }
            }
            Some(":init") => init_sec = Some(sec),
            Some(":goal") => goal_sec = Some(sec),
            Some(other) => {
                return Err(PddlError::Unsupported {
                    pos: sec.pos(),
                    construct: other.to_string(),
                })
            }
            None => return Err(syntax(sec.pos(), "expected a (:section ...)")),
        }
    }

    if let Some(sec) = init_sec {
        for a in &sec.as_list().unwrap()[1..] {
            problem.init.insert(ground_atom(domain, &table, a)?);
        }
    }
    if let Some(sec) = goal_sec {
        let items = sec.as_list().unwrap();
        if items.len() == 2 {
            collect_goal(domain, &table, &items[1], &mut problem.goal)?;
        } else if items.len() > 2 {
            return Err(syntax(sec.pos(), "(:goal F) takes one formula"));
        }
    }
    Ok(problem)
}

fn collect_goal(
    domain: &DomainModel,
    table: &HashMap<String, String>,
    s: &Sexp,
    goal: &mut GoalLiterals,
) -> Result<(), PddlError> {
    match s.head() {
        Some("and") => {
            for g in &s.as_list().unwrap()[1..] {
                collect_goal(domain, table, g, goal)?;
            }
        }
        Some("not") => {
            let items = s.as_list().unwrap();
            if items.len() != 2 {
                return Err(syntax(s.pos(), "(not X) takes one argument"));
            }
            goal.negative.insert(ground_atom(domain, table, &items[1])?);
        }
        None if s.as_list().is_some_and(|l| l.is_empty()) => {}
        _ => {
            goal.positive.insert(ground_atom(domain, table, s)?);
        }
    }
    Ok(())
}

fn ground_atom(
    domain: &DomainModel,
    table: &HashMap<String, String>,
    s: &Sexp,
) -> Result<Atom, PddlError> {
    let items = expect_list(s, "ground atom")?;
    let pname = expect_atom(
        items.first().ok_or_else(|| syntax(s.pos(), "empty atom"))?,
        "predicate",
    )?;
    let schema = domain
        .predicate(pname)
        .ok_or_else(|| PddlError::UnknownPredicate {
            pos: s.pos(),
            name: pname.to_string(),
        })?;
    if items.len() - 1 != schema.params.len() {
        return Err(PddlError::ArityMismatch {
            pos: s.pos(),
            predicate: pname.to_string(),
            expected: schema.params.len(),
            got: items.len() - 1,
        });
    }
    let mut args = Vec::new();
    for (a, p) in items[1..].iter().zip(&schema.params) {
        let obj = expect_atom(a, "object")?;
        let ty = table.get(obj).ok_or_else(|| PddlError::UnknownObject {
            pos: a.pos(),
            name: obj.to_string(),
        })?;
        if !domain.is_subtype(ty, &p.ty) {
            return Err(PddlError::TypeMismatch {
                context: pname.to_string(),
                arg: obj.to_string(),
                arg_type: ty.clone(),
                param_type: p.ty.clone(),
            });
        }
        args.push(obj.to_string());
    }
    Ok(Atom {
        predicate: pname.to_string(),
        args,
    })
}
