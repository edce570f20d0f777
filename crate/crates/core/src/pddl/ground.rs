use std::collections::{BTreeMap, BTreeSet, HashMap};

use fixedbitset::FixedBitSet;

use super::model::*;
use super::sexpr::Pos;
use super::PddlError;

/// Closed-world state: one bit per fact of a [`GroundedTask`] universe.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WorldState(pub(crate) FixedBitSet);

impl WorldState {
    pub fn empty(n_facts: usize) -> Self {
        Self(FixedBitSet::with_capacity(n_facts))
    }

    pub fn contains(&self, fact: usize) -> bool {
        self.0.contains(fact)
    }

    pub fn insert(&mut self, fact: usize) {
        self.0.insert(fact);
    }

    pub fn remove(&mut self, fact: usize) {
        self.0.set(fact, false);
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.ones()
    }

    pub fn len(&self) -> usize {
        self.0.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundAction {
    pub schema: String,
    pub args: Vec<String>,
    pub pre_pos: Vec<usize>,
    pub pre_neg: Vec<usize>,
    pub add: Vec<usize>,
    pub del: Vec<usize>,
}

impl GroundAction {
    /// Printed form `(name arg1 arg2 ...)`; also the sort key.
    pub fn label(&self) -> String {
        let mut s = format!("({}", self.schema);
        for a in &self.args {
            s.push(' ');
            s.push_str(a);
        }
        s.push(')');
        s
    }
}

#[derive(Debug, Clone)]
pub struct GroundedTask {
    pub facts: Vec<Atom>,
    index: HashMap<Atom, usize>,
    pub actions: Vec<GroundAction>,
    pub init: WorldState,
    /// All objects and constants with their declared type, sorted by name.
    pub objects: Vec<Typed>,
}

impl GroundedTask {
    pub fn fact_id(&self, atom: &Atom) -> Option<usize> {
        self.index.get(atom).copied()
    }

    pub fn state_from_atoms<'a>(&self, atoms: impl IntoIterator<Item = &'a Atom>) -> Option<WorldState> {
        let mut s = WorldState::empty(self.facts.len());
        for a in atoms {
            s.insert(self.fact_id(a)?);
        }
        Some(s)
    }

    pub fn atoms_of(&self, state: &WorldState) -> BTreeSet<Atom> {
        state.ones().map(|i| self.facts[i].clone()).collect()
    }

    pub fn action_by_label(&self, label: &str) -> Option<usize> {
        self.actions
            .binary_search_by(|a| a.label().as_str().cmp(label))
            .ok()
    }

    /// Number of grounded instances of one schema.
    pub fn count_schema(&self, schema: &str) -> usize {
        self.actions.iter().filter(|a| a.schema == schema).count()
    }

    /// Human-readable report of the grounded universe.
    pub fn report(&self) -> String {
        let mut per: BTreeMap<&str, usize> = BTreeMap::new();
        for a in &self.actions {
            *per.entry(a.schema.as_str()).or_default() += 1;
        }
        let mut out = format!(
            "objects: {}\nfacts: {}\nactions: {}\ninit-true: {}\n",
            self.objects.len(),
            self.facts.len(),
            self.actions.len(),
            self.init.len()
        );
        for (k, v) in per {
            out.push_str(&format!("  {k}: {v}\n"));
        }
        out
    }
}

fn resolve(term: &Term, binding: &HashMap<&str, &str>) -> String {
    match term {
        Term::Var(v) => binding[v.as_str()].to_string(),
        Term::Const(c) => c.clone(),
    }
}

fn instantiate(a: &AtomSchema, binding: &HashMap<&str, &str>) -> Atom {
    Atom {
        predicate: a.predicate.clone(),
        args: a.args.iter().map(|t| resolve(t, binding)).collect(),
    }
}

/// Evaluate (in)equality constraints whose terms are all bound.
/// `None` means not decidable yet.
fn constraint_holds(c: &Condition, binding: &HashMap<&str, &str>) -> Option<bool> {
    let value = |t: &Term| -> Option<String> {
        match t {
            Term::Var(v) => binding.get(v.as_str()).map(|s| s.to_string()),
            Term::Const(c) => Some(c.clone()),
        }
    };
    match c {
        Condition::Eq(a, b) => Some(value(a)? == value(b)?),
        Condition::Neq(a, b) => Some(value(a)? != value(b)?),
        _ => Some(true),
    }
}

/// Instantiate every action schema over all type-consistent bindings.
///
/// Inequality/equality constraints prune bindings; `forall` clauses expand to
/// one negative literal per object of the quantified type. Facts and actions
/// are ordered lexicographically so identical inputs give identical tasks.
pub fn ground(domain: &DomainModel, problem: &ProblemModel) -> Result<GroundedTask, PddlError> {
    let mut objects: BTreeMap<String, String> = BTreeMap::new();
    for o in domain.constants.iter().chain(&problem.objects) {
        if !domain.has_type(&o.ty) {
            return Err(PddlError::UndeclaredType {
                pos: Pos::default(),
                name: o.ty.clone(),
            });
        }
        if let Some(prev) = objects.get(&o.name) {
            if prev != &o.ty {
                return Err(PddlError::ConflictingObject {
                    name: o.name.clone(),
                    first: prev.clone(),
                    second: o.ty.clone(),
                });
            }
        }
        objects.insert(o.name.clone(), o.ty.clone());
    }
    let mut by_type: HashMap<String, Vec<String>> = HashMap::new();
    for ty in domain
        .types
        .iter()
        .map(|t| t.name.as_str())
        .chain([ROOT_TYPE])
    {
        let members = objects
            .iter()
            .filter(|(_, t)| domain.is_subtype(t, ty))
            .map(|(n, _)| n.clone())
            .collect();
        by_type.insert(ty.to_string(), members);
    }
    let of_type = |ty: &str| -> &[String] { by_type.get(ty).map(Vec::as_slice).unwrap_or(&[]) };

    struct Raw {
        schema: String,
        args: Vec<String>,
        pre_pos: Vec<Atom>,
        pre_neg: Vec<Atom>,
        add: Vec<Atom>,
        del: Vec<Atom>,
    }
    let mut raw = Vec::new();

    for schema in &domain.actions {
        let candidates: Vec<&[String]> = schema.params.iter().map(|p| of_type(&p.ty)).collect();
        let constraints: Vec<&Condition> = schema
            .precondition
            .iter()
            .filter(|c| matches!(c, Condition::Eq(..) | Condition::Neq(..)))
            .collect();
        let mut binding: HashMap<&str, &str> = HashMap::new();
        let mut stack: Vec<usize> = vec![0; schema.params.len()];
        // Iterative odometer over parameter candidates with prefix pruning.
        let n = schema.params.len();
        let mut depth = 0usize;
        loop {
            if n == 0 {
                if constraints.iter().all(|c| constraint_holds(c, &binding) == Some(true)) {
                    raw.push(build(schema, &binding, &of_type));
                }
                break;
            }
            if stack[depth] >= candidates[depth].len() {
                stack[depth] = 0;
                binding.remove(schema.params[depth].name.as_str());
                if depth == 0 {
                    break;
                }
                depth -= 1;
                stack[depth] += 1;
                continue;
            }
            binding.insert(
                schema.params[depth].name.as_str(),
                candidates[depth][stack[depth]].as_str(),
            );
            let ok = constraints
                .iter()
                .all(|c| constraint_holds(c, &binding) != Some(false));
            if !ok {
                stack[depth] += 1;
                continue;
            }
            if depth + 1 == n {
                raw.push(build(schema, &binding, &of_type));
                stack[depth] += 1;
            } else {
                depth += 1;
            }
        }
    }

    fn build<'a>(
        schema: &'a ActionSchema,
        binding: &HashMap<&'a str, &'a str>,
        of_type: &dyn Fn(&str) -> &'a [String],
    ) -> Raw {
        let mut r = Raw {
            schema: schema.name.clone(),
            args: schema
                .params
                .iter()
                .map(|p| binding[p.name.as_str()].to_string())
                .collect(),
            pre_pos: vec![],
            pre_neg: vec![],
            add: vec![],
            del: vec![],
        };
        for c in &schema.precondition {
            match c {
                Condition::Pos(a) => r.pre_pos.push(instantiate(a, binding)),
                Condition::Neg(a) => r.pre_neg.push(instantiate(a, binding)),
                Condition::ForallNot { vars, atom } => {
                    let mut tuples: Vec<Vec<&'a str>> = vec![vec![]];
                    for v in vars {
                        let objs = of_type(&v.ty);
                        tuples = tuples
                            .into_iter()
                            .flat_map(|t| {
                                objs.iter().map(move |o| {
                                    let mut t = t.clone();
                                    t.push(o.as_str());
                                    t
                                })
                            })
                            .collect();
                    }
                    for t in tuples {
                        let mut b = binding.clone();
                        for (v, o) in vars.iter().zip(t) {
                            b.insert(v.name.as_str(), o);
                        }
                        r.pre_neg.push(instantiate(atom, &b));
                    }
                }
                Condition::Eq(..) | Condition::Neq(..) => {}
            }
        }
        for e in &schema.effect {
            match e {
                Effect::Add(a) => r.add.push(instantiate(a, binding)),
                Effect::Del(a) => r.del.push(instantiate(a, binding)),
            }
        }
        // add wins over delete when both mention the same atom
        r.del.retain(|d| !r.add.contains(d));
        r
    }

    let mut universe: BTreeSet<Atom> = problem.init.clone();
    for r in &raw {
        for a in r.pre_pos.iter().chain(&r.pre_neg).chain(&r.add).chain(&r.del) {
            universe.insert(a.clone());
        }
    }
    let facts: Vec<Atom> = universe.into_iter().collect();
    let index: HashMap<Atom, usize> = facts
        .iter()
        .enumerate()
        .map(|(i, a)| (a.clone(), i))
        .collect();
    let ids = |v: &[Atom]| -> Vec<usize> {
        let mut ids: Vec<usize> = v.iter().map(|a| index[a]).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    };
    let mut actions: Vec<GroundAction> = raw
        .iter()
        .map(|r| GroundAction {
            schema: r.schema.clone(),
            args: r.args.clone(),
            pre_pos: ids(&r.pre_pos),
            pre_neg: ids(&r.pre_neg),
            add: ids(&r.add),
            del: ids(&r.del),
        })
        .collect();
    actions.sort_by_cached_key(GroundAction::label);

    let mut init = WorldState::empty(facts.len());
    for a in &problem.init {
        init.insert(index[a]);
    }
    Ok(GroundedTask {
        facts,
        index,
        actions,
        init,
        objects: objects
            .into_iter()
            .map(|(name, ty)| Typed { name, ty })
            .collect(),
    })
}
