use std::collections::BTreeSet;
use std::fmt;

/// Implicit root of every type hierarchy.
pub const ROOT_TYPE: &str = "object-root";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    /// `None` only for [`ROOT_TYPE`] itself.
    pub parent: Option<String>,
}

impl TypeDecl {
    pub fn new(name: &str, parent: &str) -> Self {
        Self {
            name: name.to_string(),
            parent: Some(parent.to_string()),
        }
    }
}

/// A typed parameter or object declaration (`?v - vessel`, `pot - vessel`).
/// Variable names are stored without the leading `?`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Typed {
    pub name: String,
    pub ty: String,
}

impl Typed {
    pub fn new(name: &str, ty: &str) -> Self {
        Self {
            name: name.to_string(),
            ty: ty.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateSchema {
    pub name: String,
    pub params: Vec<Typed>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{v}"),
            Term::Const(c) => f.write_str(c),
        }
    }
}

/// Predicate applied to terms, possibly containing variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomSchema {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl fmt::Display for AtomSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Condition {
    Pos(AtomSchema),
    Neg(AtomSchema),
    Eq(Term, Term),
    Neq(Term, Term),
    /// `(forall (?x - t ...) (not atom))`, expanded per object at grounding.
    ForallNot { vars: Vec<Typed>, atom: AtomSchema },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Effect {
    Add(AtomSchema),
    Del(AtomSchema),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<Typed>,
    pub precondition: Vec<Condition>,
    pub effect: Vec<Effect>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainModel {
    pub name: String,
    pub requirements: Vec<String>,
    pub types: Vec<TypeDecl>,
    pub constants: Vec<Typed>,
    pub predicates: Vec<PredicateSchema>,
    pub actions: Vec<ActionSchema>,
}

impl DomainModel {
    pub fn predicate(&self, name: &str) -> Option<&PredicateSchema> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn action(&self, name: &str) -> Option<&ActionSchema> {
        self.actions.iter().find(|a| a.name == name)
    }

    pub fn has_type(&self, name: &str) -> bool {
        name == ROOT_TYPE || self.types.iter().any(|t| t.name == name)
    }

    pub fn parent_of(&self, name: &str) -> Option<&str> {
        self.types
            .iter()
            .find(|t| t.name == name)
            .and_then(|t| t.parent.as_deref())
    }

    /// True when `ty` equals `ancestor` or descends from it.
    pub fn is_subtype(&self, ty: &str, ancestor: &str) -> bool {
        let mut cur = Some(ty);
        let mut guard = 0;
        while let Some(t) = cur {
            if t == ancestor {
                return true;
            }
            guard += 1;
            if guard > self.types.len() + 1 {
                return false;
            }
            cur = self.parent_of(t);
        }
        false
    }
}

/// A ground atom such as `(object-at pot stove)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl Atom {
    pub fn new(predicate: &str, args: &[&str]) -> Self {
        Self {
            predicate: predicate.to_string(),
            args: args.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Parse the printed form `(pred a b)`.
    pub fn parse(text: &str) -> Option<Self> {
        let inner = text.trim().strip_prefix('(')?.strip_suffix(')')?;
        let mut parts = inner.split_whitespace();
        let predicate = parts.next()?.to_string();
        Some(Self {
            predicate,
            args: parts.map(str::to_string).collect(),
        })
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

/// Conjunctive goal of positive and negative ground atoms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GoalLiterals {
    pub positive: BTreeSet<Atom>,
    pub negative: BTreeSet<Atom>,
}

impl GoalLiterals {
    pub fn is_empty(&self) -> bool {
        self.positive.is_empty() && self.negative.is_empty()
    }

    /// Atoms required both true and false.
    pub fn conflicts(&self) -> Vec<&Atom> {
        self.positive.intersection(&self.negative).collect()
    }

    /// Closed-world satisfaction check against a set of true atoms.
    pub fn satisfied_by(&self, state: &BTreeSet<Atom>) -> bool {
        self.positive.iter().all(|a| state.contains(a))
            && self.negative.iter().all(|a| !state.contains(a))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemModel {
    pub name: String,
    pub domain: String,
    pub objects: Vec<Typed>,
    pub init: BTreeSet<Atom>,
    pub goal: GoalLiterals,
}
