//! The cooking-function sequence DSL.
//!
//! ```text
//! 1. pour(water, pot), turn-on-stove(pot)
//! 2. heat(water, boiled-water)
//! ```
//!
//! Steps start with `N.` or follow a blank line. Calls within a step are
//! comma separated. Identifiers are lowercase alphanumerics and hyphens.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::kitchen::{ObjectKind, ScenarioConfig, MEASURING_CUP, STOVE_VESSELS, WATER};
use crate::pddl::sexpr::Pos;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CookingFunction {
    Pour,
    Mix,
    TurnOnStove,
    SetStove,
    TurnOffStove,
    Stir,
    Heat,
    Cook,
    Boil,
    StirFry,
}

/// What an argument position refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Ingredient,
    Mixture,
    Vessel,
    Tool,
    State,
}

impl Slot {
    fn accepts(self, kind: ObjectKind) -> bool {
        match self {
            Slot::Ingredient => kind.is_ingredient(),
            Slot::Mixture => kind == ObjectKind::Mixture,
            Slot::Vessel => kind == ObjectKind::Vessel,
            Slot::Tool => kind == ObjectKind::Tool,
            Slot::State => false,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Slot::Ingredient => "ingredient",
            Slot::Mixture => "mixture",
            Slot::Vessel => "vessel",
            Slot::Tool => "tool",
            Slot::State => "state",
        }
    }
}

impl CookingFunction {
    pub const ALL: [CookingFunction; 10] = [
        CookingFunction::Pour,
        CookingFunction::Mix,
        CookingFunction::TurnOnStove,
        CookingFunction::SetStove,
        CookingFunction::TurnOffStove,
        CookingFunction::Stir,
        CookingFunction::Heat,
        CookingFunction::Cook,
        CookingFunction::Boil,
        CookingFunction::StirFry,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CookingFunction::Pour => "pour",
            CookingFunction::Mix => "mix",
            CookingFunction::TurnOnStove => "turn-on-stove",
            CookingFunction::SetStove => "set-stove",
            CookingFunction::TurnOffStove => "turn-off-stove",
            CookingFunction::Stir => "stir",
            CookingFunction::Heat => "heat",
            CookingFunction::Cook => "cook",
            CookingFunction::Boil => "boil",
            CookingFunction::StirFry => "stir-fry",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn slots(self) -> &'static [Slot] {
        use Slot::*;
        match self {
            CookingFunction::Pour => &[Ingredient, Vessel],
            CookingFunction::Mix => &[Ingredient, Ingredient, Mixture, Vessel, Tool],
            CookingFunction::TurnOnStove | CookingFunction::TurnOffStove => &[Vessel],
            CookingFunction::SetStove => &[State, Vessel],
            CookingFunction::Stir | CookingFunction::StirFry => &[Ingredient, State, Tool],
            CookingFunction::Heat | CookingFunction::Cook | CookingFunction::Boil => {
                &[Ingredient, State]
            }
        }
    }

    pub fn arity(self) -> usize {
        self.slots().len()
    }

    /// `pour(ingredient, vessel)`
    pub fn signature(self) -> String {
        let slots: Vec<&str> = self.slots().iter().map(|s| s.name()).collect();
        format!("{}({})", self.name(), slots.join(", "))
    }
}

impl fmt::Display for CookingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct FunctionCall {
    pub function: CookingFunction,
    pub args: Vec<String>,
    /// Source position when parsed; ignored by equality.
    pub pos: Option<Pos>,
}

impl FunctionCall {
    pub fn new(function: CookingFunction, args: &[&str]) -> Self {
        Self {
            function,
            args: args.iter().map(|s| s.to_string()).collect(),
            pos: None,
        }
    }

    fn arg_slots(&self) -> impl Iterator<Item = (&str, Slot)> {
        self.args
            .iter()
            .map(String::as_str)
            .zip(self.function.slots().iter().copied())
    }
}

impl PartialEq for FunctionCall {
    fn eq(&self, other: &Self) -> bool {
        self.function == other.function && self.args == other.args
    }
}

impl Eq for FunctionCall {}

impl fmt::Display for FunctionCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.function, self.args.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionSequence {
    pub steps: Vec<Vec<FunctionCall>>,
}

impl FunctionSequence {
    pub fn calls(&self) -> impl Iterator<Item = &FunctionCall> {
        self.steps.iter().flatten()
    }
}

/// Canonical form: one numbered line per step.
impl fmt::Display for FunctionSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, step) in self.steps.iter().enumerate() {
            let calls: Vec<String> = step.iter().map(ToString::to_string).collect();
            writeln!(f, "{}. {}", i + 1, calls.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum FuncSeqError {
    #[error("{pos}: unknown function `{name}`")]
    UnknownFunction { name: String, pos: Pos },
    #[error("{pos}: {function} expects {expected} arguments, got {got}")]
    Arity {
        function: CookingFunction,
        expected: usize,
        got: usize,
        pos: Pos,
    },
    #[error("{pos}: unbalanced parentheses: {msg}")]
    Unbalanced { pos: Pos, msg: String },
    #[error("{pos}: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("no steps")]
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Index,
    Ident(String),
    LParen,
    RParen,
    Comma,
    Break,
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-'
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, FuncSeqError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut newlines_since_token = 0usize;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            newlines_since_token += 1;
            if newlines_since_token == 2 && !out.is_empty() {
                out.push((Tok::Break, pos));
            }
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            i += 1;
            continue;
        }
        newlines_since_token = 0;
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, pos));
            col += 1;
            i += 1;
            continue;
        }
        if is_ident_char(c) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += i - start;
            if word.chars().all(|c| c.is_ascii_digit()) && chars.get(i) == Some(&'.') {
                out.push((Tok::Index, pos));
                i += 1;
                col += 1;
            } else {
                out.push((Tok::Ident(word), pos));
            }
            continue;
        }
        return Err(FuncSeqError::Syntax {
            pos,
            msg: format!("unexpected character `{c}`"),
        });
    }
    Ok(out)
}

fn check_balance(tokens: &[(Tok, Pos)]) -> Result<(), FuncSeqError> {
    let mut open: Option<Pos> = None;
    for (t, pos) in tokens {
        match t {
            Tok::LParen => {
                if let Some(p) = open {
                    return Err(FuncSeqError::Unbalanced {
                        pos: p,
                        msg: "'(' is not closed before the next '('".into(),
                    });
                }
                open = Some(*pos);
            }
            Tok::RParen
                if open.take().is_none() => {
                    return Err(FuncSeqError::Unbalanced {
                        pos: *pos,
                        msg: "')' without matching '('".into(),
                    });
                }
            _ => {}
        }
    }
    match open {
        Some(p) => Err(FuncSeqError::Unbalanced {
            pos: p,
            msg: "unclosed '('".into(),
        }),
        None => Ok(()),
    }
}

struct Parser<'a> {
    toks: &'a [(Tok, Pos)],
    i: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|(t, _)| t)
    }

    fn pos(&self) -> Pos {
        self.toks
            .get(self.i)
            .or(self.toks.last())
            .map(|(_, p)| *p)
            .unwrap_or_default()
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), FuncSeqError> {
        if self.peek() == Some(&want) {
            self.i += 1;
            Ok(())
        } else {
            Err(FuncSeqError::Syntax {
                pos: self.pos(),
                msg: format!("expected {what}"),
            })
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Pos), FuncSeqError> {
        match self.toks.get(self.i) {
            Some((Tok::Ident(s), p)) => {
                self.i += 1;
                Ok((s.clone(), *p))
            }
            _ => Err(FuncSeqError::Syntax {
                pos: self.pos(),
                msg: format!("expected {what}"),
            }),
        }
    }

    fn call(&mut self) -> Result<FunctionCall, FuncSeqError> {
        let (name, pos) = self.ident("a function name")?;
        self.expect(Tok::LParen, "'('")?;
        let mut args = vec![self.ident("an argument")?.0];
        while self.peek() == Some(&Tok::Comma) {
            self.i += 1;
            args.push(self.ident("an argument")?.0);
        }
        self.expect(Tok::RParen, "')'")?;
        let function = CookingFunction::from_name(&name)
            .ok_or(FuncSeqError::UnknownFunction { name, pos })?;
        if args.len() != function.arity() {
            return Err(FuncSeqError::Arity {
                function,
                expected: function.arity(),
                got: args.len(),
                pos,
            });
        }
        Ok(FunctionCall {
            function,
            args,
            pos: Some(pos),
        })
    }
}

pub fn parse_sequence(text: &str) -> Result<FunctionSequence, FuncSeqError> {
    let toks = lex(text)?;
    check_balance(&toks)?;
    let mut p = Parser { toks: &toks, i: 0 };
    let mut steps = Vec::new();
    let mut current: Vec<FunctionCall> = Vec::new();
    while let Some(t) = p.peek() {
        match t {
            Tok::Index | Tok::Break => {
                let numbered = *t == Tok::Index;
                p.i += 1;
                if !current.is_empty() {
                    steps.push(std::mem::take(&mut current));
                }
                if numbered && !matches!(p.peek(), Some(Tok::Ident(_))) {
                    return Err(FuncSeqError::Syntax {
                        pos: p.pos(),
                        msg: "step index must be followed by a call".into(),
                    });
                }
            }
            Tok::Ident(_) => {
                current.push(p.call()?);
                while p.peek() == Some(&Tok::Comma) {
                    p.i += 1;
                    current.push(p.call()?);
                }
                if matches!(p.peek(), Some(Tok::Ident(_))) {
                    return Err(FuncSeqError::Syntax {
                        pos: p.pos(),
                        msg: "expected ',' between calls".into(),
                    });
                }
            }
            _ => {
                return Err(FuncSeqError::Syntax {
                    pos: p.pos(),
                    msg: "expected a step index or a call".into(),
                })
            }
        }
    }
    if !current.is_empty() {
        steps.push(current);
    }
    if steps.is_empty() {
        return Err(FuncSeqError::Empty);
    }
    Ok(FunctionSequence { steps })
}

/// What the validator knows about the kitchen before the first step.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KnownObjects {
    pub kinds: BTreeMap<String, ObjectKind>,
    /// Initial ingredient -> vessel containment.
    pub containment: BTreeMap<String, String>,
    pub burners: BTreeSet<String>,
}

impl KnownObjects {
    /// Only the objects every kitchen has.
    pub fn builtin() -> Self {
        let mut k = Self::default();
        for v in STOVE_VESSELS {
            k.kinds.insert(v.to_string(), ObjectKind::Vessel);
            k.burners.insert(v.to_string());
        }
        k.kinds.insert(MEASURING_CUP.to_string(), ObjectKind::Vessel);
        k.kinds.insert(WATER.to_string(), ObjectKind::Ingredient);
        k
    }

    pub fn from_scenario(s: &ScenarioConfig) -> Self {
        Self {
            kinds: s.objects.iter().map(|(n, o)| (n.clone(), o.kind)).collect(),
            containment: s.containment.clone(),
            burners: s
                .objects
                .values()
                .filter(|o| o.stove_equipped)
                .map(|o| o.name.clone())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum DiagnosticKind {
    /// Argument neither in the scenario nor mentioned by an earlier call.
    UnknownObject { object: String },
    /// Known object in a slot of the wrong kind.
    KindMisuse {
        object: String,
        slot: &'static str,
        kind: Option<ObjectKind>,
    },
    /// Stove function applied to a vessel without a burner.
    NoBurner { vessel: String },
    /// Ingredient not where the function needs it.
    NotContained {
        ingredient: String,
        required: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub kind: DiagnosticKind,
    /// 1-based step and call index.
    pub step: usize,
    pub call: usize,
    pub pos: Option<Pos>,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev}")?;
        if let Some(p) = self.pos {
            write!(f, " {p}")?;
        }
        write!(f, " step {} call {}: ", self.step, self.call)?;
        match &self.kind {
            DiagnosticKind::UnknownObject { object } => {
                write!(f, "`{object}` is not introduced by the scenario or an earlier call")
            }
            DiagnosticKind::KindMisuse { object, slot, kind } => match kind {
                Some(k) => write!(f, "`{object}` is a {k} but is used as a {slot}"),
                None => write!(f, "`{object}` is an object but is used as a {slot}"),
            },
            DiagnosticKind::NoBurner { vessel } => write!(f, "`{vessel}` has no burner"),
            DiagnosticKind::NotContained {
                ingredient,
                required: Some(v),
            } => write!(f, "`{ingredient}` is not in `{v}`"),
            DiagnosticKind::NotContained {
                ingredient,
                required: None,
            } => write!(f, "`{ingredient}` is not in any vessel"),
        }
    }
}

/// Continuity and kind checks. Never fails; problems come back as
/// diagnostics in call order.
pub fn validate_sequence(fs: &FunctionSequence, known: &KnownObjects) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut introduced: BTreeSet<String> = KnownObjects::builtin().kinds.into_keys().collect();
    introduced.extend(known.kinds.keys().cloned());
    let mut burners = KnownObjects::builtin().burners;
    burners.extend(known.burners.iter().cloned());
    let mut contained: BTreeMap<String, String> = known.containment.clone();
    let kind_of = |name: &str| -> Option<ObjectKind> {
        known
            .kinds
            .get(name)
            .copied()
            .or_else(|| KnownObjects::builtin().kinds.get(name).copied())
    };

    for (si, step) in fs.steps.iter().enumerate() {
        for (ci, call) in step.iter().enumerate() {
            let mut emit = |severity, kind| {
                out.push(Diagnostic {
                    severity,
                    kind,
                    step: si + 1,
                    call: ci + 1,
                    pos: call.pos,
                })
            };
            for (arg, slot) in call.arg_slots() {
                let kind = kind_of(arg);
                match slot {
                    Slot::State => {
                        if let Some(k) = kind {
                            emit(
                                Severity::Error,
                                DiagnosticKind::KindMisuse {
                                    object: arg.to_string(),
                                    slot: slot.name(),
                                    kind: Some(k),
                                },
                            );
                        }
                        continue;
                    }
                    Slot::Mixture if call.function == CookingFunction::Mix => {}
                    _ => {
                        if !introduced.contains(arg) {
                            emit(
                                Severity::Warning,
                                DiagnosticKind::UnknownObject {
                                    object: arg.to_string(),
                                },
                            );
                        }
                    }
                }
                if let Some(k) = kind {
                    if !slot.accepts(k) {
                        emit(
                            Severity::Error,
                            DiagnosticKind::KindMisuse {
                                object: arg.to_string(),
                                slot: slot.name(),
                                kind: Some(k),
                            },
                        );
                    }
                }
                introduced.insert(arg.to_string());
            }

            let a = &call.args;
            let mut need_in = |ingredient: &str, required: Option<&str>| {
                let ok = match (contained.get(ingredient), required) {
                    (Some(v), Some(r)) => v == r,
                    (Some(_), None) => true,
                    (None, _) => false,
                };
                if !ok {
                    emit(
                        Severity::Warning,
                        DiagnosticKind::NotContained {
                            ingredient: ingredient.to_string(),
                            required: required.map(str::to_string),
                        },
                    );
                }
            };
            match call.function {
                CookingFunction::Pour => {}
                CookingFunction::Mix => {
                    need_in(&a[0], Some(&a[3]));
                    need_in(&a[1], Some(&a[3]));
                }
                CookingFunction::Stir | CookingFunction::Heat | CookingFunction::StirFry => {
                    need_in(&a[0], None)
                }
                CookingFunction::Cook => need_in(&a[0], Some(STOVE_VESSELS[1])),
                CookingFunction::Boil => need_in(&a[0], Some(STOVE_VESSELS[0])),
                CookingFunction::TurnOnStove
                | CookingFunction::SetStove
                | CookingFunction::TurnOffStove => {
                    let v = a.last().unwrap();
                    if kind_of(v) == Some(ObjectKind::Vessel) && !burners.contains(v) {
                        emit(
                            Severity::Error,
                            DiagnosticKind::NoBurner { vessel: v.clone() },
                        );
                    }
                }
            }
            match call.function {
                CookingFunction::Pour => {
                    contained.insert(a[0].clone(), a[1].clone());
                }
                CookingFunction::Mix => {
                    contained.remove(&a[0]);
                    contained.remove(&a[1]);
                    contained.insert(a[2].clone(), a[3].clone());
                }
                _ => {}
            }
        }
    }
    out
}
