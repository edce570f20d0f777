use std::fmt::Write;

use super::model::*;

fn typed(out: &mut String, items: &[Typed], var: bool) {
    let prefix = if var { "?" } else { "" };
    let parts: Vec<String> = items
        .iter()
        .map(|t| format!("{prefix}{} - {}", t.name, t.ty))
        .collect();
    out.push_str(&parts.join(" "));
}

fn condition(c: &Condition) -> String {
    match c {
        Condition::Pos(a) => a.to_string(),
        Condition::Neg(a) => format!("(not {a})"),
        Condition::Eq(a, b) => format!("(= {a} {b})"),
        Condition::Neq(a, b) => format!("(not (= {a} {b}))"),
        Condition::ForallNot { vars, atom } => {
            let mut v = String::new();
            typed(&mut v, vars, true);
            format!("(forall ({v}) (not {atom}))")
        }
    }
}

fn block(out: &mut String, key: &str, lines: &[String]) {
    if lines.is_empty() {
        let _ = writeln!(out, "    {key} (and)");
        return;
    }
    let _ = write!(out, "    {key} (and");
    for l in lines {
        let _ = write!(out, "\n      {l}");
    }
    out.push(')');
    out.push('\n');
}

/// Canonical PDDL rendering of a domain. Order follows the model.
pub fn print_domain(d: &DomainModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (domain {})", d.name);
    if !d.requirements.is_empty() {
        let _ = writeln!(out, "  (:requirements {})", d.requirements.join(" "));
    }
    if !d.types.is_empty() {
        out.push_str("  (:types");
        for t in &d.types {
            let parent = t.parent.as_deref().unwrap_or(ROOT_TYPE);
            let _ = write!(out, "\n    {} - {}", t.name, parent);
        }
        out.push_str(")\n");
    }
    if !d.constants.is_empty() {
        out.push_str("  (:constants");
        for c in &d.constants {
            let _ = write!(out, "\n    {} - {}", c.name, c.ty);
        }
        out.push_str(")\n");
    }
    out.push_str("  (:predicates");
    for p in &d.predicates {
        out.push_str("\n    (");
        out.push_str(&p.name);
        if !p.params.is_empty() {
            out.push(' ');
            typed(&mut out, &p.params, true);
        }
        out.push(')');
    }
    out.push_str(")\n");
    for a in &d.actions {
        let _ = writeln!(out, "  (:action {}", a.name);
        let mut params = String::new();
        typed(&mut params, &a.params, true);
        let _ = writeln!(out, "    :parameters ({params})");
        let pre: Vec<String> = a.precondition.iter().map(condition).collect();
        block(&mut out, ":precondition", &pre);
        let eff: Vec<String> = a
            .effect
            .iter()
            .map(|e| match e {
                Effect::Add(a) => a.to_string(),
                Effect::Del(a) => format!("(not {a})"),
            })
            .collect();
        block(&mut out, ":effect", &eff);
        // close the action on the effect line
        out.pop();
        out.push_str(")\n");
    }
    out.push_str(")\n");
    out
}

/// Canonical PDDL rendering of a problem. Init atoms are sorted.
pub fn print_problem(p: &ProblemModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (problem {})", p.name);
    let _ = writeln!(out, "  (:domain {})", p.domain);
    if !p.objects.is_empty() {
        out.push_str("  (:objects");
        for o in &p.objects {
            let _ = write!(out, "\n    {} - {}", o.name, o.ty);
        }
        out.push_str(")\n");
    }
    out.push_str("  (:init");
    for a in &p.init {
        let _ = write!(out, "\n    {a}");
    }
    out.push_str(")\n");
    let mut goals: Vec<String> = p.goal.positive.iter().map(Atom::to_string).collect();
    goals.extend(p.goal.negative.iter().map(|a| format!("(not {a})")));
    out.push_str("  (:goal (and");
    for g in goals {
        let _ = write!(out, "\n    {g}");
    }
    out.push_str("))\n)\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{parse_domain, parse_problem};
    use std::collections::BTreeSet;

    #[test]
    fn empty_action_domain_has_predicates_block() {
        let d = DomainModel {
            name: "d".into(),
            requirements: vec![":strips".into()],
            types: vec![],
            constants: vec![],
            predicates: vec![PredicateSchema {
                name: "p".into(),
                params: vec![],
            }],
            actions: vec![],
        };
        let text = print_domain(&d);
        assert!(text.contains("(:predicates"));
        assert_eq!(parse_domain(&text).unwrap(), d);
    }

    #[test]
    fn problem_literal_verbatim() {
        let d = parse_domain("(define (domain d) (:types spot) (:predicates (robot-at ?s - spot)))")
            .unwrap();
        let p = ProblemModel {
            name: "p".into(),
            domain: "d".into(),
            objects: vec![Typed::new("kitchen", "spot")],
            init: BTreeSet::from([Atom::new("robot-at", &["kitchen"])]),
            goal: GoalLiterals::default(),
        };
        let text = print_problem(&p);
        assert!(text.contains("(robot-at kitchen)"));
        assert_eq!(parse_problem(&d, &text).unwrap(), p);
    }
}
