"""Smoke test for the cookplan extension module.

Build first:  pip install --no-build-isolation ./crates/py
"""

import cookplan


def main():
    scenario = cookplan.Scenario.fixture("poached-egg", "curated")
    seq = cookplan.Sequence.parse(
        "1. pour(water, pot), turn-on-stove(pot)\n"
        "2. heat(water, boiled-water)\n"
        "3. pour(egg, pot), boil(egg, poached-egg), turn-off-stove(pot)\n"
    )
    assert len(seq) == 3, seq.steps
    assert seq.diagnostics(scenario) == [], seq.diagnostics(scenario)

    goals = seq.compile(scenario)
    plan = cookplan.plan(goals, scenario, seq)
    valid, report = cookplan.validate(plan, goals, scenario)
    assert valid, report
    labels = [l for step in cookplan.plan_sequence(seq, scenario) for l in step]
    assert any(l.startswith("(fetch-water ") for l in labels), labels

    broken = "\n".join(l for l in plan.splitlines() if not l.startswith("(close-tap"))
    valid, report = cookplan.validate(broken, goals, scenario)
    assert not valid and report.startswith("violation"), report

    assert "(:action move-to" in cookplan.domain_pddl()

    t, f, ann = cookplan.synthesize(seed=1, separation=20.0)
    probe = cookplan.LinearProbe.train([(t, f, ann)])
    t2, f2, ann2 = cookplan.synthesize(seed=2, separation=20.0)
    assert probe.detect(t2, f2) == ann2
    assert cookplan.LinearProbe.parse(probe.to_text()).to_text() == probe.to_text()

    try:
        cookplan.Sequence.parse("1. fry(egg)")
    except cookplan.CookplanError:
        pass
    else:
        raise AssertionError("bad sequence accepted")

    print("python smoke test ok")


if __name__ == "__main__":
    main()
