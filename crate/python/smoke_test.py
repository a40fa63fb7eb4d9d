"""Smoke test for the `bach` extension module.

Build and install first, for example with
`pip install --no-build-isolation ./crates/python`, then run this file.
"""

import pathlib

import bach

EXAMPLES = pathlib.Path(__file__).resolve().parent.parent / "crates" / "core" / "examples"


def main():
    t = bach.Term("message(alice,mallory,encrypt_i(na,alice,pkm))")
    assert str(t) == "message(alice,mallory,encrypt_i(na,alice,pkm))"
    assert t.is_ground() and not bach.Term("f(X)").is_ground()
    assert str(bach.public_key("mallory")) == "pkm"

    s = bach.Store(["a", "a", t])
    assert s.count("a") == 2 and len(s) == 3
    assert s.get("a") and s.ask("a") and not s.nask("a")
    assert not s.get("b")
    assert s.dump() == ["a : 1", str(t) + " : 1"]

    model = bach.Model.needham_schroeder()
    assert model == bach.Model.load(EXAMPLES / "ns.bach")
    assert model.procedures == ["Alice", "Bob", "Mallory", "Protocol"]
    assert (model.entry, model.goal) == ("Protocol", "F")
    assert bach.Model.parse(model.pretty()) == model

    result = bach.search(model)
    assert result.status == "witness"
    witness = result.witnesses[0]
    assert len(witness.trace) == 16
    assert witness.exchanges == bach.expected_attack_summary()
    assert witness.store == [
        "a_commit(mallory) : 1",
        "a_running(mallory) : 1",
        "b_commit(alice) : 1",
        "b_running(mallory) : 1",
    ]
    assert bach.search(model, max_depth=5).status == "depth limit"

    residuals = bach.derive(model, bach.Store(["b_commit(alice)"]), "F")
    assert residuals == ["F", "ε"], residuals

    outcomes = {bach.run(model, seed=seed).status for seed in range(20)}
    assert outcomes == {"formula satisfied", "stuck"}, outcomes
    for seed in range(20):
        r = bach.run(model, seed=seed)
        if r.status == "formula satisfied":
            assert r.exchanges == bach.expected_attack_summary()

    honest = bach.search(bach.Model.honest())
    assert len(honest.witnesses[0].trace) == 10

    try:
        bach.Model.parse("proc P = P + tell(a) .")
    except bach.BachError as e:
        assert "P" in str(e)
    else:
        raise AssertionError("unguarded recursion accepted")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
