"""Smoke test for the `plumber` extension module.

Build and install first:

    pip install --no-build-isolation -e crates/py
    python3 python/smoke_test.py
"""

import json
import tempfile
from pathlib import Path

import plumber

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
REMBRANDT = "Rembrandt painted The Storm on the Sea of Galilee. It was painted in 1633."


def main():
    reg = plumber.Registry()
    dbpedia = plumber.KnowledgeGraph.bundled("dbpedia")
    orkg = plumber.KnowledgeGraph.bundled("orkg")

    assert len(reg.components(task="TE", kg="dbpedia")) == 8
    pool = reg.generate_pipelines("dbpedia")
    assert len(pool) == 240
    assert len({p.id for p in pool}) == 240
    assert len(reg.generate_pipelines("orkg")) == 24

    assert dbpedia.lookup("Rembrandt")[0][0] == "dbr:Rembrandt"
    assert dbpedia.lookup("rembrandt", mode="case_insensitive")[0][0] == "dbr:Rembrandt"

    pronoun_pipeline = plumber.Pipeline(
        "dbpedia",
        "cr_pronoun_nearest",
        ["te_svo", "te_verb_prep_pattern"],
        joint="elrl_joint",
    )
    pronoun_pipeline.validate(reg)
    assert plumber.Pipeline.from_json(pronoun_pipeline.to_json()) == pronoun_pipeline
    out = plumber.run(reg, pronoun_pipeline, REMBRANDT, dbpedia)
    assert out["pipeline_id"] == pronoun_pipeline.id
    assert sorted(out["triples"]) == sorted(
        [
            ["dbr:Rembrandt", "dbo:Artist", "dbr:The_Storm_on_the_Sea_of_Galilee"],
            ["dbr:The_Storm_on_the_Sea_of_Galilee", "dbp:year", '"1633"'],
        ]
    ), out["triples"]
    assert plumber.run(reg, pronoun_pipeline, "", dbpedia)["triples"] == []

    orkg_pipeline = plumber.Pipeline(
        "orkg", "cr_identity", ["te_verb_prep_pattern"], el="el_case_insensitive", rl="rl_dictionary"
    )
    report = plumber.evaluate_pipeline(reg, orkg_pipeline, FIXTURES / "orkg-example.jsonl", orkg)
    assert report["f1"] == 1.0, report

    small = [
        p
        for p in pool
        if p.cr in ("cr_identity", "cr_pronoun_nearest") and p.te[0] in ("te_svo", "te_clause_split")
    ]
    synthetic = FIXTURES / "synthetic-dbpedia.jsonl"
    model = plumber.SelectorModel.train(reg, small, synthetic, dbpedia, epochs=200)
    again = plumber.SelectorModel.train(reg, small, synthetic, dbpedia, epochs=200)
    assert model.to_json() == again.to_json()
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "model.json"
        model.save(path)
        loaded = plumber.SelectorModel.load(path)
    assert loaded.select(REMBRANDT) == model.select(REMBRANDT)
    assert model.select(REMBRANDT) in {p.id for p in small}
    assert len(model.scores(REMBRANDT)) == len(model.classes)
    assert len(plumber.features(REMBRANDT)) > 0

    oracle = plumber.evaluate_selection(reg, small, synthetic, dbpedia)
    chosen = plumber.evaluate_selection(reg, small, synthetic, dbpedia, model=model)
    assert oracle["f1"] >= chosen["f1"] > 0.5, (oracle["f1"], chosen["f1"])

    cv = plumber.cross_validate(reg, small, synthetic, dbpedia, k=5, epochs=100)
    assert cv["k"] == 5 and len(cv["folds"]) == 5

    micro = FIXTURES / "microbench-30.jsonl"
    identity = plumber.Pipeline("dbpedia", "cr_identity", ["te_svo"], el="el_exact", rl="rl_dictionary")
    attribution = plumber.attribute_errors(reg, identity, micro, dbpedia)
    assert abs(sum(attribution["shares"].values()) - 1.0) < 1e-9
    csv = plumber.microbench(reg, "EL", micro, dbpedia)
    assert csv.splitlines()[0].startswith("component")

    try:
        plumber.Pipeline("dbpedia", "cr_identity", ["te_svo"], el="el_exact")
    except plumber.PlumberError:
        pass
    else:
        raise AssertionError("incomplete linking option accepted")
    try:
        plumber.evaluate_pipeline(reg, identity, FIXTURES / "missing.jsonl", dbpedia)
    except plumber.PlumberError:
        pass
    else:
        raise AssertionError("missing dataset accepted")

    print(json.dumps({"pipelines": len(pool), "oracle_f1": oracle["f1"], "selector_f1": chosen["f1"]}))
    print("smoke test passed")


if __name__ == "__main__":
    main()
