"""Smoke test for the pymirstat extension.

Build first:  maturin develop -m crates/python/Cargo.toml
Run:          python python/smoke_test.py
"""

import math
import os
import tempfile

import pymirstat

HERE = os.path.dirname(os.path.abspath(__file__))
CORPUS = os.path.join(HERE, "..", "crates", "core", "tests", "fixtures", "corpus")


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol


def main():
    engine = pymirstat.Engine.from_dir(CORPUS)
    assert len(engine) == 8, len(engine)

    ranked = engine.search("cat", model="pnorm", k=3)
    assert ranked[0][0] == "d01", ranked
    assert all(0.0 <= s <= 1.0 for _, s in ranked)
    for model in ("bim", "inet"):
        assert engine.search("dog garden", model=model), model
    assert engine.search("dog garden", model="bim", relevant=["d03"])[0][0] == "d03"

    try:
        engine.search("cat AND")
    except pymirstat.MirstatError as err:
        assert "column 8" in str(err), err
    else:
        raise AssertionError("expected a parse error")

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "index.json")
        engine.save(path)
        reloaded = pymirstat.Engine.load(path)
        assert reloaded.search("cat OR dog") == engine.search("cat OR dog")

    expansion = engine.expand("cat", m=5, k=2)
    assert expansion["expanded"] and len(expansion["concepts"]) == 2

    vector, discarded = engine.refine({"cat": 1.0}, ["d05"], ["d01"], 1.0, 1.0, 1.0)
    assert "kitten" in vector and not discarded

    assert engine.ontology().startswith("<?xml")
    assert engine.document("d07")["media_type"] == "image"
    assert engine.document("nope") is None

    assert close(pymirstat.eval_or([1.0, 0.0], [1.0, 1.0], 2.0), math.sqrt(0.5))
    assert close(pymirstat.eval_and([1.0, 0.0], [1.0, 1.0], 1.0), 0.5)
    assert close(pymirstat.link_matrix([0.9, 0.2], [2.0, 1.0]),
                 pymirstat.link_matrix([0.9, 0.2], [2.0, 1.0], enumerate=True))
    assert pymirstat.parse_query("cat:0.5 OR dog")

    w = pymirstat.bim_weight(10, 4, 3, 2, smoothing="raw")
    assert close(w["odds_ratio"], 5.0) and close(w["log_weight"], math.log(5.0))

    refined, _ = pymirstat.rocchio({"a": 1.0}, [{"a": 0.5}], [{"a": 1.0}], 1.0, 1.0, 1.0)
    assert close(refined.get("a", 0.0), 0.5)

    store = pymirstat.QueryStore()
    qid = store.save({"cat": 0.8, "kitten": 0.4}, ["d01"])
    hit = store.find_reusable({"cat": 1.6, "kitten": 0.8})
    assert hit is not None and hit[0] == qid and close(hit[1], 1.0)
    assert store.find_reusable({"stock": 1.0}) is None
    assert close(pymirstat.similarity({"a": 1.0}, {"a": 2.0}), 1.0)

    print("pymirstat smoke test passed")


if __name__ == "__main__":
    main()
