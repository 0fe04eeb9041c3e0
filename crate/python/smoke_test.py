"""Smoke test for the Python extension. Build it first with
`maturin develop -m crates/python/Cargo.toml` or install the wheel."""

import json

import ctwl


def cdg(edges):
    nodes = [{"id": f"v{i}", "attr": [1.0]} for i in range(6)]
    es = [{"u": f"v{u}", "v": f"v{v}", "attr": [1.0]} for u, v in edges]
    return ctwl.Cdg.from_jsonl(json.dumps({"type": "start", "d": 1, "nodes": nodes, "edges": es}) + "\n")


def main():
    tt = cdg([(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)])
    c6 = cdg([(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)])
    assert ctwl.cwl_equivalent(tt, c6)
    assert ctwl.cut_equivalent(tt, c6)
    assert ctwl.isomorphism(tt, c6) is None
    assert sorted(len(c) for c in ctwl.components(tt, 0)) == [3, 3]
    assert ctwl.match_components(tt, c6, 0)[0]

    g = ctwl.generate(seed=7, max_nodes=5, events=4, dim=2)
    assert ctwl.Cdg.from_jsonl(g.to_jsonl()) == g
    names = g.universe()
    h = g.relabel(dict(zip(names, reversed(names))))
    assert ctwl.isomorphism(g, h) is not None
    colors = ctwl.cwl([g, h])
    assert len(colors) == 2 and len(colors[0]["n0"]) == len(g.timestamps())
    tree = json.loads(ctwl.unfolding_tree(g, names[0], 0, 2))
    assert tree is None or "attr" in tree

    model = ctwl.Model(g.dim, 2, max(len(g.timestamps()) - 1, 1), "shared-dt", hidden=4)
    params = model.init_params(0)
    assert len(params) == model.param_count
    out = model.forward(params, g)
    assert len(out) == len(g.timestamps())
    assert model.gradient_check(params, [g]) <= 1e-4

    report = json.loads(ctwl.run_experiment("cut-cwl", json.dumps({"pairs": 20})))
    assert report["pass"], report["aggregate"]
    print("python smoke test passed")


if __name__ == "__main__":
    main()
