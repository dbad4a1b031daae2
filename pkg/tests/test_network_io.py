import json
import warnings

import numpy as np
import pytest

from edgedelete import (
    BayesianNetwork,
    Evidence,
    NetworkError,
    NormalizationWarning,
    parse_network,
    serialize_network,
)
from edgedelete.generate import random_network
from edgedelete.io import load_evidence, load_network, parse_bif, save_network


def doc(**overrides):
    d = {
        "name": "tiny",
        "variables": [{"name": "Y", "states": ["y", "ny"]}, {"name": "X", "states": ["x", "nx"]}],
        "cpts": [
            {"child": "Y", "parents": [], "table": [0.9, 0.1]},
            {"child": "X", "parents": ["Y"], "table": [0.9, 0.1, 0.2, 0.8]},
        ],
    }
    d.update(overrides)
    return d


def test_parse_two_variable_file():
    net = parse_network(json.dumps(doc()))
    assert net.n == 2
    assert net.edges() == [(0, 1)]
    assert [v.name for v in net.variables] == ["Y", "X"]
    np.testing.assert_array_equal(net.cpts[1].table, [[0.9, 0.1], [0.2, 0.8]])


def test_row_sum_violation():
    d = doc()
    d["cpts"][1]["table"] = [0.7, 0.1, 0.2, 0.8]
    with pytest.raises(NetworkError, match="not normalized"):
        parse_network(json.dumps(d))


def test_small_drift_is_renormalized_with_warning():
    d = doc()
    d["cpts"][0]["table"] = [0.9 + 5e-7, 0.1]
    with pytest.warns(NormalizationWarning):
        net = parse_network(json.dumps(d))
    assert net.cpts[0].table.sum() == pytest.approx(1.0, abs=1e-15)


def test_drift_below_tolerance_is_silent():
    d = doc()
    d["cpts"][0]["table"] = [0.9 + 1e-12, 0.1]
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        parse_network(json.dumps(d))


def test_cycle_rejected():
    d = doc()
    d["cpts"][0] = {"child": "Y", "parents": ["X"], "table": [0.5, 0.5, 0.5, 0.5]}
    with pytest.raises(NetworkError, match="cycle"):
        parse_network(json.dumps(d))


def test_unknown_parent_and_length_mismatch():
    d = doc()
    d["cpts"][1]["parents"] = ["Q"]
    with pytest.raises(NetworkError, match="unknown parent"):
        parse_network(json.dumps(d))
    d = doc()
    d["cpts"][1]["table"] = [0.5, 0.5]
    with pytest.raises(NetworkError, match="entries"):
        parse_network(json.dumps(d))


def test_syntax_error_reports_position():
    with pytest.raises(NetworkError, match=r"line 2 column"):
        parse_network('{"name": "x",\n "variables": [}')


def test_round_trip_is_bit_exact(rng):
    for _ in range(20):
        net = random_network(rng, int(rng.integers(2, 8)))
        again = parse_network(serialize_network(net))
        assert again.same_structure(net)
        for a, b in zip(net.cpts, again.cpts):
            assert a.scope == b.scope
            assert np.array_equal(a.table, b.table)


def test_file_helpers(tmp_path, chain):
    path = tmp_path / "chain.json"
    save_network(chain, path)
    net = load_network(path)
    (tmp_path / "e.json").write_text('{"C": "c1", "A": 0}')
    assert load_evidence(tmp_path / "e.json", net) == Evidence({2: 1, 0: 0})


def test_evidence_validation(chain):
    with pytest.raises(NetworkError):
        Evidence({0: 5}).validate(chain)
    with pytest.raises(NetworkError):
        chain.evidence({"A": "nope"})


def test_variable_invariants():
    with pytest.raises(NetworkError):
        parse_network(json.dumps(doc(variables=[{"name": "Y", "states": ["a", "a"]},
                                                {"name": "X", "states": ["x", "nx"]}])))
    with pytest.raises(NetworkError):
        BayesianNetwork((), (), (), "empty").index("A")


BIF = """
network unknown {
}
variable A {
  type discrete [ 2 ] { yes, no };
  property weight = 1 ;
}
variable B {
  type discrete [ 3 ] { lo, mid, hi };
}
probability ( A ) {
  table 0.25, 0.75;
}
probability ( B | A ) {
  (yes) 0.1, 0.2, 0.7;
  (no) 0.3, 0.3, 0.4;
}
"""


def test_bif_subset():
    net = parse_bif(BIF)
    assert net.variables[1].states == ("lo", "mid", "hi")
    assert net.parents == ((), (0,))
    np.testing.assert_allclose(net.cpts[1].table, [[0.1, 0.2, 0.7], [0.3, 0.3, 0.4]])


def test_bif_unsupported_constructs_are_named():
    bad = BIF.replace("(no) 0.3, 0.3, 0.4;", "default 0.3, 0.3, 0.4;")
    with pytest.raises(NetworkError, match="'default'"):
        parse_bif(bad)
    bad = BIF.replace("type discrete [ 2 ] { yes, no };", "type continuous;")
    with pytest.raises(NetworkError, match="type continuous"):
        parse_bif(bad)
    bad = BIF.replace("(yes) 0.1, 0.2, 0.7;\n  (no) 0.3, 0.3, 0.4;", "table 0.1, 0.2, 0.7, 0.3, 0.3, 0.4;")
    with pytest.raises(NetworkError, match="'table' with parents"):
        parse_bif(bad)
