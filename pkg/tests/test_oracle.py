import itertools

import numpy as np
import pytest

from edgedelete import Evidence, ImpossibleEvidenceError, ScaleGuardError, joint_enumerate, make_network
from edgedelete.generate import possible_evidence, random_network
from edgedelete.kl import appendix_b_network


def test_single_root():
    net = make_network([("A", ["a", "b"], [], [0.3, 0.7])])
    jp = joint_enumerate(net)
    np.testing.assert_allclose(jp.table, [0.3, 0.7])
    assert jp.pr_e == 1.0


def test_appendix_b_world_table():
    net, e = appendix_b_network(0.5, 1.0)
    jp = joint_enumerate(net, e)
    assert jp.pr_e == pytest.approx(1.0)
    # axes (Y, X, Z); worlds xyz and ~x~yz carry 0.5 each
    assert jp.table[0, 0, 0] == pytest.approx(0.5)
    assert jp.table[1, 1, 0] == pytest.approx(0.5)
    assert jp.table.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.count_nonzero(jp.table) == 2


def test_impossible_evidence_is_distinct():
    net, _ = appendix_b_network(0.5, 1.0)
    with pytest.raises(ImpossibleEvidenceError):
        joint_enumerate(net, Evidence({2: 1}))


def test_scale_guard(chain):
    with pytest.raises(ScaleGuardError):
        joint_enumerate(chain, max_worlds=4)


def test_posterior_sums_to_one(rng):
    for _ in range(50):
        net = random_network(rng, int(rng.integers(2, 8)))
        jp = joint_enumerate(net, possible_evidence(net, rng))
        assert abs(jp.table.sum() - 1.0) < 1e-12


def test_matches_explicit_product(chain):
    jp = joint_enumerate(chain)
    for a, b, c in itertools.product(range(2), repeat=3):
        want = chain.cpts[0].table[a] * chain.cpts[1].table[a, b] * chain.cpts[2].table[b, c]
        assert jp.table[a, b, c] == pytest.approx(want)
