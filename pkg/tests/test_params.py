import math

import pytest

from hamquery import ParameterError, ParamSet
from hamquery.params import DERIVED


def test_defaults_follow_formulas():
    n = 10**6
    p = ParamSet(n)
    ln = math.log(n)
    assert p.q == pytest.approx(ln ** -0.5)
    assert p.k_interval == math.floor(n * ln ** -0.45)
    assert p.p_cap == pytest.approx(10 * ln / n)
    assert p.threshold_p() == pytest.approx((ln + math.log(ln) + 10) / n)


def test_overrides_and_updates():
    p = ParamSet(1000).with_updates(q=0.3, block_size=7)
    assert p.q == 0.3 and p.block_size == 7
    assert ParamSet(1000).block_size == 100
    with pytest.raises(ParameterError):
        p.with_updates(bogus=1)
    with pytest.raises(ParameterError):
        ParamSet(1000, overrides={"not_derived": 1})


def test_from_mapping_coerces_strings():
    p = ParamSet.from_mapping(500, {"lazy_ports": "true", "block_size": "12",
                                    "k_factor": "0.5", "connect_mode": "giant",
                                    "q_prime": "0.75"})
    assert p.lazy_ports is True and p.block_size == 12 and p.k_factor == 0.5
    assert p.connect_mode == "giant" and p.q_prime == 0.75
    with pytest.raises(ParameterError):
        ParamSet.from_mapping(500, {"lazy_ports": "maybe"})
    with pytest.raises(ParameterError):
        ParamSet.from_mapping(500, {"nope": "1"})


def test_summary_lists_derived():
    s = ParamSet(100).summary()
    assert set(DERIVED) <= set(s)


@pytest.mark.parametrize("n", [0, -3, 2.5])
def test_bad_n(n):
    with pytest.raises(ParameterError):
        ParamSet(n)
