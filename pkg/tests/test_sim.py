import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from approxcgp.cgp import CgpParams, Genome, decode
from approxcgp.generators import gen_exact_multiplier
from approxcgp.sim import (MAX_INPUTS, ResourceGuardError, TruthTables, as_function,
                           simulate_all, simulate_naive)

from .conftest import random_genome


def and_gate() -> Genome:
    return Genome(CgpParams(2, 1, 1, 1), [0, 1, 2, 2])


def test_naive_and_gate():
    net = decode(and_gate())
    assert simulate_naive(net, [1, 1]) == [1]
    assert simulate_naive(net, [1, 0]) == [0]


def test_table_of_and_gate():
    tt = simulate_all(and_gate())
    assert list(tt.bits(0)) == [0, 0, 0, 1]


def test_table_of_inverter():
    tt = simulate_all(Genome(CgpParams(1, 1, 1, 1), [0, 0, 1, 1]))
    assert list(tt.bits(0)) == [1, 0]


def test_exact_4bit_on_5_times_7():
    net = decode(gen_exact_multiplier(4))
    x, y = 5, 7
    vec = [(x >> b) & 1 for b in range(4)] + [(y >> b) & 1 for b in range(4)]
    out = simulate_naive(net, vec)
    assert sum(bit << k for k, bit in enumerate(out)) == 35


def test_signed_8bit_random_vectors():
    tt = simulate_all(gen_exact_multiplier(8, "signed"))
    vals = tt.values(signed=True)
    rng = np.random.default_rng(0)
    for k in rng.integers(0, 1 << 16, 1000):
        i, j = int(k) & 0xFF, int(k) >> 8
        i -= 256 if i >= 128 else 0
        j -= 256 if j >= 128 else 0
        assert vals[k] == i * j


def test_signed_corners():
    M = as_function(simulate_all(gen_exact_multiplier(8, "signed")), "signed")
    assert M[0, 0] == 16384           # (-128) * (-128)
    assert np.all(M[128, :] == 0)     # i = 0


def test_resource_guard():
    big = Genome(CgpParams(MAX_INPUTS + 1, 1, 1, 1), [0, 1, 2, 0])
    with pytest.raises(ResourceGuardError):
        simulate_all(big)


def test_workers_do_not_change_tables():
    g = gen_exact_multiplier(8)
    assert simulate_all(g, workers=1) == simulate_all(g, workers=4)


def test_bytes_round_trip():
    tt = simulate_all(gen_exact_multiplier(3))
    back = TruthTables.from_bytes(tt.to_bytes(), tt.n_i, tt.n_o)
    assert back == tt


def test_csv_export(tmp_path):
    tt = simulate_all(and_gate())
    tt.to_csv(tmp_path / "t.csv")
    rows = (tmp_path / "t.csv").read_text().splitlines()
    assert rows == ["k,out_value", "0,0", "1,0", "2,0", "3,1"]


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 8), st.integers(1, 4),
       st.integers(1, 3), st.integers(1, 10))
def test_bit_parallel_matches_naive(seed, n_i, n_o, r, c):
    g = random_genome(np.random.default_rng(seed), n_i, n_o, r, c)
    net = decode(g)
    tt = simulate_all(g)
    for k in range(1 << n_i):
        vec = [(k >> b) & 1 for b in range(n_i)]
        assert simulate_naive(net, vec) == [tt.bit(o, k) for o in range(n_o)]
    # a netlist goes through the same path
    assert simulate_all(net) == tt
