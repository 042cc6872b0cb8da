import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from approxcgp.cgp import (CgpParams, Genome, GenomeLengthError, InvalidGenomeError, area,
                           decode, gate_counts, genome_size, validate)
from approxcgp.gates import GateFn, GateSet
from approxcgp.generators import gen_exact_multiplier

from .conftest import random_genome

FIG1_GATES = GateSet([GateFn(0, "xor", 2, 2.2), GateFn(1, "and", 2, 1.4),
                      GateFn(2, "or", 2, 1.4), GateFn(3, "nor", 2, 1.0),
                      GateFn(4, "not_1", 1, 0.6)])


def fig1_genome() -> Genome:
    # 5 inputs (0..4), 3x4 grid (addresses 5..16, column-major), 2 outputs.
    # Nodes 9, 13, 15 and 16 are left unreferenced.
    p = CgpParams(5, 2, 3, 4, 2, FIG1_GATES)
    nodes = [
        (0, 1, 1), (2, 3, 0), (3, 4, 2),      # 5, 6, 7
        (5, 6, 3), (1, 2, 1), (5, 7, 0),      # 8, 9, 10
        (8, 6, 2), (7, 10, 1), (0, 4, 4),     # 11, 12, 13
        (11, 10, 0), (12, 9, 3), (13, 4, 2),  # 14, 15, 16
    ]
    genes = [g for nd in nodes for g in nd] + [14, 12]
    return Genome(p, genes)


@pytest.mark.parametrize("args,size", [((5, 2, 3, 4), 38), ((16, 16, 1, 320), 976),
                                       ((1, 1, 1, 1), 4)])
def test_genome_size(args, size):
    assert genome_size(CgpParams(*args)) == size


def test_length_mismatch_rejected():
    with pytest.raises(GenomeLengthError):
        Genome(CgpParams(2, 1, 1, 1), [0, 1, 2])


def test_validate_flags_output_out_of_range():
    g = fig1_genome()
    genes = g.genes.copy()
    genes[-1] = 5 + 12
    assert validate(Genome(g.params, genes)) == [g.params.size - 1]


def test_validate_flags_self_reference():
    g = fig1_genome()
    genes = g.genes.copy()
    genes[3 * 3] = 8  # node at address 8 reading itself
    bad = validate(Genome(g.params, genes))
    assert bad == [9]
    with pytest.raises(InvalidGenomeError):
        decode(Genome(g.params, genes))


def test_fig1_active_count():
    net = decode(fig1_genome())
    assert net.active_count == 8
    assert sorted(gt.address for gt in net.gates) == [5, 6, 7, 8, 10, 11, 12, 14]


def test_pass_through_has_no_active_gates():
    p = CgpParams(3, 2, 1, 4)
    g = Genome(p, [0, 0, 2] * 4 + [2, 0])
    net = decode(g)
    assert net.active_count == 0
    assert area(net) == 0.0


def test_area_of_exact_2bit_multiplier_matches_hand_count():
    net = decode(gen_exact_multiplier(2))
    by_hand = sum(gt.fn.cost for gt in net.gates)
    assert area(net) == pytest.approx(by_hand, abs=1e-12)
    assert gate_counts(net).sum() == net.active_count


def test_bypassing_a_gate_reduces_area():
    g = gen_exact_multiplier(3)
    net = decode(g)
    base = area(net)
    two_input = [gt for gt in net.gates if gt.fn.arity == 2]
    for gt in two_input[:10]:
        # reroute every reader of this gate to its first fan-in
        genes = g.genes.copy()
        p = g.params
        for nd in range(p.n_nodes):
            for s in (0, 1):
                if genes[3 * nd + s] == gt.address:
                    genes[3 * nd + s] = gt.fanin[0]
        outs = genes[p.n_nodes * 3:]
        outs[outs == gt.address] = gt.fanin[0]
        assert area(decode(Genome(p, genes))) < base


def test_text_round_trip(tmp_path):
    g = fig1_genome()
    path = tmp_path / "fig1.cgp"
    g.save(path)
    back = Genome.load(path)
    assert back == g
    assert back.params.gamma == FIG1_GATES


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 6), st.integers(1, 4),
       st.integers(1, 3), st.integers(1, 8))
def test_decode_reencode_round_trip(seed, n_i, n_o, r, c):
    g = random_genome(np.random.default_rng(seed), n_i, n_o, r, c)
    assert validate(g) == []
    net = decode(g)
    again = decode(net.to_genome())
    assert again.compact() == net.compact()
    assert area(again) == area(net)
