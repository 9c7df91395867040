"""Substrate decode: expression threshold, clamping, flooring, symmetry."""

import numpy as np
import pytest

import oracles
from conftest import random_annotated, random_phenotype
from neuroforge.ann import Connection, Neuron, NetworkPhenotype, validate
from neuroforge.compiler import AnnotatedNetwork, MirrorX, compile_network, expand_annotations
from neuroforge.cppn import (
    CppnConnection,
    MutationConfig,
    cppn_to_data,
    empty_cppn,
    mutate,
)
from neuroforge.cppn import Cppn
from neuroforge.decode import (
    DecodeConfig,
    Substrate,
    decode,
    pair_tuple,
    queryable_pairs,
    substrate_from_phenotype,
    validate_substrate,
)


def constant_cppn(value):
    base = empty_cppn()
    return Cppn(base.nodes, (CppnConnection("in4", "out0", value, "evolved"),))


def simple_substrate():
    return Substrate(
        (
            Neuron("a", "input", -0.5, -0.5),
            Neuron("b", "bias", 0.0, -0.9),
            Neuron("h", "hidden", 0.0, 0.0),
            Neuron("z", "output", 0.5, 0.5),
        ),
        ("a",),
        ("z",),
    )


class TestSubstrateFromPhenotype:
    def test_copies_neurons_and_ordering(self):
        net = random_phenotype(np.random.default_rng(0))
        sub = substrate_from_phenotype(net)
        assert sub.neurons == net.neurons
        assert sub.input_order == net.input_order
        assert sub.output_order == net.output_order

    def test_invariant_under_connection_edits(self):
        net = random_phenotype(np.random.default_rng(1))
        stripped = NetworkPhenotype(net.neurons, (), net.input_order, net.output_order)
        assert substrate_from_phenotype(net) == substrate_from_phenotype(stripped)

    def test_empty_hidden_phenotype(self):
        net = NetworkPhenotype(
            (Neuron("a", "input", -0.5, -0.5), Neuron("z", "output", 0.5, 0.5)),
            (),
            ("a",),
            ("z",),
        )
        sub = substrate_from_phenotype(net)
        assert {n.role for n in sub.neurons} == {"input", "output"}


class TestPairEnumeration:
    def test_pairs_cover_sources_times_destinations(self):
        sub = simple_substrate()
        pairs = queryable_pairs(sub)
        assert len(pairs) == 4 * 2  # all four roles query into hidden+output
        assert ("z", "h") in pairs and ("h", "h") in pairs
        assert all(dst in ("h", "z") for _, dst in pairs)

    def test_pair_tuple_reads_positions(self):
        sub = simple_substrate()
        assert pair_tuple(sub, "a", "z") == (-0.5, -0.5, 0.5, 0.5)

    def test_validate_substrate_catches_collisions(self):
        sub = Substrate(
            (Neuron("a", "input", 0.0, 0.0), Neuron("z", "output", 0.0, 0.02)),
            ("a",),
            ("z",),
        )
        assert validate_substrate(sub)


class TestDecode:
    def test_constant_zero_decodes_to_no_connections(self):
        net = decode(empty_cppn(), simple_substrate())
        assert net.connections == ()

    def test_constant_ten_fully_connects_at_cap(self):
        net = decode(constant_cppn(10.0), simple_substrate())
        assert len(net.connections) == 8
        assert all(c.weight == 3.0 for c in net.connections)

    def test_sub_threshold_not_expressed(self):
        net = decode(constant_cppn(0.009), simple_substrate())
        assert net.connections == ()

    def test_floor_band_raised_to_minimum_magnitude(self):
        for v in (0.02, -0.049, 0.011):
            net = decode(constant_cppn(v), simple_substrate())
            assert net.connections
            for c in net.connections:
                assert abs(c.weight) == 0.05
                assert (c.weight > 0) == (v > 0)

    def test_compile_round_trip_single_connection(self):
        net = NetworkPhenotype(
            (Neuron("a", "input", 0.0, -1.0), Neuron("out", "output", 0.0, 1.0)),
            (Connection("a", "out", 1.5),),
            ("a",),
            ("out",),
        )
        cppn, report = compile_network(AnnotatedNetwork(net, ()))
        decoded = decode(cppn, report.substrate)
        assert [c.key for c in decoded.connections] == [("a", "out")]
        assert decoded.connections[0].weight == pytest.approx(1.5, abs=1e-3)

    def test_decode_output_is_always_valid(self):
        rng = np.random.default_rng(33)
        cfg = MutationConfig(p_add_connection=0.5, p_add_node=0.3)
        g = constant_cppn(0.8)
        sub = substrate_from_phenotype(random_phenotype(rng))
        for _ in range(15):
            g = mutate(g, rng, cfg)
            assert validate(decode(g, sub)) == []

    def test_matches_reference_decoder(self):
        rng = np.random.default_rng(4)
        cfg = MutationConfig(p_add_connection=0.5, p_add_node=0.3)
        g = constant_cppn(0.8)
        for trial in range(6):
            g = mutate(g, rng, cfg)
            net = random_phenotype(rng)
            sub = substrate_from_phenotype(net)
            got = {c.key: c.weight for c in decode(g, sub).connections}
            want = oracles.naive_decode(
                cppn_to_data(g), [(n.id, n.role, n.x, n.y) for n in sub.neurons]
            )
            assert set(got) == set(want)
            for key in want:
                assert got[key] == pytest.approx(want[key], abs=1e-9)

    def test_mirror_compiled_decodes_symmetric(self):
        net = NetworkPhenotype(
            (
                Neuron("l", "input", -0.6, -0.8),
                Neuron("r", "input", 0.6, -0.8),
                Neuron("out", "output", 0.0, 0.8),
            ),
            (Connection("l", "out", 1.2), Connection("r", "out", 1.2)),
            ("l", "r"),
            ("out",),
        )
        anet = AnnotatedNetwork(net, (MirrorX((("l", "out"), ("r", "out")),),))
        cppn, report = compile_network(anet)
        decoded = decode(cppn, report.substrate)
        by_key = {c.key: c.weight for c in decoded.connections}
        assert by_key[("l", "out")] == pytest.approx(by_key[("r", "out")], abs=1e-6)

    def test_custom_config_threshold(self):
        sub = simple_substrate()
        cfg = DecodeConfig(eps_expr=0.5, w_cap=1.0)
        net = decode(constant_cppn(0.4), sub, cfg)
        assert net.connections == ()
        net = decode(constant_cppn(0.8), sub, cfg)
        assert all(c.weight == 0.8 for c in net.connections)

    @pytest.mark.parametrize("seed", range(5))
    def test_round_trip_preserves_expanded_connection_set(self, seed):
        anet = random_annotated(np.random.default_rng(50 + seed))
        cppn, report = compile_network(anet)
        expanded, _ = expand_annotations(anet)
        decoded = decode(cppn, report.substrate)
        assert {c.key for c in decoded.connections} == {
            c.key for c in expanded.connections
        }
