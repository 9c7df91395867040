"""Event-sourced store: persistence, lineage, sessions, audit, replay."""

import itertools
import json

import numpy as np
import pytest

import oracles
from neuroforge.ann import (
    Connection,
    MoveNeuron,
    Neuron,
    NetworkPhenotype,
    RemoveConnection,
    SetWeight,
)
from neuroforge.compiler import (
    AnnotatedNetwork,
    MirrorX,
    anet_to_json,
    compile_network,
    expand_annotations,
)
from neuroforge.cppn import Cppn, CppnConnection, cppn_to_json
from neuroforge.seeds import seed_brain
from neuroforge.store import (
    SESSION_GRID,
    StoreError,
    WorkbenchStore,
    brain_record_from_data,
    brain_record_to_data,
    session_to_data,
)


def make_store(tmp_path, name="events"):
    counter = itertools.count(1_700_000_000)
    return WorkbenchStore(root=tmp_path / name, clock=lambda: next(counter))


def straight_brain(turn_weight=None):
    """Minimal 9-in/2-out controller; optional constant turn."""
    ins = tuple(Neuron(f"i{k}", "input", -0.8 + 0.2 * k, -0.8) for k in range(9))
    rest = (
        Neuron("bias", "bias", 0.0, -0.95),
        Neuron("out_turn", "output", -0.2, 0.8),
        Neuron("out_speed", "output", 0.2, 0.8),
    )
    conns = []
    if turn_weight is not None:
        conns.append(Connection("bias", "out_turn", turn_weight))
    return AnnotatedNetwork(
        NetworkPhenotype(
            ins + rest,
            tuple(conns),
            tuple(n.id for n in ins),
            ("out_turn", "out_speed"),
        ),
        (),
    )


@pytest.fixture()
def store(tmp_path):
    return make_store(tmp_path)


class TestSaveBrain:
    def test_save_then_get_round_trips(self, store):
        rec = store.save_brain("ada", "open", seed_brain())
        assert store.get_brain(rec.id) == rec
        assert rec.id == "b000001"
        assert rec.best_fitness is None
        assert rec.report is not None

    def test_ids_are_sequential(self, store):
        a = store.save_brain("ada", "open", seed_brain())
        b = store.save_brain("bob", "easy", straight_brain())
        assert (a.id, b.id) == ("b000001", "b000002")

    def test_blank_author_rejected(self, store):
        with pytest.raises(StoreError) as err:
            store.save_brain("  ", "open", seed_brain())
        assert err.value.code == "invalid"

    def test_unknown_maze_rejected(self, store):
        with pytest.raises(StoreError) as err:
            store.save_brain("ada", "labyrinth", seed_brain())
        assert err.value.code == "not_found"

    def test_dangling_parent_rejected(self, store):
        with pytest.raises(StoreError) as err:
            store.save_brain("ada", "open", seed_brain(), parent_id="b999999")
        assert err.value.code == "invalid"

    def test_submitted_genotype_accepted_when_consistent(self, store):
        anet = seed_brain()
        cppn, report = compile_network(anet)
        rec = store.save_brain("ada", "open", anet, cppn=cppn, report=report)
        assert cppn_to_json(rec.cppn) == cppn_to_json(cppn)

    def test_perturbed_genotype_rejected_as_round_trip(self, store):
        anet = seed_brain()
        cppn, report = compile_network(anet)
        target = next(c for c in cppn.connections if c.tag == "orbit_weight")
        broken = Cppn(
            cppn.nodes,
            tuple(
                CppnConnection(c.src, c.dst, c.weight + 0.5, c.tag)
                if c.key == target.key
                else c
                for c in cppn.connections
            ),
        )
        with pytest.raises(StoreError) as err:
            store.save_brain("ada", "open", anet, cppn=broken)
        assert err.value.code == "round_trip"

    def test_wrong_interface_arity_rejected(self, store):
        bad = AnnotatedNetwork(
            NetworkPhenotype(
                (
                    Neuron("a", "input", -0.5, -0.5),
                    Neuron("z", "output", 0.5, 0.5),
                ),
                (),
                ("a",),
                ("z",),
            ),
            (),
        )
        with pytest.raises(StoreError) as err:
            store.save_brain("ada", "open", bad)
        assert err.value.code == "invalid"
        assert "9" in err.value.message

    def test_report_without_genotype_rejected(self, store):
        anet = seed_brain()
        _, report = compile_network(anet)
        with pytest.raises(StoreError):
            store.save_brain("ada", "open", anet, report=report)


class TestForkAndAncestry:
    def test_fork_sets_parent_and_resets_score(self, store):
        a = store.save_brain("ada", "open", seed_brain())
        store.evaluate_brain(a.id)
        fork = store.fork_brain(a.id, "bob")
        assert fork.parent_id == a.id
        assert fork.author == "bob"
        assert fork.best_fitness is None
        assert store.get_brain(a.id).best_fitness is not None

    def test_fork_preserves_anet_byte_for_byte(self, store):
        a = store.save_brain("ada", "open", seed_brain())
        fork = store.fork_brain(a.id, "bob")
        assert anet_to_json(fork.anet) == anet_to_json(a.anet)
        assert cppn_to_json(fork.cppn) == cppn_to_json(a.cppn)

    def test_fork_chain_ancestry(self, store):
        a = store.save_brain("ada", "open", seed_brain())
        b = store.fork_brain(a.id, "bob")
        c = store.fork_brain(b.id, "cyd")
        assert store.ancestry(c.id) == (b.id, a.id)
        assert store.ancestry(a.id) == ()

    def test_fork_unknown_id(self, store):
        with pytest.raises(StoreError) as err:
            store.fork_brain("b999999", "bob")
        assert err.value.code == "not_found"


class TestEvaluateBrain:
    def test_twice_is_identical(self, store):
        rec = store.save_brain("ada", "open", seed_brain())
        first = store.evaluate_brain(rec.id)
        second = store.evaluate_brain(rec.id)
        assert first == second

    def test_best_fitness_is_max_update(self, store):
        rec = store.save_brain("ada", "open", seed_brain())
        result = store.evaluate_brain(rec.id)
        assert store.get_brain(rec.id).best_fitness == result.fitness
        store.evaluate_brain(rec.id)
        assert store.get_brain(rec.id).best_fitness == result.fitness

    def test_full_trajectory_returned(self, store):
        rec = store.save_brain("ada", "open", seed_brain())
        result = store.evaluate_brain(rec.id)
        assert len(result.trajectory) == result.steps_used
        assert result.goal_reached


class TestLeaderboard:
    def test_ordering_matches_reference_sort(self, store):
        ids = [
            store.save_brain("ada", "open", seed_brain()).id,
            store.save_brain("bob", "open", straight_brain()).id,
            store.save_brain("cyd", "open", straight_brain(3.0)).id,
        ]
        for bid in ids:
            store.evaluate_brain(bid)
        rows = store.leaderboard("open")
        recs = [store.get_brain(b) for b in ids]
        want = oracles.leaderboard_order(
            [(r.id, r.author, r.best_fitness, r.created_at) for r in recs]
        )
        assert [r.brain_id for r in rows] == want
        fits = [r.best_fitness for r in rows]
        assert fits == sorted(fits, reverse=True)

    def test_tie_broken_by_earlier_created_at(self, store):
        a = store.save_brain("ada", "open", seed_brain())
        b = store.save_brain("bob", "open", seed_brain())
        store.evaluate_brain(b.id)
        store.evaluate_brain(a.id)
        rows = store.leaderboard("open")
        assert [r.brain_id for r in rows] == [a.id, b.id]

    def test_limit_and_unevaluated_exclusion(self, store):
        evaluated = [
            store.save_brain("ada", "open", seed_brain()).id,
            store.save_brain("bob", "open", straight_brain()).id,
        ]
        store.save_brain("cyd", "open", straight_brain(1.0))  # never evaluated
        for bid in evaluated:
            store.evaluate_brain(bid)
        assert len(store.leaderboard("open")) == 2
        assert len(store.leaderboard("open", limit=1)) == 1

    def test_unknown_maze_rejected(self, store):
        with pytest.raises(StoreError):
            store.leaderboard("labyrinth")


class TestApplyEdit:
    def test_set_weight_updates_record_and_resets_score(self, store):
        rec = store.save_brain("ada", "open", seed_brain())
        store.evaluate_brain(rec.id)
        out = store.apply_edit_to_brain(rec.id, SetWeight("rf_0", "h_clear", 2.0))
        assert out.best_fitness is None
        assert out.anet.phenotype.connection("rf_0", "h_clear").weight == 2.0
        assert store.audit() == []

    def test_edit_prunes_touched_annotation_only(self, store):
        rec = store.save_brain("ada", "open", seed_brain())
        assert len(rec.anet.annotations) == 2
        out = store.apply_edit_to_brain(
            rec.id, RemoveConnection("rf_m45", "h_clear")
        )
        remaining = out.anet.annotations
        assert len(remaining) == 1
        keys = {k for ann in remaining for k in ann.members}
        assert ("rf_m45", "h_clear") not in keys
        assert ("rf_m90", "h_clear") in keys

    def test_move_neuron_keeps_round_trip(self, store):
        rec = store.save_brain("ada", "open", seed_brain())
        out = store.apply_edit_to_brain(rec.id, MoveNeuron("h_clear", 0.1, 0.15))
        moved = out.anet.phenotype.neuron("h_clear")
        assert (moved.x, moved.y) == (0.1, 0.15)
        assert store.audit() == []

    def test_invalid_edit_rejected_without_state_change(self, store):
        rec = store.save_brain("ada", "open", seed_brain())
        before = brain_record_to_data(store.get_brain(rec.id))
        with pytest.raises(StoreError) as err:
            store.apply_edit_to_brain(rec.id, SetWeight("rf_0", "ghost", 1.0))
        assert err.value.code == "invalid"
        assert brain_record_to_data(store.get_brain(rec.id)) == before

    def test_chained_edits_all_audit_clean(self, store):
        rec = store.save_brain("ada", "open", seed_brain())
        store.apply_edit_to_brain(rec.id, SetWeight("h_clear", "out_speed", 1.2))
        store.apply_edit_to_brain(rec.id, RemoveConnection("radar_back", "out_turn"))
        store.apply_edit_to_brain(rec.id, MoveNeuron("h_clear", -0.1, 0.05))
        assert store.audit() == []
        store.evaluate_brain(rec.id)
        assert store.audit() == []


class TestSessions:
    def test_create_session_grid_of_nine(self, store):
        rec = store.save_brain("ada", "open", seed_brain())
        sess = store.create_session(rec.id, "interactive", seed=5)
        assert sess.id == "s0001"
        assert len(sess.candidates) == SESSION_GRID
        assert sess.candidates[0].id == "c0_000"
        assert cppn_to_json(sess.candidates[0].genome) == cppn_to_json(rec.cppn)
        assert all(c.eval is not None for c in sess.candidates)
        assert sess.mode == "interactive" and sess.seed == 5 and sess.step == 0

    def test_same_seed_same_candidates(self, store):
        rec = store.save_brain("ada", "open", seed_brain())
        s1 = store.create_session(rec.id, "interactive", seed=5)
        s2 = store.create_session(rec.id, "interactive", seed=5)
        assert s1.id != s2.id
        assert [cppn_to_json(c.genome) for c in s1.candidates] == [
            cppn_to_json(c.genome) for c in s2.candidates
        ]

    def test_invalid_mode_rejected(self, store):
        rec = store.save_brain("ada", "open", seed_brain())
        with pytest.raises(StoreError):
            store.create_session(rec.id, "objective")

    def test_breed_interactive_parents_subset_of_selections(self, store):
        rec = store.save_brain("ada", "open", seed_brain())
        sess = store.create_session(rec.id, "interactive", seed=5)
        chosen = [sess.candidates[2].id, sess.candidates[6].id]
        out = store.breed(sess.id, chosen)
        assert out.step == 1
        assert len(out.candidates) == SESSION_GRID
        assert [c.id for c in out.candidates[:2]] == chosen
        for cand in out.candidates[2:]:
            assert cand.parent_id in chosen
            assert cand.id.startswith("c1_")
            assert cand.eval is not None

    def test_breed_mixed_single_selection(self, store):
        rec = store.save_brain("ada", "open", seed_brain())
        sess = store.create_session(rec.id, "mixed", seed=7)
        pick = sess.candidates[3].id
        out = store.breed(sess.id, [pick])
        parent_pool = {c.parent_id for c in out.candidates if c.parent_id}
        assert pick in parent_pool or pick in {c.id for c in out.candidates}
        assert len(parent_pool) > 1  # novelty fill adds more parents

    def test_breed_empty_selection_rejected(self, store):
        rec = store.save_brain("ada", "open", seed_brain())
        sess = store.create_session(rec.id, "interactive")
        with pytest.raises(StoreError) as err:
            store.breed(sess.id, [])
        assert err.value.code == "invalid"

    def test_breed_unknown_session(self, store):
        with pytest.raises(StoreError) as err:
            store.breed("s9999", ["c0_000"])
        assert err.value.code == "not_found"

    def test_mode_override_per_breed(self, store):
        rec = store.save_brain("ada", "open", seed_brain())
        sess = store.create_session(rec.id, "interactive", seed=9)
        out = store.breed(sess.id, [sess.candidates[0].id], mode="mixed")
        assert out.step == 1


class TestReplayAndAudit:
    def build_activity(self, store):
        a = store.save_brain("ada", "open", seed_brain())
        b = store.save_brain("bob", "easy", straight_brain())
        store.evaluate_brain(a.id)
        store.evaluate_brain(b.id)
        f = store.fork_brain(a.id, "cyd")
        store.apply_edit_to_brain(f.id, SetWeight("rf_0", "h_clear", 1.5))
        store.evaluate_brain(f.id)
        sess = store.create_session(a.id, "interactive", seed=3)
        store.breed(sess.id, [sess.candidates[1].id, sess.candidates[4].id])
        store.breed(sess.id, [store.get_session(sess.id).candidates[0].id])
        return store

    def test_event_log_replay_reproduces_snapshot(self, tmp_path):
        store = self.build_activity(make_store(tmp_path))
        reopened = WorkbenchStore(root=store.root)
        assert reopened.snapshot() == store.snapshot()

    def test_replayed_store_continues_identically(self, tmp_path):
        store = self.build_activity(make_store(tmp_path))
        sess_id = "s0001"
        reopened = WorkbenchStore(root=store.root)
        live = store.breed(sess_id, [store.get_session(sess_id).candidates[2].id])
        replayed = reopened.breed(
            sess_id, [reopened.get_session(sess_id).candidates[2].id]
        )
        assert session_to_data(live) == session_to_data(replayed)

    def test_events_are_monotone_and_append_only(self, tmp_path):
        store = self.build_activity(make_store(tmp_path))
        events = store.events()
        assert [e["seq"] for e in events] == list(range(1, len(events) + 1))
        lines = (store.root / "events.jsonl").read_text().splitlines()
        assert len(lines) == len(events)
        for line, event in zip(lines, events):
            assert json.loads(line) == event

    def test_audit_clean_after_activity(self, tmp_path):
        store = self.build_activity(make_store(tmp_path))
        assert store.audit() == []

    def test_audit_flags_corrupted_best_fitness(self, tmp_path):
        store = self.build_activity(make_store(tmp_path))
        bid = store.brain_ids()[0]
        rec = store.get_brain(bid)
        object.__setattr__(rec, "best_fitness", 1.999)
        problems = store.audit()
        assert any("best_fitness" in p for p in problems)

    def test_random_operation_soak(self, tmp_path):
        store = make_store(tmp_path, "soak")
        rng = np.random.default_rng(0)
        brains = []
        for op in range(40):
            roll = rng.random()
            if roll < 0.3 or not brains:
                anet = seed_brain() if rng.random() < 0.5 else straight_brain(
                    float(rng.uniform(-2, 2))
                )
                maze = ("open", "easy", "hard")[int(rng.integers(0, 3))]
                brains.append(store.save_brain(f"u{op}", maze, anet).id)
            elif roll < 0.5:
                brains.append(
                    store.fork_brain(
                        brains[int(rng.integers(0, len(brains)))], f"u{op}"
                    ).id
                )
            elif roll < 0.8:
                store.evaluate_brain(brains[int(rng.integers(0, len(brains)))])
            else:
                bid = brains[int(rng.integers(0, len(brains)))]
                rec = store.get_brain(bid)
                conns = rec.anet.phenotype.connections
                if conns:
                    c = conns[int(rng.integers(0, len(conns)))]
                    store.apply_edit_to_brain(
                        bid, SetWeight(c.src, c.dst, float(rng.uniform(0.05, 3.0)))
                    )
        assert store.audit() == []
        reopened = WorkbenchStore(root=store.root)
        assert reopened.snapshot() == store.snapshot()


class TestSerializationHelpers:
    def test_brain_record_round_trip(self, store):
        rec = store.save_brain("ada", "open", seed_brain())
        data = brain_record_to_data(rec)
        assert brain_record_from_data(data) == rec

    def test_store_error_shape(self):
        err = StoreError("invalid", "bad thing", detail="extra")
        assert (err.code, err.message, err.detail) == ("invalid", "bad thing", "extra")
