"""Event-sourced workbench store: brains, forks, evaluations, breeding sessions.

Every mutation is one appended JSONL event whose payload carries the computed
results (new genotype, evaluation, candidate set), so reloading a store is a
pure deserialization pass: no simulation or compilation reruns, and the
reconstructed state is exactly the live one.  All validation happens before
the append; applying a committed event cannot fail.
"""

from __future__ import annotations

import json
import math
import threading
import time
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .ann import (
    EditError,
    InvalidNetworkError,
    MoveNeuron,
    NetworkEdit,
    RemoveConnection,
    RemoveNeuron,
    SchemaError,
    SetWeight,
    apply_edit,
    edit_to_data,
)
from .compiler import (
    AnnotatedNetwork,
    AnnotationError,
    CompilationReport,
    CompileError,
    MirrorX,
    StaleReportError,
    anet_from_data,
    anet_to_data,
    compile_network,
    expand_annotations,
    recompile_edit,
    report_from_data,
    report_to_data,
    roundtrip_errors,
    validate_annotated,
    verify_report,
)
from .cppn import Cppn, CppnError, MutationConfig, cppn_from_data, cppn_to_data, mutate
from .decode import Substrate, decode, substrate_from_phenotype
from .evolve import (
    EvolutionConfig,
    EvolutionError,
    Individual,
    Interactive,
    MixedInteractiveNovelty,
    NoveltyArchive,
    evaluate_population,
    next_generation,
)
from .maze import (
    EvaluationResult,
    Maze,
    SimConfig,
    builtin_mazes,
    evaluation_from_data,
    evaluation_to_data,
)
from .maze import evaluate as evaluate_phenotype

SESSION_MODES = ("interactive", "mixed")
SESSION_GRID = 9


class StoreError(ValueError):
    """Structured failure: code drives the HTTP mapping, detail is optional."""

    def __init__(self, code: str, message: str, detail: Optional[str] = None):
        super().__init__(message)
        self.code = code
        self.message = message
        self.detail = detail


@dataclass(frozen=True)
class BrainRecord:
    id: str
    author: str
    parent_id: Optional[str]
    maze_id: str
    anet: AnnotatedNetwork
    cppn: Cppn
    report: Optional[CompilationReport]
    best_fitness: Optional[float]
    created_at: int


@dataclass(frozen=True)
class SessionState:
    id: str
    brain_id: str
    maze_id: str
    mode: str
    seed: int
    config: EvolutionConfig
    step: int
    substrate: Substrate
    candidates: tuple[Individual, ...]
    archive: NoveltyArchive


@dataclass(frozen=True)
class LeaderboardRow:
    brain_id: str
    author: str
    best_fitness: float


# -- serialization glue ------------------------------------------------------


def _substrate_to_data(sub: Substrate) -> dict:
    return {
        "neurons": [
            {"id": n.id, "role": n.role, "x": n.x, "y": n.y} for n in sub.neurons
        ],
        "input_order": list(sub.input_order),
        "output_order": list(sub.output_order),
    }


def _substrate_from_data(data: dict) -> Substrate:
    from .ann import Neuron

    return Substrate(
        tuple(
            Neuron(n["id"], n["role"], float(n["x"]), float(n["y"]))
            for n in data["neurons"]
        ),
        tuple(data["input_order"]),
        tuple(data["output_order"]),
    )


def _config_to_data(config: EvolutionConfig) -> dict:
    return {
        "pop_size": config.pop_size,
        "elitism": config.elitism,
        "truncation": config.truncation,
        "k_nearest": config.k_nearest,
        "seed": config.seed,
        "mutation": asdict(config.mutation),
    }


def _config_from_data(data: dict) -> EvolutionConfig:
    return EvolutionConfig(
        pop_size=int(data["pop_size"]),
        elitism=int(data["elitism"]),
        truncation=float(data["truncation"]),
        k_nearest=int(data["k_nearest"]),
        seed=int(data["seed"]),
        mutation=MutationConfig(**data["mutation"]),
    )


def _archive_to_data(archive: NoveltyArchive) -> dict:
    return {
        "points": [list(p) for p in archive.points],
        "add_threshold": archive.add_threshold,
        "stagnant": archive.stagnant,
    }


def _archive_from_data(data: dict) -> NoveltyArchive:
    return NoveltyArchive(
        tuple((float(x), float(y)) for x, y in data["points"]),
        float(data["add_threshold"]),
        int(data["stagnant"]),
    )


def individual_to_data(ind: Individual) -> dict:
    return {
        "id": ind.id,
        "parent_id": ind.parent_id,
        "genome": cppn_to_data(ind.genome),
        "report": report_to_data(ind.report) if ind.report is not None else None,
        "eval": evaluation_to_data(ind.eval) if ind.eval is not None else None,
    }


def individual_from_data(data: dict, substrate: Substrate) -> Individual:
    return Individual(
        id=data["id"],
        genome=cppn_from_data(data["genome"]),
        substrate=substrate,
        report=report_from_data(data["report"]) if data["report"] is not None else None,
        eval=evaluation_from_data(data["eval"]) if data["eval"] is not None else None,
        parent_id=data["parent_id"],
    )


def brain_record_to_data(rec: BrainRecord) -> dict:
    return {
        "id": rec.id,
        "author": rec.author,
        "parent_id": rec.parent_id,
        "maze_id": rec.maze_id,
        "anet": anet_to_data(rec.anet),
        "cppn": cppn_to_data(rec.cppn),
        "report": report_to_data(rec.report) if rec.report is not None else None,
        "best_fitness": rec.best_fitness,
        "created_at": rec.created_at,
    }


def brain_record_from_data(data: dict) -> BrainRecord:
    return BrainRecord(
        id=data["id"],
        author=data["author"],
        parent_id=data["parent_id"],
        maze_id=data["maze_id"],
        anet=anet_from_data(data["anet"]),
        cppn=cppn_from_data(data["cppn"]),
        report=report_from_data(data["report"]) if data["report"] is not None else None,
        best_fitness=data["best_fitness"],
        created_at=data["created_at"],
    )


def session_to_data(sess: SessionState) -> dict:
    return {
        "id": sess.id,
        "brain_id": sess.brain_id,
        "maze_id": sess.maze_id,
        "mode": sess.mode,
        "seed": sess.seed,
        "config": _config_to_data(sess.config),
        "step": sess.step,
        "substrate": _substrate_to_data(sess.substrate),
        "candidates": [individual_to_data(c) for c in sess.candidates],
        "archive": _archive_to_data(sess.archive),
    }


# -- annotation survival under edits -----------------------------------------


def _mirror_x(x: float) -> float:
    return 0.0 if x == 0.0 else -x


def _surviving_annotations(anet: AnnotatedNetwork, edit: NetworkEdit) -> tuple:
    """Drop every annotation whose orbit the edit touches.

    An edited connection or neuron breaks the regularity its orbit asserts
    (a removed member, a changed weight, or moved geometry), so the whole
    annotation is retired; the genotype keeps whatever sharing the surgery
    left in place, which stays value-consistent with singleton expansion.
    """
    target_key = None
    target_neuron = None
    if isinstance(edit, (RemoveConnection, SetWeight)):
        target_key = (edit.src, edit.dst)
    elif isinstance(edit, (MoveNeuron, RemoveNeuron)):
        target_neuron = edit.neuron_id
    else:
        return anet.annotations

    net = anet.phenotype
    pos = {(n.x, n.y): n.id for n in net.neurons}
    kept = []
    for annotation in anet.annotations:
        keys: set[tuple[str, str]] = set()
        nids: set[str] = set()
        for key in annotation.members:
            keys.add(key)
            nids.update(key)
            a = net.neuron(key[0])
            b = net.neuron(key[1])
            if isinstance(annotation, MirrorX):
                images = [((_mirror_x(a.x), a.y), (_mirror_x(b.x), b.y))]
            else:
                images = [
                    (
                        (a.x + k * annotation.dx, a.y + k * annotation.dy),
                        (b.x + k * annotation.dx, b.y + k * annotation.dy),
                    )
                    for k in range(1, annotation.count)
                ]
            for ps, pd in images:
                ms, md = pos.get(ps), pos.get(pd)
                if ms is not None:
                    nids.add(ms)
                if md is not None:
                    nids.add(md)
                if ms is not None and md is not None:
                    keys.add((ms, md))
        if target_key is not None and target_key in keys:
            continue
        if target_neuron is not None and target_neuron in nids:
            continue
        kept.append(annotation)
    return tuple(kept)


# -- the store ---------------------------------------------------------------


class WorkbenchStore:
    """Append-only store; in memory when no directory is given.

    All writes go through one lock and one `_commit`; `_apply_event` is the
    single state-transition function shared by live writes and replay.
    """

    def __init__(
        self,
        root: Optional[str] = None,
        clock: Optional[Callable[[], int]] = None,
        sim: SimConfig = SimConfig(),
    ):
        self._lock = threading.RLock()
        self._clock = clock if clock is not None else (lambda: int(time.time()))
        self._sim = sim
        self._mazes = builtin_mazes()
        self._brains: dict[str, BrainRecord] = {}
        self._brain_evals: dict[str, list[float]] = {}
        self._sessions: dict[str, SessionState] = {}
        self._events: list[dict] = []
        self._seq = 0
        self._brain_count = 0
        self._session_count = 0
        self._path: Optional[Path] = None
        if root is not None:
            rootp = Path(root)
            rootp.mkdir(parents=True, exist_ok=True)
            self._path = rootp / "events.jsonl"
            if self._path.exists():
                with open(self._path) as f:
                    for line in f:
                        line = line.strip()
                        if line:
                            self._apply_event(json.loads(line))

    # -- event machinery

    def _commit(self, kind: str, payload: dict, at: Optional[int] = None) -> dict:
        event = {
            "seq": self._seq + 1,
            "kind": kind,
            "at": self._clock() if at is None else at,
            "payload": payload,
        }
        if self._path is not None:
            with open(self._path, "a") as f:
                f.write(json.dumps(event, sort_keys=True, separators=(",", ":")))
                f.write("\n")
        self._apply_event(event)
        return event

    def _apply_event(self, event: dict) -> None:
        kind = event["kind"]
        payload = event["payload"]
        if kind == "brain-created":
            rec = brain_record_from_data(payload)
            self._brains[rec.id] = rec
            self._brain_evals[rec.id] = []
            self._brain_count += 1
        elif kind == "brain-edited":
            rec = self._brains[payload["brain_id"]]
            self._brains[rec.id] = replace(
                rec,
                anet=anet_from_data(payload["anet"]),
                cppn=cppn_from_data(payload["cppn"]),
                report=(
                    report_from_data(payload["report"])
                    if payload["report"] is not None
                    else None
                ),
                best_fitness=None,
            )
            self._brain_evals[rec.id] = []
        elif kind == "evaluation-recorded":
            rec = self._brains[payload["brain_id"]]
            result = evaluation_from_data(payload["result"])
            self._brain_evals[rec.id].append(result.fitness)
            self._brains[rec.id] = replace(rec, best_fitness=payload["best_fitness"])
        elif kind == "session-step":
            if payload["step"] == 0:
                substrate = _substrate_from_data(payload["substrate"])
                sess = SessionState(
                    id=payload["session_id"],
                    brain_id=payload["brain_id"],
                    maze_id=payload["maze_id"],
                    mode=payload["mode"],
                    seed=payload["seed"],
                    config=_config_from_data(payload["config"]),
                    step=0,
                    substrate=substrate,
                    candidates=tuple(
                        individual_from_data(c, substrate)
                        for c in payload["candidates"]
                    ),
                    archive=_archive_from_data(payload["archive"]),
                )
                self._sessions[sess.id] = sess
                self._session_count += 1
            else:
                sess = self._sessions[payload["session_id"]]
                self._sessions[sess.id] = replace(
                    sess,
                    step=payload["step"],
                    candidates=tuple(
                        individual_from_data(c, sess.substrate)
                        for c in payload["candidates"]
                    ),
                    archive=_archive_from_data(payload["archive"]),
                )
        else:
            raise StoreError("schema", f"unknown event kind {kind!r}")
        self._events.append(event)
        self._seq = event["seq"]

    # -- lookups

    def get_brain(self, brain_id: str) -> BrainRecord:
        with self._lock:
            rec = self._brains.get(brain_id)
            if rec is None:
                raise StoreError("not_found", f"no brain {brain_id!r}")
            return rec

    def get_session(self, session_id: str) -> SessionState:
        with self._lock:
            sess = self._sessions.get(session_id)
            if sess is None:
                raise StoreError("not_found", f"no session {session_id!r}")
            return sess

    def ancestry(self, brain_id: str) -> tuple[str, ...]:
        """Parent chain from the immediate parent up to the root founder."""
        with self._lock:
            rec = self.get_brain(brain_id)
            chain: list[str] = []
            seen = {brain_id}
            while rec.parent_id is not None:
                if rec.parent_id in seen:  # defensive; audit also checks this
                    raise StoreError("internal", f"ancestry cycle at {rec.parent_id!r}")
                seen.add(rec.parent_id)
                chain.append(rec.parent_id)
                rec = self.get_brain(rec.parent_id)
            return tuple(chain)

    def mazes(self) -> dict[str, Maze]:
        return dict(self._mazes)

    def maze(self, maze_id: str) -> Maze:
        m = self._mazes.get(maze_id)
        if m is None:
            raise StoreError("not_found", f"no maze {maze_id!r}")
        return m

    @property
    def root(self) -> Optional[Path]:
        """Directory holding the event log, or None for an in-memory store."""
        return self._path.parent if self._path is not None else None

    def events(self) -> list[dict]:
        with self._lock:
            return list(self._events)

    def brain_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._brains)

    # -- writes

    def save_brain(
        self,
        author: str,
        maze_id: str,
        anet: AnnotatedNetwork,
        cppn: Optional[Cppn] = None,
        report: Optional[CompilationReport] = None,
        parent_id: Optional[str] = None,
    ) -> BrainRecord:
        """Persist a brain after checking the genotype/phenotype contract.

        Without a submitted genotype the store compiles one.  With one, the
        decoded weights must match the expanded phenotype within 1e-3; a
        submitted report must describe the genotype exactly.
        """
        if not isinstance(author, str) or not author.strip():
            raise StoreError("invalid", "author must be a non-empty string")
        with self._lock:
            self.maze(maze_id)
            if parent_id is not None and parent_id not in self._brains:
                raise StoreError("invalid", f"parent {parent_id!r} does not exist")
            try:
                validate_annotated(anet)
                expanded, _ = expand_annotations(anet)
            except (AnnotationError, InvalidNetworkError, SchemaError) as e:
                raise StoreError("invalid", str(e))
            if len(expanded.input_order) != 9 or len(expanded.output_order) != 2:
                raise StoreError(
                    "invalid",
                    "expanded controller must expose 9 inputs and 2 outputs, got "
                    f"{len(expanded.input_order)}/{len(expanded.output_order)}",
                )
            if cppn is None:
                if report is not None:
                    raise StoreError(
                        "invalid", "a report without its genotype is meaningless"
                    )
                try:
                    cppn, report = compile_network(anet)
                except (AnnotationError, CompileError) as e:
                    raise StoreError("invalid", str(e))
            else:
                errs = roundtrip_errors(anet, cppn)
                if errs:
                    raise StoreError(
                        "round_trip",
                        "submitted genotype does not decode to the submitted "
                        "phenotype within 1e-3",
                        detail="; ".join(errs[:5]),
                    )
                if report is not None:
                    try:
                        verify_report(cppn, report)
                    except StaleReportError as e:
                        raise StoreError("invalid", f"stale report: {e}")
            now = self._clock()
            rec = BrainRecord(
                id=f"b{self._brain_count + 1:06d}",
                author=author.strip(),
                parent_id=parent_id,
                maze_id=maze_id,
                anet=anet,
                cppn=cppn,
                report=report,
                best_fitness=None,
                created_at=now,
            )
            self._commit("brain-created", brain_record_to_data(rec), at=now)
            return self._brains[rec.id]

    def fork_brain(self, brain_id: str, author: str) -> BrainRecord:
        if not isinstance(author, str) or not author.strip():
            raise StoreError("invalid", "author must be a non-empty string")
        with self._lock:
            rec = self.get_brain(brain_id)
            now = self._clock()
            fork = replace(
                rec,
                id=f"b{self._brain_count + 1:06d}",
                author=author.strip(),
                parent_id=rec.id,
                best_fitness=None,
                created_at=now,
            )
            self._commit("brain-created", brain_record_to_data(fork), at=now)
            return self._brains[fork.id]

    def _brain_substrate(self, rec: BrainRecord) -> Substrate:
        if rec.report is not None:
            return rec.report.substrate
        expanded, _ = expand_annotations(rec.anet)
        return substrate_from_phenotype(expanded)

    def evaluate_brain(self, brain_id: str) -> EvaluationResult:
        with self._lock:
            rec = self.get_brain(brain_id)
            maze = self.maze(rec.maze_id)
            net = decode(rec.cppn, self._brain_substrate(rec))
            result = evaluate_phenotype(net, maze, self._sim)
            best = (
                result.fitness
                if rec.best_fitness is None
                else max(rec.best_fitness, result.fitness)
            )
            self._commit(
                "evaluation-recorded",
                {
                    "brain_id": rec.id,
                    "maze_id": rec.maze_id,
                    "result": evaluation_to_data(result),
                    "best_fitness": best,
                },
            )
            return result

    def apply_edit_to_brain(self, brain_id: str, edit: NetworkEdit) -> BrainRecord:
        """Apply one phenotype edit and its genotype surgery atomically.

        A brain without a structured genotype report (an evolved import) is
        re-anchored first: its phenotype is recompiled so the surgery has a
        known structure to operate on.  Evaluations are reset because the
        controller changed.
        """
        with self._lock:
            rec = self.get_brain(brain_id)
            try:
                expanded, _ = expand_annotations(rec.anet)
            except AnnotationError as e:
                raise StoreError("invalid", str(e))
            if rec.report is not None:
                base_cppn, base_report = rec.cppn, rec.report
            else:
                base_cppn, base_report = compile_network(rec.anet)
            try:
                new_phenotype = apply_edit(expanded, edit)
                new_cppn, new_report = recompile_edit(base_cppn, base_report, edit)
            except (EditError, InvalidNetworkError, CompileError, StaleReportError) as e:
                raise StoreError("invalid", str(e))
            annotations = _surviving_annotations(
                AnnotatedNetwork(expanded, rec.anet.annotations), edit
            )
            new_anet = AnnotatedNetwork(new_phenotype, annotations)
            try:
                validate_annotated(new_anet)
            except AnnotationError as e:
                raise StoreError("internal", f"edit left annotations invalid: {e}")
            errs = roundtrip_errors(new_anet, new_cppn)
            if errs:
                raise StoreError(
                    "internal",
                    "edit broke the genotype/phenotype round-trip",
                    detail="; ".join(errs[:5]),
                )
            self._commit(
                "brain-edited",
                {
                    "brain_id": rec.id,
                    "edit": edit_to_data(edit),
                    "anet": anet_to_data(new_anet),
                    "cppn": cppn_to_data(new_cppn),
                    "report": report_to_data(new_report),
                },
            )
            return self._brains[rec.id]

    # -- sessions

    def create_session(
        self, brain_id: str, mode: str, seed: Optional[int] = None
    ) -> SessionState:
        """Start a breeding session: the brain's genome plus eight mutants."""
        if mode not in SESSION_MODES:
            raise StoreError(
                "invalid", f"mode must be one of {SESSION_MODES}, got {mode!r}"
            )
        with self._lock:
            rec = self.get_brain(brain_id)
            maze = self.maze(rec.maze_id)
            session_seed = int(seed) if seed is not None else self._seq + 1
            substrate = self._brain_substrate(rec)
            config = EvolutionConfig(pop_size=SESSION_GRID, seed=session_seed)
            founder = Individual(
                id="c0_000",
                genome=rec.cppn,
                substrate=substrate,
                report=rec.report,
            )
            pop = [founder]
            rng = np.random.Generator(
                np.random.PCG64(np.random.SeedSequence((session_seed, 0)))
            )
            streams = rng.spawn(config.pop_size - 1)
            for i in range(config.pop_size - 1):
                pop.append(
                    Individual(
                        id=f"c0_{i + 1:03d}",
                        genome=mutate(founder.genome, streams[i], config.mutation),
                        substrate=substrate,
                        parent_id=founder.id,
                    )
                )
            pop = evaluate_population(pop, maze, self._sim)
            archive = NoveltyArchive()
            session_id = f"s{self._session_count + 1:04d}"
            self._commit(
                "session-step",
                {
                    "session_id": session_id,
                    "step": 0,
                    "brain_id": rec.id,
                    "maze_id": rec.maze_id,
                    "mode": mode,
                    "seed": session_seed,
                    "config": _config_to_data(config),
                    "substrate": _substrate_to_data(substrate),
                    "candidates": [individual_to_data(c) for c in pop],
                    "archive": _archive_to_data(archive),
                },
            )
            return self._sessions[session_id]

    def breed(
        self,
        session_id: str,
        selections: list[str],
        mode: Optional[str] = None,
    ) -> SessionState:
        """One interactive generation; the step index seeds the rng stream."""
        with self._lock:
            sess = self.get_session(session_id)
            mode_name = sess.mode if mode is None else mode
            if mode_name not in SESSION_MODES:
                raise StoreError(
                    "invalid", f"mode must be one of {SESSION_MODES}, got {mode_name!r}"
                )
            selection = (
                Interactive(tuple(selections))
                if mode_name == "interactive"
                else MixedInteractiveNovelty(tuple(selections))
            )
            maze = self.maze(sess.maze_id)
            step = sess.step + 1
            rng = np.random.Generator(
                np.random.PCG64(np.random.SeedSequence((sess.seed, step)))
            )
            try:
                pop, archive = next_generation(
                    list(sess.candidates),
                    selection,
                    sess.archive,
                    sess.config,
                    rng,
                    id_prefix=f"c{step}",
                )
            except EvolutionError as e:
                raise StoreError("invalid", str(e))
            pop = evaluate_population(pop, maze, self._sim)
            self._commit(
                "session-step",
                {
                    "session_id": sess.id,
                    "step": step,
                    "mode": mode_name,
                    "selections": list(selections),
                    "candidates": [individual_to_data(c) for c in pop],
                    "archive": _archive_to_data(archive),
                },
            )
            return self._sessions[sess.id]

    # -- queries

    def leaderboard(self, maze_id: str, limit: int = 10) -> list[LeaderboardRow]:
        with self._lock:
            self.maze(maze_id)
            if limit < 0:
                raise StoreError("invalid", "limit must be non-negative")
            rows = [
                rec
                for rec in self._brains.values()
                if rec.maze_id == maze_id and rec.best_fitness is not None
            ]
            rows.sort(key=lambda r: (-r.best_fitness, r.created_at, r.id))
            return [
                LeaderboardRow(r.id, r.author, r.best_fitness) for r in rows[:limit]
            ]

    def audit(self) -> list[str]:
        """Re-verify every persisted invariant; empty list means consistent."""
        problems: list[str] = []
        with self._lock:
            for bid in sorted(self._brains):
                rec = self._brains[bid]
                try:
                    errs = roundtrip_errors(rec.anet, rec.cppn)
                except (ValueError, CppnError) as e:
                    errs = [f"round-trip check failed outright: {e}"]
                for e in errs:
                    problems.append(f"brain {bid}: {e}")
                if rec.report is not None:
                    try:
                        verify_report(rec.cppn, rec.report)
                    except StaleReportError as e:
                        problems.append(f"brain {bid}: stale report: {e}")
                if rec.parent_id is not None and rec.parent_id not in self._brains:
                    problems.append(f"brain {bid}: dangling parent {rec.parent_id!r}")
                seen = {bid}
                cursor = rec.parent_id
                while cursor is not None:
                    if cursor in seen:
                        problems.append(f"brain {bid}: ancestry cycle at {cursor!r}")
                        break
                    seen.add(cursor)
                    cursor = (
                        self._brains[cursor].parent_id
                        if cursor in self._brains
                        else None
                    )
                evals = self._brain_evals.get(bid, [])
                if rec.best_fitness is None:
                    if evals:
                        problems.append(
                            f"brain {bid}: evaluations recorded but no best fitness"
                        )
                elif not evals or not math.isclose(
                    rec.best_fitness, max(evals), rel_tol=0.0, abs_tol=0.0
                ):
                    problems.append(
                        f"brain {bid}: best_fitness {rec.best_fitness!r} does not "
                        f"match recorded evaluations"
                    )
            for sid in sorted(self._sessions):
                sess = self._sessions[sid]
                if len(sess.candidates) != sess.config.pop_size:
                    problems.append(
                        f"session {sid}: {len(sess.candidates)} candidates, "
                        f"expected {sess.config.pop_size}"
                    )
        return problems

    def snapshot(self) -> dict:
        """Canonical full-state dump for replay comparison."""
        with self._lock:
            return {
                "seq": self._seq,
                "brains": {
                    bid: brain_record_to_data(rec)
                    for bid, rec in sorted(self._brains.items())
                },
                "brain_evals": {k: list(v) for k, v in sorted(self._brain_evals.items())},
                "sessions": {
                    sid: session_to_data(sess)
                    for sid, sess in sorted(self._sessions.items())
                },
            }
