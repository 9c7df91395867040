"""Population management over evolvable genotypes.

Four ways to pick parents — direct human choice, objective fitness, behavioral
novelty, or human choice topped up with novelty — share one breeding loop.
Mutation randomness is split into one independent substream per offspring
slot, so a run is reproducible from its seed regardless of evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, TextIO, Union

import numpy as np

from .compiler import CompilationReport, compile_network
from .cppn import Cppn, MutationConfig, mutate
from .decode import DecodeConfig, Substrate, decode
from .maze import EvaluationResult, Maze, SimConfig
from .maze import evaluate as evaluate_phenotype


class EvolutionError(ValueError):
    pass


@dataclass(frozen=True)
class Individual:
    id: str
    genome: Cppn
    substrate: Substrate
    report: Optional[CompilationReport] = None
    eval: Optional[EvaluationResult] = None
    parent_id: Optional[str] = None


@dataclass(frozen=True)
class Interactive:
    selected: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "selected", tuple(self.selected))


@dataclass(frozen=True)
class Objective:
    pass


@dataclass(frozen=True)
class Novelty:
    pass


@dataclass(frozen=True)
class MixedInteractiveNovelty:
    selected: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "selected", tuple(self.selected))


SelectionMode = Union[Interactive, Objective, Novelty, MixedInteractiveNovelty]


@dataclass(frozen=True)
class NoveltyArchive:
    points: tuple[tuple[float, float], ...] = ()
    add_threshold: float = 0.05
    # consecutive generations with zero admissions, for threshold decay
    stagnant: int = 0

    def __post_init__(self):
        if self.add_threshold <= 0.0:
            raise EvolutionError("archive threshold must be positive")
        object.__setattr__(
            self, "points", tuple((float(x), float(y)) for x, y in self.points)
        )


@dataclass(frozen=True)
class EvolutionConfig:
    pop_size: int = 64
    elitism: int = 2
    truncation: float = 0.25
    k_nearest: int = 15
    seed: int = 0
    mutation: MutationConfig = field(default_factory=MutationConfig)

    def __post_init__(self):
        if not (0.0 < self.truncation <= 1.0):
            raise EvolutionError("truncation must be in (0, 1]")
        if not (0 <= self.elitism < self.pop_size):
            raise EvolutionError("elitism must be smaller than the population")
        if self.k_nearest < 1:
            raise EvolutionError("k_nearest must be >= 1")


def score_novelty(
    behavior: tuple[float, float],
    population_behaviors,
    archive: NoveltyArchive,
    k: int,
) -> float:
    """Mean distance to the k nearest neighbors among peers and the archive.

    One instance equal to `behavior` is dropped from the peer list so an
    individual never counts itself; k is clipped to what is available and an
    empty neighbor set scores 0.
    """
    if k < 1:
        raise EvolutionError("k must be >= 1")
    pts = [(float(x), float(y)) for x, y in population_behaviors]
    me = (float(behavior[0]), float(behavior[1]))
    try:
        pts.remove(me)
    except ValueError:
        pass
    pts.extend(archive.points)
    if not pts:
        return 0.0
    arr = np.asarray(pts, dtype=np.float64)
    dx = arr[:, 0] - me[0]
    dy = arr[:, 1] - me[1]
    d = np.sort(np.sqrt(dx * dx + dy * dy))
    kk = min(k, d.shape[0])
    return float(d[:kk].mean())


def update_archive(archive: NoveltyArchive, behaviors) -> NoveltyArchive:
    """Admit sufficiently-new behaviors, then adapt the admission threshold.

    Admission compares each behavior to its single nearest archived point;
    an empty archive admits anything.  More than 8 admissions in one call
    raises the threshold by 1.2x; 25 consecutive empty calls lower it 0.8x.
    """
    points = list(archive.points)
    added = 0
    for b in behaviors:
        bx, by = float(b[0]), float(b[1])
        if points:
            nearest = min(
                math.sqrt((bx - px) * (bx - px) + (by - py) * (by - py))
                for px, py in points
            )
        else:
            nearest = math.inf
        if nearest > archive.add_threshold:
            points.append((bx, by))
            added += 1
    threshold = archive.add_threshold
    stagnant = archive.stagnant
    if added > 8:
        threshold *= 1.2
        stagnant = 0
    elif added == 0:
        stagnant += 1
        if stagnant >= 25:
            threshold *= 0.8
            stagnant = 0
    else:
        stagnant = 0
    return NoveltyArchive(tuple(points), threshold, stagnant)


def _require_evaluated(population, what: str) -> None:
    missing = [ind.id for ind in population if ind.eval is None]
    if missing:
        raise EvolutionError(f"{what} needs an evaluated population; missing {missing}")


def _behaviors(population) -> list[tuple[float, float]]:
    return [ind.eval.behavior for ind in population]


def _dedupe(ids) -> list[str]:
    seen: set[str] = set()
    out: list[str] = []
    for i in ids:
        if i not in seen:
            seen.add(i)
            out.append(i)
    return out


def _check_selection(selected, population) -> list:
    if not selected:
        raise EvolutionError("selection must not be empty")
    by_id = {ind.id: ind for ind in population}
    chosen = []
    for sid in _dedupe(selected):
        if sid not in by_id:
            raise EvolutionError(f"selected id {sid!r} is not in the population")
        chosen.append(by_id[sid])
    return chosen


def _truncation_count(config: EvolutionConfig, n: int) -> int:
    return max(1, int(n * config.truncation))


def next_generation(
    population,
    mode: SelectionMode,
    archive: NoveltyArchive,
    config: EvolutionConfig,
    rng: np.random.Generator,
    id_prefix: str = "x",
) -> tuple[list[Individual], NoveltyArchive]:
    """Breed the next population.

    Parent pool by mode: Interactive takes exactly the selected individuals in
    selection order; Objective takes the top truncation fraction by fitness;
    Novelty updates the archive first, then takes the top fraction by novelty;
    Mixed keeps the selections and fills the pool with the most novel others.
    The first `elitism` parents carry over unchanged; remaining slots are
    mutants of round-robin parents, one rng substream per slot.
    """
    population = list(population)
    if not population:
        raise EvolutionError("population is empty")

    if isinstance(mode, Interactive):
        parents = _check_selection(mode.selected, population)
        new_archive = archive
    elif isinstance(mode, Objective):
        _require_evaluated(population, "objective selection")
        order = sorted(
            range(len(population)), key=lambda i: -population[i].eval.fitness
        )
        parents = [population[i] for i in order[: _truncation_count(config, len(population))]]
        new_archive = archive
    elif isinstance(mode, Novelty):
        _require_evaluated(population, "novelty selection")
        behaviors = _behaviors(population)
        new_archive = update_archive(archive, behaviors)
        scores = [
            score_novelty(b, behaviors, new_archive, config.k_nearest)
            for b in behaviors
        ]
        order = sorted(range(len(population)), key=lambda i: -scores[i])
        parents = [population[i] for i in order[: _truncation_count(config, len(population))]]
    elif isinstance(mode, MixedInteractiveNovelty):
        _require_evaluated(population, "mixed selection")
        chosen = _check_selection(mode.selected, population)
        behaviors = _behaviors(population)
        new_archive = update_archive(archive, behaviors)
        scores = [
            score_novelty(b, behaviors, new_archive, config.k_nearest)
            for b in behaviors
        ]
        chosen_ids = {ind.id for ind in chosen}
        order = sorted(range(len(population)), key=lambda i: -scores[i])
        parents = list(chosen)
        want = max(_truncation_count(config, len(population)), len(parents))
        for i in order:
            if len(parents) >= want:
                break
            if population[i].id not in chosen_ids:
                parents.append(population[i])
    else:
        raise EvolutionError(f"unknown selection mode {mode!r}")

    n_elite = min(config.elitism, len(parents), config.pop_size)
    new_pop: list[Individual] = list(parents[:n_elite])
    n_offspring = config.pop_size - n_elite
    streams = rng.spawn(n_offspring)
    for slot in range(n_offspring):
        parent = parents[slot % len(parents)]
        genome = mutate(parent.genome, streams[slot], config.mutation)
        new_pop.append(
            Individual(
                id=f"{id_prefix}_{n_elite + slot:03d}",
                genome=genome,
                substrate=parent.substrate,
                report=None,
                eval=None,
                parent_id=parent.id,
            )
        )
    return new_pop, new_archive


def evaluate_population(
    population,
    maze: Maze,
    sim: SimConfig = SimConfig(),
    decode_config: DecodeConfig = DecodeConfig(),
) -> list[Individual]:
    """Fill in missing evaluations, merging results in individual index order."""
    out: list[Individual] = []
    for ind in population:
        if ind.eval is None:
            net = decode(ind.genome, ind.substrate, decode_config)
            result = evaluate_phenotype(net, maze, sim)
            ind = replace(ind, eval=result)
        out.append(ind)
    return out


def suggest_variations(
    parent: Individual,
    maze: Maze,
    n: int,
    config: EvolutionConfig,
    rng: np.random.Generator,
    sim: SimConfig = SimConfig(),
) -> list[Individual]:
    """Machine-initiative candidates: over-generate 4n mutants, return the n
    best ranked by goal completion, then batch novelty, then fitness."""
    if n < 1:
        raise EvolutionError("n must be >= 1")
    batch: list[Individual] = []
    streams = rng.spawn(4 * n)
    for i in range(4 * n):
        genome = mutate(parent.genome, streams[i], config.mutation)
        batch.append(
            Individual(
                id=f"v{i:03d}",
                genome=genome,
                substrate=parent.substrate,
                parent_id=parent.id,
            )
        )
    batch = evaluate_population(batch, maze, sim)
    behaviors = _behaviors(batch)
    empty = NoveltyArchive()
    keyed = []
    for i, ind in enumerate(batch):
        nov = score_novelty(ind.eval.behavior, behaviors, empty, config.k_nearest)
        keyed.append((not ind.eval.goal_reached, -nov, -ind.eval.fitness, i))
    keyed.sort()
    return [batch[i] for (_, _, _, i) in keyed[:n]]


def seed_population(
    anet,
    maze_or_none,
    config: EvolutionConfig,
    rng: np.random.Generator,
    id_prefix: str = "g0",
) -> list[Individual]:
    """Generation zero: the compiled hand-built brain plus pop_size-1 mutants."""
    genome, report = compile_network(anet)
    substrate = report.substrate
    founder = Individual(
        id=f"{id_prefix}_000", genome=genome, substrate=substrate, report=report
    )
    pop = [founder]
    streams = rng.spawn(config.pop_size - 1)
    for i in range(config.pop_size - 1):
        genome_i = mutate(founder.genome, streams[i], config.mutation)
        pop.append(
            Individual(
                id=f"{id_prefix}_{i + 1:03d}",
                genome=genome_i,
                substrate=substrate,
                parent_id=founder.id,
            )
        )
    return pop


def _log_line(log: Optional[TextIO], gen: int, population, archive: NoveltyArchive):
    if log is None:
        return
    fits = [ind.eval.fitness for ind in population]
    best = max(fits)
    mean = sum(fits) / len(fits)
    log.write(
        f"{gen}\t{best!r}\t{mean!r}\t{len(archive.points)}\t{archive.add_threshold!r}\n"
    )


def run_evolution(
    anet,
    maze: Maze,
    mode: str = "objective",
    generations: int = 50,
    seed: int = 0,
    pop_size: int = 64,
    config: Optional[EvolutionConfig] = None,
    sim: SimConfig = SimConfig(),
    log: Optional[TextIO] = None,
) -> tuple[list[Individual], NoveltyArchive]:
    """Headless evolution from a hand-built annotated network.

    Writes one tab-separated line per generation (including generation zero):
    generation index, best fitness, mean fitness, archive size, threshold.
    Each generation draws from an rng rebuilt from (seed, generation), so runs
    are reproducible line for line.
    """
    if mode not in ("objective", "novelty"):
        raise EvolutionError(f"mode must be 'objective' or 'novelty', got {mode!r}")
    if config is None:
        config = EvolutionConfig(pop_size=pop_size, seed=seed)
    selection: SelectionMode = Objective() if mode == "objective" else Novelty()
    rng0 = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, 0))))
    population = seed_population(anet, maze, config, rng0, id_prefix="g0")
    population = evaluate_population(population, maze, sim)
    archive = NoveltyArchive()
    _log_line(log, 0, population, archive)
    for gen in range(1, generations + 1):
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence((seed, gen)))
        )
        population, archive = next_generation(
            population, selection, archive, config, rng, id_prefix=f"g{gen}"
        )
        population = evaluate_population(population, maze, sim)
        _log_line(log, gen, population, archive)
    return population, archive
