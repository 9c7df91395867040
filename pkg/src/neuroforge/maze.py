"""Deterministic 2D robot-in-maze evaluation.

World is the unit square with implicit boundary walls.  The robot is a disc
(radius 0.015) driven by turn/speed controls; collision is stop-at-contact
against line segments, no sliding.  Sensors: five normalized rangefinders at
fixed angles plus a four-quadrant goal radar.  All geometry runs through the
compiled kernels so trajectories are bit-stable however they are computed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .ann import NetworkPhenotype, require_valid

ROBOT_RADIUS = 0.015

BOUNDARY_WALLS = (
    (0.0, 0.0, 1.0, 0.0),
    (1.0, 0.0, 1.0, 1.0),
    (1.0, 1.0, 0.0, 1.0),
    (0.0, 1.0, 0.0, 0.0),
)


class MazeError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.1
    max_steps: int = 400
    v_max: float = 0.5
    omega_max: float = math.pi
    rf_angles: tuple[float, ...] = (
        -math.pi / 2.0,
        -math.pi / 4.0,
        0.0,
        math.pi / 4.0,
        math.pi / 2.0,
    )
    rf_range: float = 0.5


@dataclass(frozen=True)
class Maze:
    """Interior walls plus start and goal; boundary walls are always appended."""

    interior_walls: tuple[tuple[float, float, float, float], ...]
    start: tuple[float, float, float]  # x, y, heading
    goal: tuple[float, float, float]   # x, y, radius
    name: str = ""
    _walls_arr: np.ndarray = field(
        init=False, repr=False, compare=False, hash=False, default=None
    )

    def __post_init__(self):
        object.__setattr__(
            self, "interior_walls", tuple(tuple(map(float, w)) for w in self.interior_walls)
        )
        walls = self.interior_walls + BOUNDARY_WALLS
        arr = np.asarray(walls, dtype=np.float64).reshape(len(walls), 4)
        object.__setattr__(self, "_walls_arr", arr)

    @property
    def walls(self) -> tuple[tuple[float, float, float, float], ...]:
        return self.interior_walls + BOUNDARY_WALLS

    def walls_array(self) -> np.ndarray:
        return self._walls_arr


@dataclass(frozen=True)
class RobotState:
    x: float
    y: float
    theta: float


@dataclass(frozen=True)
class EvaluationResult:
    fitness: float
    behavior: tuple[float, float]
    trajectory: tuple[tuple[float, float, float], ...]
    goal_reached: bool
    steps_used: int


def load_maze(text: str, name: str = "") -> Maze:
    """Parse the line-oriented maze format; `#` starts a comment."""
    start = None
    goal = None
    walls: list[tuple[float, float, float, float]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        word, args = parts[0], parts[1:]
        try:
            values = [float(a) for a in args]
        except ValueError:
            raise MazeError(f"line {lineno}: bad number in {line!r}")
        if word == "start":
            if len(values) != 3:
                raise MazeError(f"line {lineno}: start takes x y heading")
            if start is not None:
                raise MazeError(f"line {lineno}: duplicate start")
            start = values
        elif word == "goal":
            if len(values) != 3:
                raise MazeError(f"line {lineno}: goal takes x y radius")
            if goal is not None:
                raise MazeError(f"line {lineno}: duplicate goal")
            goal = values
        elif word == "wall":
            if len(values) != 4:
                raise MazeError(f"line {lineno}: wall takes x1 y1 x2 y2")
            x1, y1, x2, y2 = values
            for v in values:
                if not (0.0 <= v <= 1.0):
                    raise MazeError(f"line {lineno}: wall endpoint outside the unit square")
            if x1 == x2 and y1 == y2:
                raise MazeError(f"line {lineno}: wall has zero length")
            walls.append((x1, y1, x2, y2))
        else:
            raise MazeError(f"line {lineno}: unknown directive {word!r}")
    if start is None:
        raise MazeError("missing start line")
    if goal is None:
        raise MazeError("missing goal line")
    if goal[2] <= 0.0:
        raise MazeError("goal radius must be positive")
    for label, (px, py) in (("start", start[:2]), ("goal", goal[:2])):
        if not (0.0 <= px <= 1.0 and 0.0 <= py <= 1.0):
            raise MazeError(f"{label} position outside the unit square")
    maze = Maze(
        tuple(walls),
        (start[0], start[1], float(kernels.wrap_angle(start[2]))),
        (goal[0], goal[1], goal[2]),
        name=name,
    )
    d = min_wall_distance(maze, start[0], start[1])
    if d <= ROBOT_RADIUS:
        raise MazeError(
            f"start position is {d:.4f} from a wall; the robot needs more than "
            f"{ROBOT_RADIUS}"
        )
    return maze


def min_wall_distance(maze: Maze, x: float, y: float) -> float:
    arr = maze.walls_array()
    best = math.inf
    for i in range(arr.shape[0]):
        d = kernels.wall_distance(x, y, arr[i, 0], arr[i, 1], arr[i, 2], arr[i, 3])
        if d < best:
            best = d
    return float(best)


def start_state(maze: Maze) -> RobotState:
    return RobotState(maze.start[0], maze.start[1], maze.start[2])


def sense(maze: Maze, robot: RobotState, config: SimConfig = SimConfig()) -> list[float]:
    """Nine readings: five rangefinders then the radar quadrants (front, left, back, right)."""
    buf = np.zeros(9, dtype=np.float64)
    kernels.sense_into(
        buf,
        maze.walls_array(),
        robot.x,
        robot.y,
        robot.theta,
        maze.goal[0],
        maze.goal[1],
        np.asarray(config.rf_angles, dtype=np.float64),
        config.rf_range,
    )
    return [float(v) for v in buf]


def step(
    maze: Maze,
    robot: RobotState,
    controls: tuple[float, float],
    config: SimConfig = SimConfig(),
) -> RobotState:
    """Advance one tick: rotate, then translate along the new heading until contact."""
    turn, speed_raw = controls
    theta = float(kernels.wrap_angle(robot.theta + turn * config.omega_max * config.dt))
    v = config.v_max * (speed_raw + 1.0) / 2.0
    travel = v * config.dt
    ux = math.cos(theta)
    uy = math.sin(theta)
    t = kernels.collide_travel(
        robot.x, robot.y, ux, uy, travel, maze.walls_array(), ROBOT_RADIUS
    )
    return RobotState(robot.x + t * ux, robot.y + t * uy, theta)


def evaluate(
    phenotype: NetworkPhenotype, maze: Maze, config: SimConfig = SimConfig()
) -> EvaluationResult:
    """Closed-loop episode: sense, one synchronous network update, move.

    Activations persist across steps.  The goal counts as reached only when
    the robot gets there strictly before the step budget runs out, so
    fitness > 1 and goal_reached are the same statement.
    """
    require_valid(phenotype)
    if len(phenotype.input_order) != 9 or len(phenotype.output_order) != 2:
        raise ValueError(
            f"controller must have 9 inputs and 2 outputs, got "
            f"{len(phenotype.input_order)}/{len(phenotype.output_order)}"
        )
    pack = kernels.pack_phenotype(phenotype)
    traj, steps, goal = kernels.run_episode(
        pack["n_neurons"],
        pack["conn_src"],
        pack["conn_dst"],
        pack["conn_w"],
        pack["update_idx"],
        pack["input_idx"],
        pack["bias_idx"],
        pack["output_idx"][0],
        pack["output_idx"][1],
        maze.walls_array(),
        maze.start[0],
        maze.start[1],
        maze.start[2],
        maze.goal[0],
        maze.goal[1],
        maze.goal[2],
        config.dt,
        config.max_steps,
        config.v_max,
        config.omega_max,
        np.asarray(config.rf_angles, dtype=np.float64),
        config.rf_range,
        ROBOT_RADIUS,
    )
    steps = int(steps)
    trajectory = tuple(
        (float(traj[i, 0]), float(traj[i, 1]), float(traj[i, 2])) for i in range(steps)
    )
    goal_reached = bool(goal)
    if goal_reached:
        fitness = 1.0 + (config.max_steps - steps) / config.max_steps
    else:
        dx = maze.start[0] - maze.goal[0]
        dy = maze.start[1] - maze.goal[1]
        d_start = math.sqrt(dx * dx + dy * dy)
        fx, fy = trajectory[-1][0], trajectory[-1][1]
        gx, gy = maze.goal[0], maze.goal[1]
        d_final = math.sqrt((fx - gx) * (fx - gx) + (fy - gy) * (fy - gy))
        fitness = max(0.0, 1.0 - d_final / max(d_start, 1.0e-12))
    return EvaluationResult(
        fitness=fitness,
        behavior=(trajectory[-1][0], trajectory[-1][1]),
        trajectory=trajectory,
        goal_reached=goal_reached,
        steps_used=steps,
    )


def evaluation_to_data(result: EvaluationResult) -> dict:
    return {
        "fitness": result.fitness,
        "behavior": list(result.behavior),
        "trajectory": [list(p) for p in result.trajectory],
        "goal_reached": result.goal_reached,
        "steps_used": result.steps_used,
    }


def evaluation_from_data(data: dict) -> EvaluationResult:
    if not isinstance(data, dict) or set(data) != {
        "fitness",
        "behavior",
        "trajectory",
        "goal_reached",
        "steps_used",
    }:
        raise MazeError("malformed evaluation payload")
    return EvaluationResult(
        fitness=float(data["fitness"]),
        behavior=(float(data["behavior"][0]), float(data["behavior"][1])),
        trajectory=tuple(
            (float(p[0]), float(p[1]), float(p[2])) for p in data["trajectory"]
        ),
        goal_reached=bool(data["goal_reached"]),
        steps_used=int(data["steps_used"]),
    )


def maze_to_data(maze: Maze) -> dict:
    return {
        "id": maze.name,
        "start": {"x": maze.start[0], "y": maze.start[1], "theta": maze.start[2]},
        "goal": {"x": maze.goal[0], "y": maze.goal[1], "radius": maze.goal[2]},
        "walls": [list(w) for w in maze.walls],
        "interior_walls": [list(w) for w in maze.interior_walls],
    }


def builtin_mazes() -> dict[str, Maze]:
    """The three mazes shipped with the package, keyed by name."""
    from importlib import resources

    out: dict[str, Maze] = {}
    base = resources.files(__package__) / "mazes"
    for entry in sorted(base.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".maze"):
            name = entry.name[: -len(".maze")]
            out[name] = load_maze(entry.read_text(), name=name)
    return out


def resolve_maze(ref: str) -> Maze:
    """Accept a builtin maze name or a filesystem path."""
    mazes = builtin_mazes()
    if ref in mazes:
        return mazes[ref]
    import os

    if os.path.exists(ref):
        with open(ref) as f:
            name = os.path.splitext(os.path.basename(ref))[0]
            return load_maze(f.read(), name=name)
    raise MazeError(
        f"unknown maze {ref!r}; builtins are {sorted(mazes)} and paths must exist"
    )
