"""Mixed-initiative neuroevolution workbench.

Design a small spatial neural controller by hand, annotate its regularities,
compile it losslessly into an evolvable genotype, and improve it by objective
search, novelty search, interactive selection, or any mix — alone or against
a shared collaboration service.
"""

from .ann import (
    AddConnection,
    AddNeuron,
    Connection,
    EditError,
    InvalidNetworkError,
    MoveNeuron,
    NetworkPhenotype,
    Neuron,
    RemoveConnection,
    RemoveNeuron,
    SchemaError,
    SetWeight,
    activate,
    apply_edit,
    network_from_json,
    network_to_json,
    validate,
)
from .compiler import (
    AnnotatedNetwork,
    AnnotationError,
    CompilationReport,
    CompileError,
    MirrorX,
    Repeat,
    StaleReportError,
    anet_from_json,
    anet_to_json,
    compile_network,
    recompile_edit,
    roundtrip_errors,
)
from .cppn import Cppn, CppnError, MutationConfig, cppn_from_json, cppn_to_json, mutate, query
from .decode import DecodeConfig, Substrate, decode, substrate_from_phenotype
from .evolve import (
    EvolutionConfig,
    EvolutionError,
    Individual,
    Interactive,
    MixedInteractiveNovelty,
    NoveltyArchive,
    Novelty,
    Objective,
    next_generation,
    run_evolution,
    score_novelty,
    suggest_variations,
    update_archive,
)
from .maze import (
    EvaluationResult,
    Maze,
    MazeError,
    RobotState,
    SimConfig,
    builtin_mazes,
    evaluate,
    load_maze,
    sense,
    step,
)
from .seeds import seed_brain
from .store import BrainRecord, SessionState, StoreError, WorkbenchStore

__version__ = "0.1.0"

__all__ = [
    "AddConnection",
    "AddNeuron",
    "AnnotatedNetwork",
    "AnnotationError",
    "BrainRecord",
    "CompilationReport",
    "CompileError",
    "Connection",
    "Cppn",
    "CppnError",
    "DecodeConfig",
    "EditError",
    "EvaluationResult",
    "EvolutionConfig",
    "EvolutionError",
    "Individual",
    "Interactive",
    "InvalidNetworkError",
    "Maze",
    "MazeError",
    "MirrorX",
    "MixedInteractiveNovelty",
    "MoveNeuron",
    "MutationConfig",
    "NetworkPhenotype",
    "Neuron",
    "Novelty",
    "NoveltyArchive",
    "Objective",
    "RemoveConnection",
    "RemoveNeuron",
    "Repeat",
    "RobotState",
    "SchemaError",
    "SessionState",
    "SetWeight",
    "SimConfig",
    "StaleReportError",
    "StoreError",
    "Substrate",
    "WorkbenchStore",
    "activate",
    "anet_from_json",
    "anet_to_json",
    "apply_edit",
    "builtin_mazes",
    "compile_network",
    "cppn_from_json",
    "cppn_to_json",
    "decode",
    "evaluate",
    "load_maze",
    "mutate",
    "network_from_json",
    "network_to_json",
    "next_generation",
    "query",
    "recompile_edit",
    "roundtrip_errors",
    "run_evolution",
    "score_novelty",
    "seed_brain",
    "sense",
    "step",
    "substrate_from_phenotype",
    "suggest_variations",
    "update_archive",
    "validate",
]
