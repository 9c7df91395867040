"""Hand-built starter controller used to seed evolution and demo sessions.

Layout convention: sensors along the bottom of the plane, outputs at the top,
one hidden clearance detector at the origin.  Symmetric rangefinder inputs sit
at mirrored x positions so their weight-sharing can be annotated.
"""

from __future__ import annotations

from .ann import Connection, NetworkPhenotype, Neuron, require_valid
from .compiler import AnnotatedNetwork, MirrorX, validate_annotated

INPUT_IDS = (
    "rf_m90",
    "rf_m45",
    "rf_0",
    "rf_p45",
    "rf_p90",
    "radar_front",
    "radar_left",
    "radar_back",
    "radar_right",
)


def seed_brain() -> AnnotatedNetwork:
    """Wall-avoiding, goal-homing reflex controller with two mirror annotations.

    Steering opposes the nearer side wall and follows the goal radar; speed is
    gated by a clearance unit that pools the forward-facing rangefinders.  The
    sign-flipped steering pairs are left unannotated: a shared weight cannot
    express opposite signs.
    """
    neurons = (
        Neuron("rf_m90", "input", -0.8, -0.8),
        Neuron("rf_m45", "input", -0.4, -0.8),
        Neuron("rf_0", "input", 0.0, -0.8),
        Neuron("rf_p45", "input", 0.4, -0.8),
        Neuron("rf_p90", "input", 0.8, -0.8),
        Neuron("radar_front", "input", 0.0, -0.6),
        Neuron("radar_left", "input", -0.4, -0.6),
        Neuron("radar_back", "input", 0.0, -0.7),
        Neuron("radar_right", "input", 0.4, -0.6),
        Neuron("bias", "bias", 0.0, -0.95),
        Neuron("h_clear", "hidden", 0.0, 0.0),
        Neuron("out_turn", "output", 0.0, 0.75),
        Neuron("out_speed", "output", 0.0, 0.9),
    )
    connections = (
        # clearance pool: high when the way ahead is open
        Connection("rf_m45", "h_clear", 0.8),
        Connection("rf_p45", "h_clear", 0.8),
        Connection("rf_m90", "h_clear", 0.4),
        Connection("rf_p90", "h_clear", 0.4),
        Connection("rf_0", "h_clear", 1.0),
        # speed: idle bias plus clearance drive
        Connection("bias", "out_speed", -0.4),
        Connection("h_clear", "out_speed", 1.6),
        Connection("radar_front", "out_speed", 0.3),
        # steering: away from the blocked side, toward the goal quadrant
        Connection("rf_m45", "out_turn", -0.7),
        Connection("rf_p45", "out_turn", 0.7),
        Connection("rf_m90", "out_turn", -0.25),
        Connection("rf_p90", "out_turn", 0.25),
        Connection("radar_left", "out_turn", 0.6),
        Connection("radar_right", "out_turn", -0.6),
        Connection("radar_back", "out_turn", 0.9),
    )
    net = NetworkPhenotype(
        neurons=neurons,
        connections=connections,
        input_order=INPUT_IDS,
        output_order=("out_turn", "out_speed"),
    )
    require_valid(net)
    annotated = AnnotatedNetwork(
        phenotype=net,
        annotations=(
            MirrorX(frozenset({("rf_m45", "h_clear"), ("rf_p45", "h_clear")})),
            MirrorX(frozenset({("rf_m90", "h_clear"), ("rf_p90", "h_clear")})),
        ),
    )
    validate_annotated(annotated)
    return annotated
