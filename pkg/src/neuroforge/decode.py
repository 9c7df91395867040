"""Substrate decoding: query a genotype over neuron positions to get a phenotype."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .ann import (
    WEIGHT_MIN,
    Connection,
    InvalidNetworkError,
    Neuron,
    NetworkPhenotype,
    validate,
)
from .cppn import Cppn, require_valid_cppn

EPS_EXPR = 0.01  # |query| below this expresses no connection
W_CAP = 3.0      # decoded weight clamp

SOURCE_ROLES = ("input", "bias", "hidden", "output")
DEST_ROLES = ("hidden", "output")


@dataclass(frozen=True)
class Substrate:
    """Positioned neurons to query over; connections are not its business."""

    neurons: tuple[Neuron, ...]
    input_order: tuple[str, ...]
    output_order: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "neurons", tuple(sorted(self.neurons, key=lambda n: n.id))
        )
        object.__setattr__(self, "input_order", tuple(self.input_order))
        object.__setattr__(self, "output_order", tuple(self.output_order))

    def as_phenotype(self) -> NetworkPhenotype:
        return NetworkPhenotype(self.neurons, (), self.input_order, self.output_order)


@dataclass(frozen=True)
class DecodeConfig:
    eps_expr: float = EPS_EXPR
    w_cap: float = W_CAP


def substrate_from_phenotype(net: NetworkPhenotype) -> Substrate:
    return Substrate(net.neurons, net.input_order, net.output_order)


def validate_substrate(substrate: Substrate) -> list[str]:
    return validate(substrate.as_phenotype())


def queryable_pairs(substrate: Substrate) -> list[tuple[str, str]]:
    """Ordered (src id, dst id) pairs the decoder will query, self-pairs included."""
    sources = [n for n in substrate.neurons if n.role in SOURCE_ROLES]
    dests = [n for n in substrate.neurons if n.role in DEST_ROLES]
    return [(a.id, b.id) for a in sources for b in dests]


def pair_tuple(substrate: Substrate, src: str, dst: str) -> tuple[float, float, float, float]:
    by_id = {n.id: n for n in substrate.neurons}
    a, b = by_id[src], by_id[dst]
    return (a.x, a.y, b.x, b.y)


def decode(
    cppn: Cppn, substrate: Substrate, config: DecodeConfig = DecodeConfig()
) -> NetworkPhenotype:
    """Express a connection wherever |query| clears the threshold.

    Weights are clamped to +-w_cap; magnitudes in [eps_expr, 0.05) are floored
    to sign * 0.05 so the result always satisfies the phenotype weight band.
    """
    require_valid_cppn(cppn)
    problems = validate_substrate(substrate)
    if problems:
        raise InvalidNetworkError("; ".join(problems))

    pairs = queryable_pairs(substrate)
    by_id = {n.id: n for n in substrate.neurons}
    conns: list[Connection] = []
    if pairs:
        coords = np.empty((len(pairs), 4), dtype=np.float64)
        for i, (src, dst) in enumerate(pairs):
            a, b = by_id[src], by_id[dst]
            coords[i, 0] = a.x
            coords[i, 1] = a.y
            coords[i, 2] = b.x
            coords[i, 3] = b.y
        packed = kernels.pack_cppn(cppn)
        raw = kernels.query_batch(*packed, coords)
        for i, (src, dst) in enumerate(pairs):
            w = float(raw[i])
            if abs(w) < config.eps_expr:
                continue
            if w > config.w_cap:
                w = config.w_cap
            elif w < -config.w_cap:
                w = -config.w_cap
            if abs(w) < WEIGHT_MIN:
                w = WEIGHT_MIN if w > 0.0 else -WEIGHT_MIN
            conns.append(Connection(src, dst, w))
    return NetworkPhenotype(
        substrate.neurons, tuple(conns), substrate.input_order, substrate.output_order
    )
