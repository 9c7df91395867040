/** Deterministic PRNG and random-model generators for property tests. */

import { EditorAction, Mode } from "../src/editor.js";
import { NetworkView, connectionKey } from "../src/schema.js";

/** mulberry32: small, seedable, good enough for test-case generation. */
export function rng(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function pick<T>(r: () => number, items: readonly T[]): T {
  if (items.length === 0) throw new Error("pick from empty list");
  return items[Math.floor(r() * items.length)]!;
}

export function startView(): NetworkView {
  return {
    neurons: [
      { id: "in_a", role: "input", x: -0.5, y: -0.8 },
      { id: "in_b", role: "input", x: 0.5, y: -0.8 },
      { id: "bias", role: "bias", x: 0.0, y: -0.95 },
      { id: "hid", role: "hidden", x: 0.0, y: 0.0 },
      { id: "out_z", role: "output", x: 0.0, y: 0.8 },
    ],
    connections: [
      { src: "in_a", dst: "hid", weight: 1.0 },
      { src: "in_b", dst: "hid", weight: -1.0 },
      { src: "hid", dst: "out_z", weight: 2.0 },
    ],
    inputOrder: ["in_a", "in_b"],
    outputOrder: ["out_z"],
    annotations: [],
  };
}

/** A position that may or may not be legal: mostly in-plane, sometimes wild. */
function randomPosition(r: () => number): [number, number] {
  if (r() < 0.1) return [r() * 6 - 3, r() * 6 - 3];
  return [Math.round((r() * 2 - 1) * 100) / 100, Math.round((r() * 2 - 1) * 100) / 100];
}

function randomWeight(r: () => number): number {
  if (r() < 0.15) return pick(r, [0.0, 0.01, 9.0, -4.5, Number.NaN]);
  const sign = r() < 0.5 ? -1 : 1;
  return sign * (0.05 + r() * 2.95);
}

/**
 * Draw one action against the current view; deliberately mixes valid and
 * invalid gestures so the reducer's rejection paths are exercised too.
 */
export function randomAction(r: () => number, view: NetworkView, candidates: readonly string[]): EditorAction {
  const neuronIds = view.neurons.map((n) => n.id);
  const hiddenIds = view.neurons.filter((n) => n.role === "hidden").map((n) => n.id);
  const connKeys = view.connections.map((c) => connectionKey(c.src, c.dst));
  const anyNeuron = () => (r() < 0.9 && neuronIds.length > 0 ? pick(r, neuronIds) : "ghost");
  const roll = r();

  if (roll < 0.16) {
    const [x, y] = randomPosition(r);
    return { type: "DragNeuron", id: anyNeuron(), x, y };
  }
  if (roll < 0.3) {
    const [x, y] = randomPosition(r);
    return { type: "AddNeuronAt", x, y };
  }
  if (roll < 0.44) {
    return { type: "ConnectGesture", src: anyNeuron(), dst: anyNeuron(), weight: randomWeight(r) };
  }
  if (roll < 0.52) {
    if (view.connections.length > 0 && r() < 0.85) {
      const c = pick(r, view.connections);
      return { type: "SetWeightInspector", src: c.src, dst: c.dst, weight: randomWeight(r) };
    }
    return { type: "SetWeightInspector", src: "ghost", dst: "ghost", weight: 1.0 };
  }
  if (roll < 0.6) {
    const ids: string[] = [];
    const n = Math.floor(r() * 3);
    for (let i = 0; i < n; i++) {
      if (r() < 0.5 && hiddenIds.length > 0) ids.push(pick(r, hiddenIds));
      else if (connKeys.length > 0) ids.push(pick(r, connKeys));
      else if (neuronIds.length > 0) ids.push(pick(r, neuronIds));
    }
    return { type: "SelectElements", ids };
  }
  if (roll < 0.66) {
    return { type: "DeleteSelection" };
  }
  if (roll < 0.74) {
    const members: [string, string][] = [];
    const n = 1 + Math.floor(r() * 2);
    for (let i = 0; i < n; i++) {
      if (view.connections.length > 0 && r() < 0.9) {
        const c = pick(r, view.connections);
        members.push([c.src, c.dst]);
      } else {
        members.push(["ghost", "ghost"]);
      }
    }
    if (r() < 0.5) return { type: "MarkMirror", members };
    return {
      type: "MarkRepeat",
      members,
      dx: Math.round((r() * 0.8 - 0.4) * 100) / 100,
      dy: Math.round((r() * 0.8 - 0.4) * 100) / 100,
      count: r() < 0.85 ? 2 + Math.floor(r() * 2) : pick(r, [0, 1, 2.5]),
    };
  }
  if (roll < 0.82) {
    const ids = candidates.length > 0 && r() < 0.85 ? [pick(r, candidates)] : ["ghost_candidate"];
    if (candidates.length > 1 && r() < 0.5) ids.push(pick(r, candidates));
    return { type: "PickCandidates", ids };
  }
  if (roll < 0.92) {
    return { type: "SwitchMode", mode: pick(r, ["Edit", "Select", "Watch"] as Mode[]) };
  }
  return { type: "Undo" };
}
