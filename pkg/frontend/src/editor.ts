/**
 * Pure editor state machine. reduce() never touches the network or the DOM;
 * effects (service calls, playback timers) live above it and feed results
 * back in as new state.
 *
 * Undo model: the state keeps the last-saved view-model plus the list of
 * accepted view-changing actions since then (each with the selection it saw,
 * which DeleteSelection needs). The current view-model is always exactly the
 * replay of that list, so Undo is "pop and replay".
 */

import {
  ConnectionView,
  DELTA_MIN,
  MemberKey,
  NetworkView,
  NeuronView,
  WEIGHT_MAX,
  WEIGHT_MIN,
  connectionKey,
} from "./schema.js";

export type Mode = "Edit" | "Select" | "Watch";

export interface Pose {
  readonly x: number;
  readonly y: number;
  readonly theta: number;
}

export interface CandidateTile {
  readonly brainId: string;
  readonly fitness: number | null;
  readonly behavior: readonly [number, number] | null;
}

export type EditorAction =
  | { readonly type: "DragNeuron"; readonly id: string; readonly x: number; readonly y: number }
  | { readonly type: "AddNeuronAt"; readonly x: number; readonly y: number }
  | { readonly type: "ConnectGesture"; readonly src: string; readonly dst: string; readonly weight: number }
  | { readonly type: "DeleteSelection" }
  | { readonly type: "SetWeightInspector"; readonly src: string; readonly dst: string; readonly weight: number }
  | { readonly type: "MarkMirror"; readonly members: readonly MemberKey[] }
  | {
      readonly type: "MarkRepeat";
      readonly members: readonly MemberKey[];
      readonly dx: number;
      readonly dy: number;
      readonly count: number;
    }
  | { readonly type: "PickCandidates"; readonly ids: readonly string[] }
  | { readonly type: "SelectElements"; readonly ids: readonly string[] }
  | { readonly type: "SwitchMode"; readonly mode: Mode }
  | { readonly type: "Undo" };

/** One accepted view-changing action plus the selection it was applied under. */
export interface UndoEntry {
  readonly action: EditorAction;
  readonly selection: readonly string[];
}

export interface EditorState {
  /** Current view-model; always structurally valid. */
  readonly view: NetworkView;
  /** View-model as of the last save; replay target for undo. */
  readonly baseline: NetworkView;
  /** Accepted view-changing actions since the baseline, in order. */
  readonly undoStack: readonly UndoEntry[];
  /** Selected canvas element ids: neuron ids and "src->dst" connection keys. */
  readonly selection: readonly string[];
  readonly mode: Mode;
  readonly playback: { readonly trajectory: readonly Pose[]; readonly cursor: number } | null;
  readonly candidates: readonly CandidateTile[];
  /** Candidate brain ids chosen for the next breed. */
  readonly picks: readonly string[];
  /** Messages from the last reduce; empty when the action applied cleanly. */
  readonly diagnostics: readonly string[];
}

export function initialState(view: NetworkView, mode: Mode = "Edit"): EditorState {
  return {
    view,
    baseline: view,
    undoStack: [],
    selection: [],
    mode,
    playback: null,
    candidates: [],
    picks: [],
    diagnostics: [],
  };
}

/** Runtime plumbing: install the candidate grid after a session response. */
export function setCandidates(state: EditorState, tiles: readonly CandidateTile[]): EditorState {
  return { ...state, candidates: tiles, picks: [], diagnostics: [] };
}

/** Runtime plumbing: mark the current view-model as saved. */
export function markSaved(state: EditorState): EditorState {
  return { ...state, baseline: state.view, undoStack: [], diagnostics: [] };
}

const VIEW_CHANGING: ReadonlySet<EditorAction["type"]> = new Set([
  "DragNeuron",
  "AddNeuronAt",
  "ConnectGesture",
  "DeleteSelection",
  "SetWeightInspector",
  "MarkMirror",
  "MarkRepeat",
]);

export function isViewChanging(action: EditorAction): boolean {
  return VIEW_CHANGING.has(action.type);
}

// -- gesture checks (mirror the service's rules; service stays authoritative)

function neuronById(view: NetworkView, id: string): NeuronView | undefined {
  return view.neurons.find((n) => n.id === id);
}

function connectionByKey(view: NetworkView, src: string, dst: string): ConnectionView | undefined {
  return view.connections.find((c) => c.src === src && c.dst === dst);
}

function positionProblem(view: NetworkView, x: number, y: number, ignoreId?: string): string | null {
  if (!Number.isFinite(x) || !Number.isFinite(y)) return "position must be finite";
  if (x < -1 || x > 1 || y < -1 || y > 1) return `position (${x}, ${y}) outside the design plane`;
  for (const n of view.neurons) {
    if (n.id === ignoreId) continue;
    if (Math.hypot(n.x - x, n.y - y) < DELTA_MIN) {
      return `too close to neuron ${n.id} (minimum separation ${DELTA_MIN})`;
    }
  }
  return null;
}

function weightProblem(weight: number): string | null {
  if (!Number.isFinite(weight)) return "weight must be finite";
  if (Math.abs(weight) < WEIGHT_MIN || Math.abs(weight) > WEIGHT_MAX) {
    return `|weight| ${Math.abs(weight)} outside [${WEIGHT_MIN}, ${WEIGHT_MAX}]`;
  }
  return null;
}

function freshNeuronId(view: NetworkView): string {
  const taken = new Set(view.neurons.map((n) => n.id));
  let k = 1;
  while (taken.has(`n${k}`)) k += 1;
  return `n${k}`;
}

function claimedKeys(view: NetworkView): Set<string> {
  const keys = new Set<string>();
  for (const ann of view.annotations) {
    for (const [s, d] of ann.members) keys.add(connectionKey(s, d));
  }
  return keys;
}

function annotationProblem(view: NetworkView, members: readonly MemberKey[]): string | null {
  if (members.length === 0) return "annotation needs at least one member connection";
  const claimed = claimedKeys(view);
  const withinThis = new Set<string>();
  for (const [src, dst] of members) {
    const key = connectionKey(src, dst);
    if (!connectionByKey(view, src, dst)) return `no connection ${key}`;
    if (claimed.has(key)) return `connection ${key} already belongs to an annotation`;
    if (withinThis.has(key)) return `connection ${key} listed twice`;
    withinThis.add(key);
  }
  return null;
}

export function splitSelection(selection: readonly string[]): { neuronIds: string[]; connKeys: string[] } {
  const neuronIds: string[] = [];
  const connKeys: string[] = [];
  for (const id of selection) {
    if (id.includes("->")) connKeys.push(id);
    else neuronIds.push(id);
  }
  return { neuronIds, connKeys };
}

// -- view-model transforms for the accepted gestures

function applyToView(view: NetworkView, action: EditorAction, selection: readonly string[]): NetworkView {
  switch (action.type) {
    case "DragNeuron":
      return {
        ...view,
        neurons: view.neurons.map((n) => (n.id === action.id ? { ...n, x: action.x, y: action.y } : n)),
      };
    case "AddNeuronAt": {
      const neuron: NeuronView = { id: freshNeuronId(view), role: "hidden", x: action.x, y: action.y };
      return { ...view, neurons: [...view.neurons, neuron] };
    }
    case "ConnectGesture":
      return {
        ...view,
        connections: [...view.connections, { src: action.src, dst: action.dst, weight: action.weight }],
      };
    case "SetWeightInspector":
      return {
        ...view,
        connections: view.connections.map((c) =>
          c.src === action.src && c.dst === action.dst ? { ...c, weight: action.weight } : c,
        ),
      };
    case "MarkMirror":
      return { ...view, annotations: [...view.annotations, { kind: "mirror_x", members: action.members }] };
    case "MarkRepeat":
      return {
        ...view,
        annotations: [
          ...view.annotations,
          { kind: "repeat", members: action.members, dx: action.dx, dy: action.dy, count: action.count },
        ],
      };
    case "DeleteSelection": {
      const { neuronIds, connKeys } = splitSelection(selection);
      const goneNeurons = new Set(neuronIds);
      const goneKeys = new Set(connKeys);
      const connections = view.connections.filter(
        (c) => !goneKeys.has(connectionKey(c.src, c.dst)) && !goneNeurons.has(c.src) && !goneNeurons.has(c.dst),
      );
      const keptKeys = new Set(connections.map((c) => connectionKey(c.src, c.dst)));
      const annotations = view.annotations.filter((ann) =>
        ann.members.every(([s, d]) => keptKeys.has(connectionKey(s, d))),
      );
      return {
        ...view,
        neurons: view.neurons.filter((n) => !goneNeurons.has(n.id)),
        connections,
        annotations,
      };
    }
    default:
      return view;
  }
}

/** Replay the undo stack from a baseline; the result is the current view. */
export function replayViewModel(baseline: NetworkView, entries: readonly UndoEntry[]): NetworkView {
  let view = baseline;
  for (const entry of entries) {
    view = applyToView(view, entry.action, entry.selection);
  }
  return view;
}

// -- the reducer --------------------------------------------------------------

function rejected(state: EditorState, message: string): EditorState {
  return { ...state, diagnostics: [message] };
}

function acceptedView(state: EditorState, action: EditorAction, selectionAfter?: readonly string[]): EditorState {
  return {
    ...state,
    view: applyToView(state.view, action, state.selection),
    undoStack: [...state.undoStack, { action, selection: state.selection }],
    selection: selectionAfter ?? state.selection,
    diagnostics: [],
  };
}

export function reduce(state: EditorState, action: EditorAction): EditorState {
  switch (action.type) {
    case "SwitchMode":
      if (action.mode !== "Edit" && action.mode !== "Select" && action.mode !== "Watch") {
        return rejected(state, `unknown mode ${JSON.stringify(action.mode)}`);
      }
      return { ...state, mode: action.mode, diagnostics: [] };

    case "SelectElements": {
      const bad = action.ids.find((id) => !elementExists(state.view, id));
      if (bad !== undefined) return rejected(state, `no element ${JSON.stringify(bad)}`);
      return { ...state, selection: dedupe(action.ids), diagnostics: [] };
    }

    case "PickCandidates": {
      if (action.ids.length === 0) return rejected(state, "pick at least one candidate");
      const known = new Set(state.candidates.map((t) => t.brainId));
      const bad = action.ids.find((id) => !known.has(id));
      if (bad !== undefined) return rejected(state, `no candidate ${JSON.stringify(bad)}`);
      return { ...state, picks: dedupe(action.ids), diagnostics: [] };
    }

    case "Undo": {
      if (state.undoStack.length === 0) return rejected(state, "nothing to undo");
      const stack = state.undoStack.slice(0, -1);
      return { ...state, view: replayViewModel(state.baseline, stack), undoStack: stack, diagnostics: [] };
    }

    default:
      break;
  }

  // everything below edits the view-model
  if (state.mode !== "Edit") {
    return rejected(state, `switch to Edit mode to modify the network (currently ${state.mode})`);
  }

  switch (action.type) {
    case "DragNeuron": {
      if (!neuronById(state.view, action.id)) return rejected(state, `no neuron ${JSON.stringify(action.id)}`);
      const p = positionProblem(state.view, action.x, action.y, action.id);
      if (p) return rejected(state, p);
      return acceptedView(state, action);
    }

    case "AddNeuronAt": {
      const p = positionProblem(state.view, action.x, action.y);
      if (p) return rejected(state, p);
      return acceptedView(state, action);
    }

    case "ConnectGesture": {
      for (const end of [action.src, action.dst]) {
        if (!neuronById(state.view, end)) return rejected(state, `no neuron ${JSON.stringify(end)}`);
      }
      const dstRole = neuronById(state.view, action.dst)!.role;
      if (dstRole === "input" || dstRole === "bias") {
        return rejected(state, `destination role ${JSON.stringify(dstRole)} cannot receive connections`);
      }
      if (connectionByKey(state.view, action.src, action.dst)) {
        return rejected(state, `connection ${connectionKey(action.src, action.dst)} already exists`);
      }
      const w = weightProblem(action.weight);
      if (w) return rejected(state, w);
      return acceptedView(state, action);
    }

    case "SetWeightInspector": {
      if (!connectionByKey(state.view, action.src, action.dst)) {
        return rejected(state, `no connection ${connectionKey(action.src, action.dst)}`);
      }
      const w = weightProblem(action.weight);
      if (w) return rejected(state, w);
      return acceptedView(state, action);
    }

    case "MarkMirror": {
      const p = annotationProblem(state.view, action.members);
      if (p) return rejected(state, p);
      return acceptedView(state, action);
    }

    case "MarkRepeat": {
      const p = annotationProblem(state.view, action.members);
      if (p) return rejected(state, p);
      if (!Number.isInteger(action.count) || action.count < 2) {
        return rejected(state, `repeat count ${action.count} must be an integer >= 2`);
      }
      if (!Number.isFinite(action.dx) || !Number.isFinite(action.dy)) {
        return rejected(state, "repeat offset must be finite");
      }
      // optimistic: every translated endpoint must stay on the plane
      for (const [src, dst] of action.members) {
        for (const id of [src, dst]) {
          const n = neuronById(state.view, id)!;
          for (let k = 1; k < action.count; k++) {
            const x = n.x + k * action.dx;
            const y = n.y + k * action.dy;
            if (x < -1 || x > 1 || y < -1 || y > 1) {
              return rejected(state, `copy ${k} of neuron ${id} would leave the design plane`);
            }
          }
        }
      }
      return acceptedView(state, action);
    }

    case "DeleteSelection": {
      if (state.selection.length === 0) return rejected(state, "nothing selected");
      const { neuronIds, connKeys } = splitSelection(state.selection);
      for (const id of neuronIds) {
        const n = neuronById(state.view, id);
        if (!n) return rejected(state, `no neuron ${JSON.stringify(id)}`);
        if (n.role !== "hidden") {
          return rejected(state, `neuron ${id} is ${n.role}; only hidden neurons can be deleted`);
        }
      }
      for (const key of connKeys) {
        const [src = "", dst = ""] = key.split("->");
        if (!connectionByKey(state.view, src, dst)) return rejected(state, `no connection ${key}`);
      }
      return acceptedView(state, action, []);
    }

    default:
      return rejected(state, `unknown action ${JSON.stringify((action as { type: string }).type)}`);
  }
}

function elementExists(view: NetworkView, id: string): boolean {
  if (id.includes("->")) {
    const [src = "", dst = ""] = id.split("->");
    return view.connections.some((c) => c.src === src && c.dst === dst);
  }
  return view.neurons.some((n) => n.id === id);
}

function dedupe(ids: readonly string[]): string[] {
  return [...new Set(ids)];
}
