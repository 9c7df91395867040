/**
 * Deterministic mapping from editor actions to workbench-service request
 * bodies. Local-only actions (Undo, SwitchMode, SelectElements) map to an
 * explicit none-payload so the effect layer can treat every action uniformly.
 */

import { EditorAction, EditorState, isViewChanging, splitSelection } from "./editor.js";
import { connectionKey } from "./schema.js";

export type EditBody =
  | { kind: "add_neuron"; role: "hidden"; x: number; y: number }
  | { kind: "remove_neuron"; neuron_id: string }
  | { kind: "move_neuron"; neuron_id: string; x: number; y: number }
  | { kind: "add_connection"; src: string; dst: string; weight: number }
  | { kind: "remove_connection"; src: string; dst: string }
  | { kind: "set_weight"; src: string; dst: string; weight: number };

export type AnnotationBody =
  | { kind: "mirror_x"; params: Record<string, never>; members: string[][] }
  | { kind: "repeat"; params: { dx: number; dy: number; count: number }; members: string[][] };

export type ServicePayload =
  | { kind: "none" }
  | { kind: "edit"; body: EditBody }
  | { kind: "edits"; bodies: EditBody[] }
  | { kind: "annotate"; annotation: AnnotationBody }
  | { kind: "breed"; body: { selections: string[] } };

/**
 * DeleteSelection resolves against the selection captured in state, so the
 * state is required for it and ignored by every other action.
 */
export function toServicePayload(action: EditorAction, state?: EditorState): ServicePayload {
  switch (action.type) {
    case "DragNeuron":
      return { kind: "edit", body: { kind: "move_neuron", neuron_id: action.id, x: action.x, y: action.y } };
    case "AddNeuronAt":
      return { kind: "edit", body: { kind: "add_neuron", role: "hidden", x: action.x, y: action.y } };
    case "ConnectGesture":
      return {
        kind: "edit",
        body: { kind: "add_connection", src: action.src, dst: action.dst, weight: action.weight },
      };
    case "SetWeightInspector":
      return {
        kind: "edit",
        body: { kind: "set_weight", src: action.src, dst: action.dst, weight: action.weight },
      };
    case "DeleteSelection": {
      if (!state) throw new TypeError("DeleteSelection payload needs the editor state");
      const { neuronIds, connKeys } = splitSelection(state.selection);
      const bodies: EditBody[] = [];
      const removed = new Set<string>();
      // connections first (explicit ones, then those attached to doomed neurons)
      for (const key of [...connKeys].sort()) {
        const [src = "", dst = ""] = key.split("->");
        bodies.push({ kind: "remove_connection", src, dst });
        removed.add(key);
      }
      const doomed = new Set(neuronIds);
      const attached = state.view.connections
        .filter((c) => (doomed.has(c.src) || doomed.has(c.dst)) && !removed.has(connectionKey(c.src, c.dst)))
        .sort((a, b) => connectionKey(a.src, a.dst).localeCompare(connectionKey(b.src, b.dst)));
      for (const c of attached) {
        bodies.push({ kind: "remove_connection", src: c.src, dst: c.dst });
      }
      for (const id of [...neuronIds].sort()) {
        bodies.push({ kind: "remove_neuron", neuron_id: id });
      }
      return { kind: "edits", bodies };
    }
    case "MarkMirror":
      return {
        kind: "annotate",
        annotation: { kind: "mirror_x", params: {}, members: action.members.map((m) => [m[0], m[1]]) },
      };
    case "MarkRepeat":
      return {
        kind: "annotate",
        annotation: {
          kind: "repeat",
          params: { dx: action.dx, dy: action.dy, count: action.count },
          members: action.members.map((m) => [m[0], m[1]]),
        },
      };
    case "PickCandidates":
      return { kind: "breed", body: { selections: [...action.ids] } };
    case "SelectElements":
    case "SwitchMode":
    case "Undo":
      return { kind: "none" };
  }
}

/**
 * What the effect layer actually sends after a reduce: nothing unless the
 * reducer accepted the action. In Select/Watch mode every view-changing
 * gesture is rejected by reduce, so no edit payload can escape those modes.
 */
export function emittedPayload(prev: EditorState, action: EditorAction, next: EditorState): ServicePayload {
  if (next.diagnostics.length > 0) return { kind: "none" };
  if (isViewChanging(action) && next.view === prev.view) return { kind: "none" };
  if (action.type === "PickCandidates") return toServicePayload(action, prev);
  if (!isViewChanging(action)) return { kind: "none" };
  return toServicePayload(action, prev);
}
