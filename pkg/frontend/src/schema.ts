/**
 * View-model for a spatially embedded network plus its regularity
 * annotations, with strict anet/1 (de)serialization.
 *
 * Validation mirrors the service's rules so gestures can be vetted locally
 * before a request is made; the service stays authoritative.
 */

export type Role = "input" | "bias" | "hidden" | "output";

export interface NeuronView {
  readonly id: string;
  readonly role: Role;
  readonly x: number;
  readonly y: number;
}

export interface ConnectionView {
  readonly src: string;
  readonly dst: string;
  readonly weight: number;
}

export type MemberKey = readonly [string, string];

export type AnnotationView =
  | { readonly kind: "mirror_x"; readonly members: readonly MemberKey[] }
  | {
      readonly kind: "repeat";
      readonly members: readonly MemberKey[];
      readonly dx: number;
      readonly dy: number;
      readonly count: number;
    };

export interface NetworkView {
  readonly neurons: readonly NeuronView[];
  readonly connections: readonly ConnectionView[];
  readonly inputOrder: readonly string[];
  readonly outputOrder: readonly string[];
  readonly annotations: readonly AnnotationView[];
}

export const DELTA_MIN = 0.05;
export const WEIGHT_MIN = 0.05;
export const WEIGHT_MAX = 3.0;
export const ROLES: readonly Role[] = ["input", "bias", "hidden", "output"];
export const ANET_SCHEMA = "anet/1";

const ID_RE = /^[A-Za-z_][A-Za-z0-9_]*$/;

export class SchemaError extends Error {}

export function connectionKey(src: string, dst: string): string {
  return `${src}->${dst}`;
}

/** Structural problems, empty when the view-model is well formed. */
export function validateNetwork(view: NetworkView): string[] {
  const problems: string[] = [];
  const seen = new Set<string>();
  for (const n of view.neurons) {
    if (!ID_RE.test(n.id)) problems.push(`neuron id ${JSON.stringify(n.id)} is not an identifier`);
    if (seen.has(n.id)) problems.push(`duplicate neuron id ${JSON.stringify(n.id)}`);
    seen.add(n.id);
    if (!ROLES.includes(n.role)) problems.push(`neuron ${n.id}: unknown role ${JSON.stringify(n.role)}`);
    if (!Number.isFinite(n.x) || !Number.isFinite(n.y)) {
      problems.push(`neuron ${n.id}: non-finite position`);
    } else if (n.x < -1 || n.x > 1 || n.y < -1 || n.y > 1) {
      problems.push(`neuron ${n.id}: position (${n.x}, ${n.y}) outside the design plane`);
    }
  }

  for (let i = 0; i < view.neurons.length; i++) {
    for (let j = i + 1; j < view.neurons.length; j++) {
      const a = view.neurons[i]!;
      const b = view.neurons[j]!;
      const d = Math.hypot(a.x - b.x, a.y - b.y);
      if (d < DELTA_MIN) {
        problems.push(`neurons ${a.id} and ${b.id} are ${d.toFixed(4)} apart (minimum ${DELTA_MIN})`);
      }
    }
  }

  const biases = view.neurons.filter((n) => n.role === "bias");
  if (biases.length > 1) problems.push(`${biases.length} bias neurons; at most one allowed`);

  const byId = new Map(view.neurons.map((n) => [n.id, n]));
  const seenKeys = new Set<string>();
  for (const c of view.connections) {
    const key = connectionKey(c.src, c.dst);
    if (seenKeys.has(key)) problems.push(`duplicate connection ${key}`);
    seenKeys.add(key);
    for (const end of [c.src, c.dst]) {
      if (!byId.has(end)) problems.push(`connection ${key}: unknown neuron ${JSON.stringify(end)}`);
    }
    const dstRole = byId.get(c.dst)?.role;
    if (dstRole === "input" || dstRole === "bias") {
      problems.push(`connection ${key}: destination role ${JSON.stringify(dstRole)} cannot receive connections`);
    }
    if (!Number.isFinite(c.weight)) {
      problems.push(`connection ${key}: non-finite weight`);
    } else if (Math.abs(c.weight) < WEIGHT_MIN || Math.abs(c.weight) > WEIGHT_MAX) {
      problems.push(
        `connection ${key}: |weight| ${Math.abs(c.weight).toFixed(4)} outside [${WEIGHT_MIN}, ${WEIGHT_MAX}]`,
      );
    }
  }

  const inputs = view.neurons.filter((n) => n.role === "input").map((n) => n.id);
  const outputs = view.neurons.filter((n) => n.role === "output").map((n) => n.id);
  if (!sameSet(view.inputOrder, inputs) || view.inputOrder.length !== inputs.length) {
    problems.push("input_order does not list every input neuron exactly once");
  }
  if (!sameSet(view.outputOrder, outputs) || view.outputOrder.length !== outputs.length) {
    problems.push("output_order does not list every output neuron exactly once");
  }

  const claimed = new Set<string>();
  for (const ann of view.annotations) {
    if (ann.members.length === 0) problems.push(`${ann.kind} annotation with no members`);
    for (const [src, dst] of ann.members) {
      const key = connectionKey(src, dst);
      if (!seenKeys.has(key)) problems.push(`${ann.kind} annotation references missing connection ${key}`);
      if (claimed.has(key)) problems.push(`connection ${key} claimed by two annotations`);
      claimed.add(key);
    }
    if (ann.kind === "repeat") {
      if (!Number.isInteger(ann.count) || ann.count < 2) {
        problems.push(`repeat count ${ann.count} must be an integer >= 2`);
      }
      if (!Number.isFinite(ann.dx) || !Number.isFinite(ann.dy)) {
        problems.push("repeat offset must be finite");
      }
    }
  }
  return problems;
}

function sameSet(a: readonly string[], b: readonly string[]): boolean {
  const sa = new Set(a);
  const sb = new Set(b);
  if (sa.size !== sb.size) return false;
  for (const v of sa) if (!sb.has(v)) return false;
  return true;
}

// -- anet/1 wire format ------------------------------------------------------

export function toAnetData(view: NetworkView): Record<string, unknown> {
  return {
    schema: ANET_SCHEMA,
    neurons: view.neurons.map((n) => ({ id: n.id, role: n.role, x: n.x, y: n.y })),
    connections: view.connections.map((c) => ({ src: c.src, dst: c.dst, weight: c.weight })),
    input_order: [...view.inputOrder],
    output_order: [...view.outputOrder],
    annotations: view.annotations.map((a) =>
      a.kind === "mirror_x"
        ? { kind: "mirror_x", params: {}, members: a.members.map((m) => [m[0], m[1]]) }
        : {
            kind: "repeat",
            params: { dx: a.dx, dy: a.dy, count: a.count },
            members: a.members.map((m) => [m[0], m[1]]),
          },
    ),
  };
}

function expectKeys(obj: Record<string, unknown>, keys: readonly string[], where: string): void {
  const allowed = new Set(keys);
  for (const k of Object.keys(obj)) {
    if (!allowed.has(k)) throw new SchemaError(`${where}: unknown key ${JSON.stringify(k)}`);
  }
  for (const k of keys) {
    if (!(k in obj)) throw new SchemaError(`${where}: missing key ${JSON.stringify(k)}`);
  }
}

function asObject(value: unknown, where: string): Record<string, unknown> {
  if (typeof value !== "object" || value === null || Array.isArray(value)) {
    throw new SchemaError(`${where}: expected an object`);
  }
  return value as Record<string, unknown>;
}

function asString(value: unknown, where: string): string {
  if (typeof value !== "string") throw new SchemaError(`${where}: expected a string`);
  return value;
}

function asNumber(value: unknown, where: string): number {
  if (typeof value !== "number") throw new SchemaError(`${where}: expected a number`);
  return value;
}

function asArray(value: unknown, where: string): unknown[] {
  if (!Array.isArray(value)) throw new SchemaError(`${where}: expected an array`);
  return value;
}

export function fromAnetData(data: unknown): NetworkView {
  const doc = asObject(data, "document");
  expectKeys(
    doc,
    ["schema", "neurons", "connections", "input_order", "output_order", "annotations"],
    "document",
  );
  if (doc.schema !== ANET_SCHEMA) {
    throw new SchemaError(`expected schema ${JSON.stringify(ANET_SCHEMA)}, got ${JSON.stringify(doc.schema)}`);
  }
  const neurons = asArray(doc.neurons, "neurons").map((raw, i) => {
    const n = asObject(raw, `neurons[${i}]`);
    expectKeys(n, ["id", "role", "x", "y"], `neurons[${i}]`);
    const role = asString(n.role, `neurons[${i}].role`);
    if (!ROLES.includes(role as Role)) throw new SchemaError(`neurons[${i}]: unknown role ${JSON.stringify(role)}`);
    return {
      id: asString(n.id, `neurons[${i}].id`),
      role: role as Role,
      x: asNumber(n.x, `neurons[${i}].x`),
      y: asNumber(n.y, `neurons[${i}].y`),
    };
  });
  const connections = asArray(doc.connections, "connections").map((raw, i) => {
    const c = asObject(raw, `connections[${i}]`);
    expectKeys(c, ["src", "dst", "weight"], `connections[${i}]`);
    return {
      src: asString(c.src, `connections[${i}].src`),
      dst: asString(c.dst, `connections[${i}].dst`),
      weight: asNumber(c.weight, `connections[${i}].weight`),
    };
  });
  const annotations = asArray(doc.annotations, "annotations").map((raw, i) => {
    const a = asObject(raw, `annotations[${i}]`);
    expectKeys(a, ["kind", "params", "members"], `annotations[${i}]`);
    const members = asArray(a.members, `annotations[${i}].members`).map((pair, j) => {
      const arr = asArray(pair, `annotations[${i}].members[${j}]`);
      if (arr.length !== 2) throw new SchemaError(`annotations[${i}].members[${j}]: expected [src, dst]`);
      return [
        asString(arr[0], `annotations[${i}].members[${j}][0]`),
        asString(arr[1], `annotations[${i}].members[${j}][1]`),
      ] as const;
    });
    const params = asObject(a.params, `annotations[${i}].params`);
    if (a.kind === "mirror_x") {
      expectKeys(params, [], `annotations[${i}].params`);
      return { kind: "mirror_x" as const, members };
    }
    if (a.kind === "repeat") {
      expectKeys(params, ["dx", "dy", "count"], `annotations[${i}].params`);
      return {
        kind: "repeat" as const,
        members,
        dx: asNumber(params.dx, `annotations[${i}].params.dx`),
        dy: asNumber(params.dy, `annotations[${i}].params.dy`),
        count: asNumber(params.count, `annotations[${i}].params.count`),
      };
    }
    throw new SchemaError(`annotations[${i}]: unknown kind ${JSON.stringify(a.kind)}`);
  });
  const view: NetworkView = {
    neurons,
    connections,
    inputOrder: asArray(doc.input_order, "input_order").map((v, i) => asString(v, `input_order[${i}]`)),
    outputOrder: asArray(doc.output_order, "output_order").map((v, i) => asString(v, `output_order[${i}]`)),
    annotations,
  };
  const problems = validateNetwork(view);
  if (problems.length > 0) throw new SchemaError(`invalid network: ${problems.join("; ")}`);
  return view;
}
