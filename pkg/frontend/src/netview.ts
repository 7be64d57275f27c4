import type { NetworkDoc } from "./types.js";

export class SceneError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SceneError";
  }
}

export interface SceneNode {
  id: number;
  kind: "client" | "server";
  x: number;
  y: number;
}

export interface SceneLink {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
  failed: boolean;
}

export interface Scene {
  width: number;
  height: number;
  nodes: SceneNode[];
  links: SceneLink[];
}

export interface Viewport {
  width: number;
  height: number;
  pad: number;
}

function num(value: unknown, what: string): number {
  if (typeof value !== "number" || !Number.isFinite(value)) {
    throw new SceneError(`${what} is not a finite number`);
  }
  return value;
}

/**
 * Map a network document onto viewport coordinates. Positions come straight
 * from the document's grid coordinates through a single affine transform
 * (uniform scale, centered); nothing is re-laid-out. Throws SceneError on
 * anything malformed so the caller can keep its last good frame.
 */
export function buildScene(doc: unknown, view: Viewport): Scene {
  if (typeof doc !== "object" || doc === null) throw new SceneError("network document is not an object");
  const net = doc as Partial<NetworkDoc>;
  if (net.format !== "evonet.network") throw new SceneError(`unknown document format: ${String(net.format)}`);
  if (!Array.isArray(net.nodes) || !Array.isArray(net.edges)) {
    throw new SceneError("network document lacks nodes/edges arrays");
  }

  const positions = new Map<number, { x: number; y: number }>();
  const parsed: { id: number; kind: "client" | "server"; x: number; y: number }[] = [];
  for (const node of net.nodes) {
    const id = num(node?.id, "node id");
    if (node.kind !== "client" && node.kind !== "server") {
      throw new SceneError(`node ${id} has unknown kind ${String(node?.kind)}`);
    }
    const x = num(node.x, `node ${id} x`);
    const y = num(node.y, `node ${id} y`);
    if (positions.has(id)) throw new SceneError(`duplicate node id ${id}`);
    positions.set(id, { x, y });
    parsed.push({ id, kind: node.kind, x, y });
  }

  // uniform affine map from the grid bounding box into the padded viewport
  const xs = parsed.map((n) => n.x);
  const ys = parsed.map((n) => n.y);
  const minX = Math.min(...xs, 0);
  const minY = Math.min(...ys, 0);
  const spanX = Math.max(Math.max(...xs, 0) - minX, 1);
  const spanY = Math.max(Math.max(...ys, 0) - minY, 1);
  const scale = Math.min((view.width - 2 * view.pad) / spanX, (view.height - 2 * view.pad) / spanY);
  const offX = (view.width - spanX * scale) / 2;
  const offY = (view.height - spanY * scale) / 2;
  const toView = (x: number, y: number) => ({
    x: offX + (x - minX) * scale,
    y: offY + (y - minY) * scale,
  });

  const nodes: SceneNode[] = parsed.map((n) => {
    const p = toView(n.x, n.y);
    return { id: n.id, kind: n.kind, x: p.x, y: p.y };
  });

  const links: SceneLink[] = net.edges.map((edge, i) => {
    const ends = edge?.endpoints;
    if (!Array.isArray(ends) || ends.length !== 2) throw new SceneError(`edge ${i} has malformed endpoints`);
    const a = positions.get(num(ends[0], `edge ${i} endpoint`));
    const b = positions.get(num(ends[1], `edge ${i} endpoint`));
    if (!a || !b) throw new SceneError(`edge ${i} references an unknown node`);
    if (edge.state !== "working" && edge.state !== "failed") {
      throw new SceneError(`edge ${i} has unknown state ${String(edge?.state)}`);
    }
    const pa = toView(a.x, a.y);
    const pb = toView(b.x, b.y);
    return { x1: pa.x, y1: pa.y, x2: pb.x, y2: pb.y, failed: edge.state === "failed" };
  });

  return { width: view.width, height: view.height, nodes, links };
}

/** Scene -> SVG inner markup. Clients render as circles, servers as squares,
 * failed links dashed; pure string building so it stays testable. */
export function sceneSvg(scene: Scene): string {
  const parts: string[] = [];
  for (const link of scene.links) {
    const cls = link.failed ? "link failed" : "link";
    parts.push(
      `<line class="${cls}" x1="${fmt(link.x1)}" y1="${fmt(link.y1)}" x2="${fmt(link.x2)}" y2="${fmt(link.y2)}"/>`,
    );
  }
  for (const node of scene.nodes) {
    if (node.kind === "server") {
      parts.push(
        `<rect class="node server" x="${fmt(node.x - 6)}" y="${fmt(node.y - 6)}" width="12" height="12"><title>server ${node.id}</title></rect>`,
      );
    } else {
      parts.push(
        `<circle class="node client" cx="${fmt(node.x)}" cy="${fmt(node.y)}" r="4.5"><title>client ${node.id}</title></circle>`,
      );
    }
  }
  return parts.join("");
}

function fmt(v: number): string {
  return String(Math.round(v * 100) / 100);
}
