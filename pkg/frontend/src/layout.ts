/** Deterministic layered graph layout.
 *
 * Layer = longest path from a root; within a layer nodes are ordered by id,
 * so the same graph always renders identically and screenshots are
 * comparable across runs.
 */

export interface Positioned {
  id: string;
  x: number;
  y: number;
  layer: number;
}

export interface LayoutOptions {
  columnWidth?: number;
  rowHeight?: number;
  marginX?: number;
  marginY?: number;
}

export function layeredLayout(
  nodeIds: string[],
  edges: [string, string][],
  opts: LayoutOptions = {},
): Map<string, Positioned> {
  const { columnWidth = 140, rowHeight = 90, marginX = 60, marginY = 50 } = opts;
  const ids = [...nodeIds].sort();
  const incoming = new Map<string, string[]>(ids.map((n) => [n, []]));
  const outgoing = new Map<string, string[]>(ids.map((n) => [n, []]));
  for (const [a, b] of edges) {
    outgoing.get(a)?.push(b);
    incoming.get(b)?.push(a);
  }

  // longest-path layering via Kahn's algorithm (inputs are acyclic)
  const layer = new Map<string, number>();
  const degree = new Map(ids.map((n) => [n, incoming.get(n)!.length]));
  const queue = ids.filter((n) => degree.get(n) === 0);
  queue.sort();
  while (queue.length > 0) {
    const v = queue.shift()!;
    const lv = layer.get(v) ?? 0;
    layer.set(v, lv);
    for (const w of [...outgoing.get(v)!].sort()) {
      layer.set(w, Math.max(layer.get(w) ?? 0, lv + 1));
      degree.set(w, degree.get(w)! - 1);
      if (degree.get(w) === 0) {
        queue.push(w);
        queue.sort();
      }
    }
  }

  const byLayer = new Map<number, string[]>();
  for (const id of ids) {
    const l = layer.get(id) ?? 0;
    if (!byLayer.has(l)) byLayer.set(l, []);
    byLayer.get(l)!.push(id);
  }

  const out = new Map<string, Positioned>();
  for (const [l, members] of [...byLayer.entries()].sort((a, b) => a[0] - b[0])) {
    members.sort();
    members.forEach((id, i) => {
      out.set(id, {
        id,
        layer: l,
        x: marginX + l * columnWidth,
        y: marginY + i * rowHeight,
      });
    });
  }
  return out;
}
