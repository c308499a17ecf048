/** Layout for the loss-bucket flow diagram. Every number here is either a
 * weight copied from the payload or an integer sum of payload weights;
 * nothing is recomputed from metrics. */

import type { SankeyEdgeJson, SankeyJson } from "./types.js";

export interface SankeyNodeLayout {
  name: string;
  depth: number;
  total: number;
  x0: number;
  x1: number;
  y0: number;
  y1: number;
}

export interface SankeyLinkLayout {
  from: string;
  to: string;
  weight: number;
  width: number;
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

export interface SankeyLayout {
  nodes: SankeyNodeLayout[];
  links: SankeyLinkLayout[];
}

/** Throughput per node: the larger of what flows in and what flows out.
 * For the root that is its outgoing sum; for leaves the incoming sum. */
export function nodeTotals(data: SankeyJson): Map<string, number> {
  const totals = new Map<string, number>();
  const inSum = new Map<string, number>();
  const outSum = new Map<string, number>();
  for (const name of data.nodes) {
    inSum.set(name, 0);
    outSum.set(name, 0);
  }
  for (const edge of data.edges) {
    outSum.set(edge.from, (outSum.get(edge.from) ?? 0) + edge.weight);
    inSum.set(edge.to, (inSum.get(edge.to) ?? 0) + edge.weight);
  }
  for (const name of data.nodes) {
    totals.set(name, Math.max(inSum.get(name) ?? 0, outSum.get(name) ?? 0));
  }
  return totals;
}

/** Column of each node: roots sit at depth 0, every edge pushes its target
 * one column past its source. The graph is a small DAG so a fixpoint loop
 * is plenty. */
export function nodeDepths(data: SankeyJson): Map<string, number> {
  const depths = new Map<string, number>();
  for (const name of data.nodes) depths.set(name, 0);
  let changed = true;
  let guard = 0;
  while (changed && guard < data.nodes.length + 2) {
    changed = false;
    guard += 1;
    for (const edge of data.edges) {
      const want = (depths.get(edge.from) ?? 0) + 1;
      if ((depths.get(edge.to) ?? 0) < want) {
        depths.set(edge.to, want);
        changed = true;
      }
    }
  }
  return depths;
}

export function layoutSankey(
  data: SankeyJson,
  width: number,
  height: number,
  options: { nodeWidth?: number; gap?: number } = {},
): SankeyLayout {
  const nodeWidth = options.nodeWidth ?? 14;
  const gap = options.gap ?? 10;
  const totals = nodeTotals(data);
  const depths = nodeDepths(data);

  const columns = new Map<number, string[]>();
  for (const name of data.nodes) {
    const depth = depths.get(name) ?? 0;
    const column = columns.get(depth) ?? [];
    column.push(name);
    columns.set(depth, column);
  }
  const depthCount = Math.max(...columns.keys()) + 1;

  // One vertical scale for the whole diagram keeps ribbon widths
  // comparable across columns; conservation then holds by construction.
  let unitsPerPixel = 0;
  for (const [, names] of columns) {
    const used = names.reduce((acc, n) => acc + (totals.get(n) ?? 0), 0);
    const free = height - gap * Math.max(0, names.length - 1);
    if (free > 0) unitsPerPixel = Math.max(unitsPerPixel, used / free);
  }
  const scale = unitsPerPixel > 0 ? 1 / unitsPerPixel : 0;

  const nodes: SankeyNodeLayout[] = [];
  const byName = new Map<string, SankeyNodeLayout>();
  const columnSpacing = depthCount > 1 ? (width - nodeWidth) / (depthCount - 1) : 0;
  for (const [depth, names] of [...columns.entries()].sort((a, b) => a[0] - b[0])) {
    const contentHeight =
      names.reduce((acc, n) => acc + (totals.get(n) ?? 0), 0) * scale +
      gap * Math.max(0, names.length - 1);
    let y = (height - contentHeight) / 2;
    for (const name of names) {
      const total = totals.get(name) ?? 0;
      const x0 = depth * columnSpacing;
      const node: SankeyNodeLayout = {
        name,
        depth,
        total,
        x0,
        x1: x0 + nodeWidth,
        y0: y,
        y1: y + total * scale,
      };
      nodes.push(node);
      byName.set(name, node);
      y = node.y1 + gap;
    }
  }

  // Stack each node's links in payload order on both faces so ribbon
  // widths tile the node exactly.
  const outCursor = new Map<string, number>();
  const inCursor = new Map<string, number>();
  const links: SankeyLinkLayout[] = [];
  for (const edge of data.edges) {
    const source = byName.get(edge.from);
    const target = byName.get(edge.to);
    if (!source || !target) continue;
    const ribbon = edge.weight * scale;
    const sy = source.y0 + (outCursor.get(edge.from) ?? 0);
    const ty = target.y0 + (inCursor.get(edge.to) ?? 0);
    outCursor.set(edge.from, (outCursor.get(edge.from) ?? 0) + ribbon);
    inCursor.set(edge.to, (inCursor.get(edge.to) ?? 0) + ribbon);
    links.push({
      from: edge.from,
      to: edge.to,
      weight: edge.weight,
      width: ribbon,
      x0: source.x1,
      y0: sy + ribbon / 2,
      x1: target.x0,
      y1: ty + ribbon / 2,
    });
  }
  return { nodes, links };
}

export function linkPath(link: SankeyLinkLayout): string {
  const mid = (link.x0 + link.x1) / 2;
  return `M ${link.x0} ${link.y0} C ${mid} ${link.y0}, ${mid} ${link.y1}, ${link.x1} ${link.y1}`;
}

export function edgeLookup(data: SankeyJson): Map<string, SankeyEdgeJson> {
  return new Map(data.edges.map((e) => [`${e.from}->${e.to}`, e]));
}
