/** Graph view model: a pure function of the API response sequence.
 *
 * New nodes arrive with their query's step color and keep it for the rest
 * of the session; edges mirror the wire format keyed by (src, dst, rel).
 * Positions come from the deterministic force layout with already-placed
 * nodes pinned, so earlier steps do not jump when later results land.
 */

import { forceLayout } from "./layout.js";
import { stepColor } from "./palette.js";
import type { EdgeJson, GraphJson, NodeJson, QueryResponse } from "./types.js";

export interface ViewNode {
    id: string;
    kind: string;
    title: string;
    step: number;
    color: string;
    attrs: Record<string, string>;
    x: number;
    y: number;
}

export interface ViewEdge {
    id: string;
    src: string;
    dst: string;
    rel: string;
    label: string;
    count: number;
    timestamps: number[];
}

export interface ApplyDelta {
    step: number | null;
    addedNodes: string[];
    addedEdges: string[];
}

export function relLabel(rel: string): string {
    if (rel === "@spawn") {
        return "spawn";
    }
    if (rel === "@unit") {
        return "unit of";
    }
    return rel;
}

export function edgeKey(edge: Pick<EdgeJson, "src" | "dst" | "rel">): string {
    return `${edge.src}>${edge.dst}:${edge.rel}`;
}

export class GraphViewModel {
    readonly nodes = new Map<string, ViewNode>();
    readonly edges = new Map<string, ViewEdge>();
    selection: string | null = null;
    highlighted = new Set<string>();

    applyResponse(response: QueryResponse): ApplyDelta {
        const delta: ApplyDelta = {
            step: response.step ?? null,
            addedNodes: [],
            addedEdges: [],
        };
        const graph = response.graph;
        if (!graph) {
            return delta; // config acknowledgements change nothing
        }
        for (const node of graph.nodes) {
            const existing = this.nodes.get(node.sig);
            if (existing) {
                // already discovered: the original step color sticks
                continue;
            }
            this.nodes.set(node.sig, {
                id: node.sig,
                kind: node.kind,
                title: node.title,
                step: node.step,
                color: stepColor(node.step),
                attrs: { ...node.attrs },
                x: 0,
                y: 0,
            });
            delta.addedNodes.push(node.sig);
        }
        for (const edge of graph.edges) {
            const key = edgeKey(edge);
            const existing = this.edges.get(key);
            if (existing) {
                existing.count = edge.count;
                existing.timestamps = [...edge.timestamps];
                existing.label = this.edgeLabel(edge);
                continue;
            }
            this.edges.set(key, {
                id: key,
                src: edge.src,
                dst: edge.dst,
                rel: edge.rel,
                label: this.edgeLabel(edge),
                count: edge.count,
                timestamps: [...edge.timestamps],
            });
            delta.addedEdges.push(key);
        }
        if (delta.addedNodes.length > 0) {
            this.reflow(new Set(delta.addedNodes));
        }
        return delta;
    }

    private edgeLabel(edge: EdgeJson): string {
        const base = relLabel(edge.rel);
        return edge.count > 1 ? `${base} ×${edge.count}` : base;
    }

    private reflow(fresh: Set<string>): void {
        const layoutNodes = [...this.nodes.values()].map((node) => ({
            id: node.id,
            x: fresh.has(node.id) ? undefined : node.x,
            y: fresh.has(node.id) ? undefined : node.y,
            pinned: !fresh.has(node.id),
        }));
        const layoutEdges = [...this.edges.values()].map((e) => ({
            src: e.src,
            dst: e.dst,
        }));
        const placed = forceLayout(layoutNodes, layoutEdges, {
            seed: this.nodes.size,
        });
        for (const [id, point] of placed) {
            const node = this.nodes.get(id);
            if (node) {
                node.x = point.x;
                node.y = point.y;
            }
        }
    }

    select(id: string | null): void {
        this.selection = id && this.nodes.has(id) ? id : null;
    }

    selected(): ViewNode | null {
        return this.selection ? this.nodes.get(this.selection) ?? null : null;
    }

    setHighlight(ids: Iterable<string>): void {
        this.highlighted = new Set(ids);
    }

    incidentEdges(id: string): ViewEdge[] {
        return [...this.edges.values()].filter(
            (e) => e.src === id || e.dst === id,
        );
    }

    /** Canonical sorted form for comparisons and snapshot tests. */
    snapshot(): {
        nodes: { sig: string; kind: string; title: string; step: number; color: string }[];
        edges: { src: string; dst: string; rel: string; count: number }[];
    } {
        const nodes = [...this.nodes.values()]
            .map((n) => ({
                sig: n.id,
                kind: n.kind,
                title: n.title,
                step: n.step,
                color: n.color,
            }))
            .sort((a, b) => (a.sig < b.sig ? -1 : a.sig > b.sig ? 1 : 0));
        const edges = [...this.edges.values()]
            .map((e) => ({ src: e.src, dst: e.dst, rel: e.rel, count: e.count }))
            .sort((a, b) => {
                const ka = edgeKey(a);
                const kb = edgeKey(b);
                return ka < kb ? -1 : ka > kb ? 1 : 0;
            });
        return { nodes, edges };
    }
}

export function graphNodeSet(graph: GraphJson): Set<string> {
    return new Set(graph.nodes.map((n: NodeJson) => n.sig));
}

export function graphEdgeSet(graph: GraphJson): Set<string> {
    return new Set(graph.edges.map((e: EdgeJson) => edgeKey(e)));
}
