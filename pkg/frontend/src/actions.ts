/** Node context actions.
 *
 * Back/forward tracking generates the next query's text and prefills the
 * query box -- the analyst confirms before anything runs. Inspect opens
 * the detail panel with attributes and edge timestamps.
 */

import type { ViewEdge, ViewNode } from "./viewmodel.js";

export type ContextAction = "backtrack" | "forwardtrack" | "inspect";

/** Node kinds as the query language spells them. */
const KIND_KEYWORD: Record<string, string> = {
    file: "file",
    socket: "soc",
    process: "process",
    thread: "thread",
    execution_unit: "unit",
    pipe: "pipe",
};

export interface InspectDetail {
    title: string;
    kind: string;
    step: number;
    attrs: Record<string, string>;
    edges: {
        label: string;
        direction: "in" | "out";
        count: number;
        first: number;
        last: number;
        timestamps: number[];
    }[];
}

export function backTrackQuery(node: Pick<ViewNode, "kind" | "title">): string {
    const kind = KIND_KEYWORD[node.kind] ?? "*";
    return `back select * from ${kind} where name is ${node.title}`;
}

export function forwardTrackQuery(
    node: Pick<ViewNode, "kind" | "title" | "attrs">,
): string {
    const kind = KIND_KEYWORD[node.kind] ?? "*";
    let text = `forward select * from ${kind} where name is ${node.title}`;
    const pid = node.attrs["pid"];
    if (pid) {
        text += ` and pid is ${pid}`;
    }
    return text;
}

export function inspectDetail(node: ViewNode, incident: ViewEdge[]): InspectDetail {
    return {
        title: node.title,
        kind: node.kind,
        step: node.step,
        attrs: { ...node.attrs },
        edges: incident.map((edge) => ({
            label: edge.label,
            direction: edge.dst === node.id ? "in" : "out",
            count: edge.count,
            first: edge.timestamps[0] ?? 0,
            last: edge.timestamps[edge.timestamps.length - 1] ?? 0,
            timestamps: [...edge.timestamps],
        })),
    };
}

export function nodeContextAction(
    node: ViewNode,
    action: ContextAction,
    incident: ViewEdge[] = [],
): string | InspectDetail {
    switch (action) {
        case "backtrack":
            return backTrackQuery(node);
        case "forwardtrack":
            return forwardTrackQuery(node);
        case "inspect":
            return inspectDetail(node, incident);
    }
}
