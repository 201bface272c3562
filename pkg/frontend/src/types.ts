/** Wire format served by the engine's HTTP API. */

export interface NodeJson {
    sig: string;
    kind: string;
    title: string;
    step: number;
    attrs: Record<string, string>;
}

export interface EdgeJson {
    src: string;
    dst: string;
    rel: string;
    count: number;
    timestamps: number[];
}

export interface GraphJson {
    nodes: NodeJson[];
    edges: EdgeJson[];
}

export interface QueryStats {
    seeds: number;
    visited: number;
    elapsed_ms: number;
    backend_calls: number;
    warning: string | null;
}

export interface QueryResponse {
    step?: number;
    stats?: QueryStats;
    graph?: GraphJson;
    config?: string;
}

export interface SessionGraphResponse {
    step: number;
    graph: GraphJson;
}

export interface MonitorInfo {
    id: number;
    text: string;
    interval_ms: number;
    fingerprint: string;
    nodes: number;
    edges: number;
}

export interface NotificationEvent {
    type: "notification";
    id: number;
    monitor_id: number;
    ts_ms: number;
    added_nodes: { sig: string; title: string }[];
    added_edges: { src: string; dst: string; rel: string; count: number }[];
    removed: { sig: string; title: string }[];
}

export interface StatsEvent {
    type: "stats";
    ts: number;
    ingest: Record<string, number>;
    store: {
        nodes: number;
        edges: number;
        usage_bytes: number;
        pending: number;
        evicted_any: boolean;
    };
}

export type ServerEvent = NotificationEvent | StatsEvent;
