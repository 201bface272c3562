/** Live monitoring panel fed by the server-sent event stream.
 *
 * Keeps the notification list (with jump-to-graph highlighting), a badge
 * count, and the ingest-stats series for the sparkline. Stream drops
 * reconnect with exponential backoff; notifications dedupe on their id so
 * a replay after reconnect cannot double-count the badge.
 */

import type { GraphViewModel } from "./viewmodel.js";
import type { NotificationEvent, ServerEvent, StatsEvent } from "./types.js";

export interface EventStream {
    close(): void;
}

export type StreamConnector = (handlers: {
    onEvent: (event: ServerEvent) => void;
    onError: () => void;
}) => EventStream;

export type Scheduler = (fn: () => void, delayMs: number) => void;

export interface StatsPoint {
    ts: number;
    nodes: number;
    edges: number;
}

export class LiveMonitorPanel {
    readonly notifications: NotificationEvent[] = [];
    readonly statsSeries: StatsPoint[] = [];
    badge = 0;
    reconnects = 0;
    private seen = new Set<number>();
    private backoffMs: number;
    private stream: EventStream | null = null;
    private stopped = false;

    constructor(
        private readonly connect: StreamConnector,
        private readonly options: {
            baseBackoffMs?: number;
            maxBackoffMs?: number;
            maxStatsPoints?: number;
            scheduler?: Scheduler;
        } = {},
    ) {
        this.backoffMs = options.baseBackoffMs ?? 500;
    }

    start(): void {
        this.stopped = false;
        this.attach();
    }

    stop(): void {
        this.stopped = true;
        this.stream?.close();
        this.stream = null;
    }

    private attach(): void {
        this.stream = this.connect({
            onEvent: (event) => this.handleEvent(event),
            onError: () => this.handleDrop(),
        });
    }

    private handleDrop(): void {
        if (this.stopped) {
            return;
        }
        this.stream?.close();
        this.stream = null;
        this.reconnects += 1;
        const delay = this.backoffMs;
        this.backoffMs = Math.min(
            this.backoffMs * 2,
            this.options.maxBackoffMs ?? 30_000,
        );
        const schedule = this.options.scheduler
            ?? ((fn: () => void, ms: number) => setTimeout(fn, ms));
        schedule(() => {
            if (!this.stopped) {
                this.attach();
            }
        }, delay);
    }

    private handleEvent(event: ServerEvent): void {
        this.backoffMs = this.options.baseBackoffMs ?? 500; // healthy again
        if (event.type === "stats") {
            this.recordStats(event);
        } else if (event.type === "notification") {
            this.recordNotification(event);
        }
    }

    private recordStats(event: StatsEvent): void {
        this.statsSeries.push({
            ts: event.ts,
            nodes: event.store.nodes,
            edges: event.store.edges,
        });
        const cap = this.options.maxStatsPoints ?? 300;
        if (this.statsSeries.length > cap) {
            this.statsSeries.splice(0, this.statsSeries.length - cap);
        }
    }

    private recordNotification(event: NotificationEvent): void {
        if (this.seen.has(event.id)) {
            return; // replayed after a reconnect
        }
        this.seen.add(event.id);
        this.notifications.unshift(event);
        this.badge += 1;
    }

    /** Clicking a notification jumps to the graph with its delta lit up. */
    open(notification: NotificationEvent, model: GraphViewModel): void {
        model.setHighlight(notification.added_nodes.map((n) => n.sig));
        this.badge = Math.max(0, this.badge - 1);
    }
}

/** Browser-side connector over EventSource; tests inject fakes instead. */
export function eventSourceConnector(url: string): StreamConnector {
    return ({ onEvent, onError }) => {
        const source = new EventSource(url);
        const parse = (raw: MessageEvent) => {
            try {
                onEvent(JSON.parse(raw.data as string) as ServerEvent);
            } catch {
                // malformed frame: ignore, the stream itself is healthy
            }
        };
        source.addEventListener("stats", parse);
        source.addEventListener("notification", parse);
        source.onerror = () => onError();
        return { close: () => source.close() };
    };
}
