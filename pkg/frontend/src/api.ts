/** Thin client for the engine's HTTP API.
 *
 * Fetch is injectable for tests. Server-side 400s carry the parser's
 * message verbatim; when it names a position, the caret offset is parsed
 * out so the query box can point at the offending token.
 */

import type {
    MonitorInfo,
    QueryResponse,
    SessionGraphResponse,
} from "./types.js";

export type FetchLike = (
    input: string,
    init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{
    ok: boolean;
    status: number;
    json(): Promise<unknown>;
    text(): Promise<string>;
}>;

export class ApiError extends Error {
    constructor(
        message: string,
        readonly status: number,
        readonly caret: number | null,
    ) {
        super(message);
        this.name = "ApiError";
    }
}

export function caretFromMessage(message: string): number | null {
    const match = /at position (\d+)/.exec(message);
    return match ? Number(match[1]) : null;
}

export class ApiClient {
    constructor(
        private readonly base: string = "",
        private readonly fetchImpl: FetchLike = fetch as unknown as FetchLike,
    ) {}

    private async request<T>(path: string, init?: {
        method?: string;
        body?: unknown;
    }): Promise<T> {
        const response = await this.fetchImpl(this.base + path, {
            method: init?.method ?? "GET",
            headers: init?.body !== undefined
                ? { "content-type": "application/json" }
                : undefined,
            body: init?.body !== undefined ? JSON.stringify(init.body) : undefined,
        });
        const payload = (await response.json()) as Record<string, unknown>;
        if (!response.ok) {
            const detail = typeof payload["detail"] === "string"
                ? (payload["detail"] as string)
                : JSON.stringify(payload);
            throw new ApiError(detail, response.status, caretFromMessage(detail));
        }
        return payload as T;
    }

    async createSession(): Promise<string> {
        const body = await this.request<{ session_id: string }>(
            "/api/sessions", { method: "POST", body: {} });
        return body.session_id;
    }

    query(sessionId: string, text: string): Promise<QueryResponse> {
        return this.request<QueryResponse>(
            `/api/sessions/${sessionId}/query`,
            { method: "POST", body: { text } });
    }

    sessionGraph(sessionId: string): Promise<SessionGraphResponse> {
        return this.request<SessionGraphResponse>(`/api/sessions/${sessionId}/graph`);
    }

    addMonitor(text: string, intervalMs = 1000): Promise<MonitorInfo> {
        return this.request<MonitorInfo>(
            "/api/monitors",
            { method: "POST", body: { text, interval_ms: intervalMs } });
    }

    listMonitors(): Promise<MonitorInfo[]> {
        return this.request<MonitorInfo[]>("/api/monitors");
    }

    exportUrl(sessionId: string, format: "dot" | "json"): string {
        return `${this.base}/api/export/${sessionId}?format=${format}`;
    }
}
