/** Query console state: the box, inline errors, and the iterative flow
 * where each result's new nodes attach to the prior steps' graph. */

import { ApiClient, ApiError } from "./api.js";
import type { ApplyDelta } from "./viewmodel.js";
import { GraphViewModel } from "./viewmodel.js";

export interface InlineError {
    message: string;
    caret: number | null;
}

export class QueryConsole {
    readonly model = new GraphViewModel();
    readonly history: string[] = [];
    queryText = "";
    error: InlineError | null = null;
    private sessionId: string | null = null;

    constructor(private readonly api: ApiClient) {}

    async ensureSession(): Promise<string> {
        if (this.sessionId === null) {
            this.sessionId = await this.api.createSession();
        }
        return this.sessionId;
    }

    /** POST the text; on success the delta animates in with the new step's
     * color, on a 400 the graph stays untouched and the error is shown
     * inline with the caret position. */
    async submitQuery(text: string): Promise<ApplyDelta | null> {
        const sessionId = await this.ensureSession();
        this.error = null;
        try {
            const response = await this.api.query(sessionId, text);
            this.history.push(text);
            return this.model.applyResponse(response);
        } catch (err) {
            if (err instanceof ApiError) {
                this.error = { message: err.message, caret: err.caret };
                return null;
            }
            throw err;
        }
    }

    /** Prefill generated query text (context actions land here). */
    prefill(text: string): void {
        this.queryText = text;
    }
}
