import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { GraphJson, QueryResponse } from "../src/types.js";

export interface MaldropFixture {
    queries: { text: string; response: QueryResponse }[];
    session_graph: GraphJson;
    engine_colors: Record<string, string>;
}

const here = dirname(fileURLToPath(import.meta.url));

export function loadMaldrop(): MaldropFixture {
    const raw = readFileSync(join(here, "..", "fixtures", "maldrop.json"), "utf-8");
    return JSON.parse(raw) as MaldropFixture;
}
