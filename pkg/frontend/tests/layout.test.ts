import { describe, expect, it } from "vitest";

import { forceLayout } from "../src/layout.js";

const nodes = ["a", "b", "c", "d"].map((id) => ({ id }));
const edges = [
    { src: "a", dst: "b" },
    { src: "b", dst: "c" },
    { src: "c", dst: "d" },
];

describe("force layout", () => {
    it("is deterministic for identical inputs", () => {
        const first = forceLayout(nodes, edges, { seed: 7 });
        const second = forceLayout(nodes, edges, { seed: 7 });
        expect([...first.entries()]).toEqual([...second.entries()]);
    });

    it("pinned nodes do not move", () => {
        const pinned = [
            { id: "a", x: 10, y: 20, pinned: true },
            { id: "b" },
            { id: "c" },
        ];
        const placed = forceLayout(pinned, edges, { seed: 3 });
        expect(placed.get("a")).toEqual({ x: 10, y: 20 });
    });

    it("keeps everything inside the canvas", () => {
        const placed = forceLayout(nodes, edges, { width: 300, height: 200 });
        for (const point of placed.values()) {
            expect(point.x).toBeGreaterThanOrEqual(0);
            expect(point.x).toBeLessThanOrEqual(300);
            expect(point.y).toBeGreaterThanOrEqual(0);
            expect(point.y).toBeLessThanOrEqual(200);
        }
    });

    it("separates connected components sensibly", () => {
        const placed = forceLayout(nodes, edges, { seed: 5 });
        const a = placed.get("a")!;
        const b = placed.get("b")!;
        const dist = Math.hypot(a.x - b.x, a.y - b.y);
        expect(dist).toBeGreaterThan(1);
    });
});
