/** Deterministic force-directed placement with pinned nodes.
 *
 * Presentation only: positions are a pure function of the node/edge sets
 * and the seed, so replays render identically. Pinned nodes keep their
 * coordinates and anchor the rest.
 */

export interface LayoutNode {
    id: string;
    x?: number;
    y?: number;
    pinned?: boolean;
}

export interface LayoutEdge {
    src: string;
    dst: string;
}

export interface LayoutOptions {
    width?: number;
    height?: number;
    iterations?: number;
    linkDistance?: number;
    seed?: number;
}

/** mulberry32: small deterministic PRNG, enough for jittered placement. */
function prng(seed: number): () => number {
    let a = seed >>> 0;
    return () => {
        a += 0x6d2b79f5;
        let t = a;
        t = Math.imul(t ^ (t >>> 15), t | 1);
        t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
        return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
    };
}

export function forceLayout(
    nodes: LayoutNode[],
    edges: LayoutEdge[],
    options: LayoutOptions = {},
): Map<string, { x: number; y: number }> {
    const width = options.width ?? 900;
    const height = options.height ?? 600;
    const iterations = options.iterations ?? 60;
    const link = options.linkDistance ?? 120;
    const rand = prng(options.seed ?? 1);

    const pos = new Map<string, { x: number; y: number; pinned: boolean }>();
    for (const node of nodes) {
        const x = node.x ?? (width / 2 + (rand() - 0.5) * width * 0.8);
        const y = node.y ?? (height / 2 + (rand() - 0.5) * height * 0.8);
        pos.set(node.id, { x, y, pinned: node.pinned ?? false });
    }

    const ids = nodes.map((n) => n.id);
    const springs = edges.filter((e) => pos.has(e.src) && pos.has(e.dst));
    const repulsion = (link * link) / 2;

    for (let pass = 0; pass < iterations; pass++) {
        const temp = 0.1 * (1 - pass / iterations) + 0.02;
        const force = new Map<string, { x: number; y: number }>();
        for (const id of ids) {
            force.set(id, { x: 0, y: 0 });
        }
        for (let i = 0; i < ids.length; i++) {
            for (let j = i + 1; j < ids.length; j++) {
                const a = pos.get(ids[i]!)!;
                const b = pos.get(ids[j]!)!;
                let dx = a.x - b.x;
                let dy = a.y - b.y;
                const dsq = Math.max(dx * dx + dy * dy, 1);
                const push = repulsion / dsq;
                dx *= push;
                dy *= push;
                const fa = force.get(ids[i]!)!;
                const fb = force.get(ids[j]!)!;
                fa.x += dx;
                fa.y += dy;
                fb.x -= dx;
                fb.y -= dy;
            }
        }
        for (const spring of springs) {
            const a = pos.get(spring.src)!;
            const b = pos.get(spring.dst)!;
            const dx = b.x - a.x;
            const dy = b.y - a.y;
            const dist = Math.max(Math.sqrt(dx * dx + dy * dy), 1);
            const pull = (dist - link) / dist;
            const fa = force.get(spring.src)!;
            const fb = force.get(spring.dst)!;
            fa.x += dx * pull * 0.5;
            fa.y += dy * pull * 0.5;
            fb.x -= dx * pull * 0.5;
            fb.y -= dy * pull * 0.5;
        }
        for (const id of ids) {
            const p = pos.get(id)!;
            if (p.pinned) {
                continue;
            }
            const f = force.get(id)!;
            p.x = Math.min(width, Math.max(0, p.x + f.x * temp));
            p.y = Math.min(height, Math.max(0, p.y + f.y * temp));
        }
    }

    const out = new Map<string, { x: number; y: number }>();
    for (const [id, p] of pos) {
        out.set(id, { x: p.x, y: p.y });
    }
    return out;
}
