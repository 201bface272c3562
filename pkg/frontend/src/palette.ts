/** Investigation-step colors, shared with the engine's DOT exporter.
 * Must stay byte-identical to the server palette: step 1 red, 2 white,
 * 3 gray, 4 cyan, 5 green, cycling; step 0 is plain store contents. */

export const STEP_PALETTE = ["red", "white", "gray", "cyan", "green"] as const;

export const STORE_COLOR = "lightgray";

export function stepColor(step: number): string {
    if (step <= 0) {
        return STORE_COLOR;
    }
    return STEP_PALETTE[(step - 1) % STEP_PALETTE.length]!;
}
