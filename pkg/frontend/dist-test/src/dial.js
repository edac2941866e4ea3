// Five-position rotary dial mirroring the physical beacon switch:
// OFF plus modes 1..4, detents fanned across the top of the knob.
export const DIAL_POSITIONS = [0, 1, 2, 3, 4];
const SPAN_DEG = 120; // detents from -60 to +60 degrees around vertical
export function detentAngleDeg(mode) {
    const i = DIAL_POSITIONS.indexOf(mode);
    if (i < 0)
        throw new Error(`no dial position for mode ${mode}`);
    return -SPAN_DEG / 2 + (SPAN_DEG / (DIAL_POSITIONS.length - 1)) * i;
}
// Pointer position relative to the knob center -> nearest detent.
export function modeFromPoint(dx, dy) {
    const angle = (Math.atan2(dx, -dy) * 180) / Math.PI; // 0 = straight up
    let best = 0;
    let bestGap = Infinity;
    for (const mode of DIAL_POSITIONS) {
        const gap = Math.abs(angle - detentAngleDeg(mode));
        if (gap < bestGap) {
            bestGap = gap;
            best = mode;
        }
    }
    return best;
}
export function labelFor(mode) {
    return mode === 0 ? "OFF" : String(mode);
}
