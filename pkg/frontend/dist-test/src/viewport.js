// World (LLF meters, ENU: x east, y north) to canvas pixels and back.
// Screen y grows downward, so north is negated on the way in.
export class Viewport {
    width;
    height;
    centerX;
    centerY;
    scale;
    constructor(width, height, centerX = 0, // meters at the canvas center
    centerY = 0, scale = 3.0) {
        this.width = width;
        this.height = height;
        this.centerX = centerX;
        this.centerY = centerY;
        this.scale = scale;
    }
    worldToScreen(x, y) {
        return [
            this.width / 2 + (x - this.centerX) * this.scale,
            this.height / 2 - (y - this.centerY) * this.scale,
        ];
    }
    screenToWorld(px, py) {
        return [
            this.centerX + (px - this.width / 2) / this.scale,
            this.centerY - (py - this.height / 2) / this.scale,
        ];
    }
    panByPixels(dx, dy) {
        this.centerX -= dx / this.scale;
        this.centerY += dy / this.scale;
    }
    zoomAt(px, py, factor) {
        const [wx, wy] = this.screenToWorld(px, py);
        this.scale = Math.min(50, Math.max(0.2, this.scale * factor));
        // Keep the anchor point stationary on screen.
        this.centerX = wx - (px - this.width / 2) / this.scale;
        this.centerY = wy + (py - this.height / 2) / this.scale;
    }
    fit(points, marginM = 30) {
        if (points.length === 0)
            return;
        const xs = points.map((p) => p[0]);
        const ys = points.map((p) => p[1]);
        const minX = Math.min(...xs) - marginM;
        const maxX = Math.max(...xs) + marginM;
        const minY = Math.min(...ys) - marginM;
        const maxY = Math.max(...ys) + marginM;
        this.centerX = (minX + maxX) / 2;
        this.centerY = (minY + maxY) / 2;
        this.scale = Math.min(this.width / (maxX - minX), this.height / (maxY - minY));
    }
}
// 1-sigma axes of a 2x2 covariance via its eigen-decomposition.
export function covarianceEllipse(cov) {
    const [[a, b], [, d]] = cov;
    const tr = a + d;
    const det = a * d - b * b;
    const disc = Math.sqrt(Math.max(0, (tr * tr) / 4 - det));
    const l1 = tr / 2 + disc;
    const l2 = tr / 2 - disc;
    const angleRad = Math.abs(b) < 1e-12 && a >= d ? 0 : Math.atan2(l1 - a, b === 0 ? 1e-12 : b);
    return {
        majorM: Math.sqrt(Math.max(0, l1)),
        minorM: Math.sqrt(Math.max(0, l2)),
        angleRad,
    };
}
