// World (LLF meters, ENU: x east, y north) to canvas pixels and back.
// Screen y grows downward, so north is negated on the way in.

export interface EllipseAxes {
  majorM: number;
  minorM: number;
  angleRad: number; // major-axis direction, radians CCW from east
}

export class Viewport {
  constructor(
    public width: number,
    public height: number,
    public centerX = 0, // meters at the canvas center
    public centerY = 0,
    public scale = 3.0, // pixels per meter
  ) {}

  worldToScreen(x: number, y: number): [number, number] {
    return [
      this.width / 2 + (x - this.centerX) * this.scale,
      this.height / 2 - (y - this.centerY) * this.scale,
    ];
  }

  screenToWorld(px: number, py: number): [number, number] {
    return [
      this.centerX + (px - this.width / 2) / this.scale,
      this.centerY - (py - this.height / 2) / this.scale,
    ];
  }

  panByPixels(dx: number, dy: number): void {
    this.centerX -= dx / this.scale;
    this.centerY += dy / this.scale;
  }

  zoomAt(px: number, py: number, factor: number): void {
    const [wx, wy] = this.screenToWorld(px, py);
    this.scale = Math.min(50, Math.max(0.2, this.scale * factor));
    // Keep the anchor point stationary on screen.
    this.centerX = wx - (px - this.width / 2) / this.scale;
    this.centerY = wy + (py - this.height / 2) / this.scale;
  }

  fit(points: [number, number][], marginM = 30): void {
    if (points.length === 0) return;
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
export function covarianceEllipse(cov: [[number, number], [number, number]]): EllipseAxes {
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
