import assert from "node:assert/strict";
import { test } from "node:test";

import { covarianceEllipse, Viewport } from "../src/viewport.js";

test("world-screen round trip", () => {
  const vp = new Viewport(800, 600, 40, -60, 3.0);
  for (const [x, y] of [[0, 0], [110, -70], [-40, -125], [17.05, 1.78]] as const) {
    const [px, py] = vp.worldToScreen(x, y);
    const [bx, by] = vp.screenToWorld(px, py);
    assert.ok(Math.abs(bx - x) < 1e-9 && Math.abs(by - y) < 1e-9);
  }
});

test("north is up: larger y means smaller screen y", () => {
  const vp = new Viewport(800, 600);
  const [, pyLow] = vp.worldToScreen(0, 0);
  const [, pyHigh] = vp.worldToScreen(0, 50);
  assert.ok(pyHigh < pyLow);
});

test("drag release inverts through the viewport (100 m east)", () => {
  const vp = new Viewport(1000, 700, 40, -60, 3.0);
  const [px, py] = vp.worldToScreen(10, -70);
  const [wx, wy] = vp.screenToWorld(px + 100 * vp.scale, py);
  assert.ok(Math.abs(wx - 110) < 1e-9);
  assert.ok(Math.abs(wy + 70) < 1e-9);
});

test("zoom keeps the anchor point fixed", () => {
  const vp = new Viewport(800, 600, 10, 20, 2.0);
  const [ax, ay] = [600, 150];
  const before = vp.screenToWorld(ax, ay);
  vp.zoomAt(ax, ay, 1.5);
  const after = vp.screenToWorld(ax, ay);
  assert.ok(Math.abs(after[0] - before[0]) < 1e-9);
  assert.ok(Math.abs(after[1] - before[1]) < 1e-9);
});

test("a 15 m sigma ellipse spans exactly the 15 m scale bar", () => {
  // Pixel-measure check against a known transform: sigma 15 m isotropic.
  const vp = new Viewport(800, 600, 0, 0, 4.0);
  const axes = covarianceEllipse([[225, 0], [0, 225]]);
  assert.ok(Math.abs(axes.majorM - 15) < 1e-9);
  assert.ok(Math.abs(axes.minorM - 15) < 1e-9);
  const radiusPx = axes.majorM * vp.scale;
  const [x0] = vp.worldToScreen(0, 0);
  const [x1] = vp.worldToScreen(15, 0);
  assert.ok(Math.abs(radiusPx - (x1 - x0)) < 1e-9);
});

test("anisotropic covariance major axis and angle", () => {
  // Variance 100 along 45 degrees, 25 across it.
  const c = Math.SQRT1_2;
  const r = [[c, -c], [c, c]];
  const d = [[100, 0], [0, 25]];
  const cov = [
    [
      r[0][0] * d[0][0] * r[0][0] + r[0][1] * d[1][1] * r[0][1],
      r[0][0] * d[0][0] * r[1][0] + r[0][1] * d[1][1] * r[1][1],
    ],
    [
      r[1][0] * d[0][0] * r[0][0] + r[1][1] * d[1][1] * r[0][1],
      r[1][0] * d[0][0] * r[1][0] + r[1][1] * d[1][1] * r[1][1],
    ],
  ] as [[number, number], [number, number]];
  const axes = covarianceEllipse(cov);
  assert.ok(Math.abs(axes.majorM - 10) < 1e-9);
  assert.ok(Math.abs(axes.minorM - 5) < 1e-9);
  const angle = ((axes.angleRad * 180) / Math.PI + 180) % 180;
  assert.ok(Math.abs(angle - 45) < 1e-6);
});

test("fit frames all points", () => {
  const vp = new Viewport(800, 600);
  vp.fit([[0, 0], [200, -100]]);
  for (const [x, y] of [[0, 0], [200, -100]] as const) {
    const [px, py] = vp.worldToScreen(x, y);
    assert.ok(px >= 0 && px <= 800 && py >= 0 && py <= 600);
  }
});
