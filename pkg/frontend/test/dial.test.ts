import assert from "node:assert/strict";
import { test } from "node:test";

import { detentAngleDeg, labelFor, modeFromPoint } from "../src/dial.js";

test("five detents fan across the top, OFF on the left", () => {
  assert.equal(detentAngleDeg(0), -60);
  assert.equal(detentAngleDeg(2), 0);
  assert.equal(detentAngleDeg(4), 60);
  assert.throws(() => detentAngleDeg(7));
});

test("clicking a detent position selects that mode", () => {
  for (const mode of [0, 1, 2, 3, 4]) {
    const a = (detentAngleDeg(mode) * Math.PI) / 180;
    const dx = Math.sin(a) * 50;
    const dy = -Math.cos(a) * 50;
    assert.equal(modeFromPoint(dx, dy), mode);
  }
});

test("clicks between detents snap to the nearest", () => {
  // 10 degrees: nearest detent is mode 2 (0 deg) vs mode 3 (30 deg).
  const a = (10 * Math.PI) / 180;
  assert.equal(modeFromPoint(Math.sin(a) * 50, -Math.cos(a) * 50), 2);
});

test("labels", () => {
  assert.equal(labelFor(0), "OFF");
  assert.equal(labelFor(3), "3");
});
