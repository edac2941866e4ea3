import assert from "node:assert/strict";
import { test } from "node:test";

import { ViewModel } from "../src/model.js";
import { Snapshot, SCHEMA_VERSION } from "../src/protocol.js";

function snapshot(t: number, extra: Partial<Snapshot> = {}): Snapshot {
  return {
    type: "snapshot",
    schema_version: SCHEMA_VERSION,
    t,
    paused: false,
    time_scale: 1,
    beacon: { x: 110, y: -70, mode: 1, target: null },
    vehicles: {
      platypus: {
        truth: [10, -5],
        est_abs: [11, -6],
        cov: [[4, 0], [0, 4]],
        converged: true,
        sigma_major: 2,
        mode: 1,
        depth: 2.5,
        surfaced: false,
        lbl: null,
        trail: [],
      },
    },
    ...extra,
  };
}

test("snapshot ingestion is latest-wins", () => {
  const model = new ViewModel();
  model.ingestSnapshot(snapshot(1));
  model.ingestSnapshot(snapshot(2));
  model.ingestSnapshot(snapshot(3));
  assert.equal(model.snapshot?.t, 3);
});

test("reopening reproduces the picture from the next snapshot alone", () => {
  const longRunning = new ViewModel();
  for (let t = 0; t < 50; t++) longRunning.ingestSnapshot(snapshot(t));
  const fresh = new ViewModel();
  fresh.ingestSnapshot(snapshot(49));
  assert.deepEqual(fresh.snapshot, longRunning.snapshot);
});

test("schema mismatch raises the banner and stops consumption", () => {
  const model = new ViewModel();
  model.ingestHello({ type: "hello", schema_version: 99, protocol: "relnav-bridge" });
  assert.ok(model.schemaMismatch);
  model.ingestSnapshot(snapshot(5));
  assert.equal(model.snapshot, null);
});

test("mismatched snapshot version also stops consumption", () => {
  const model = new ViewModel();
  model.ingestSnapshot(snapshot(1));
  model.ingestSnapshot({ ...snapshot(2), schema_version: 2 });
  assert.ok(model.schemaMismatch);
  assert.equal(model.snapshot?.t, 1);
});

test("first vehicle is auto-selected", () => {
  const model = new ViewModel();
  model.ingestSnapshot(snapshot(0));
  assert.equal(model.selectedVehicle, "platypus");
});

test("change notifications fire on ingest", () => {
  const model = new ViewModel();
  let calls = 0;
  model.onChange = () => calls++;
  model.ingestSnapshot(snapshot(0));
  model.setConnection("connected");
  assert.equal(calls, 2);
});
