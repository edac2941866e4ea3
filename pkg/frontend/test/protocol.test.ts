import assert from "node:assert/strict";
import { test } from "node:test";

import {
  commandFrame,
  parseServerFrame,
  ProtocolError,
  schemaCompatible,
  SCHEMA_VERSION,
  validateCommand,
} from "../src/protocol.js";

test("dial positions map to set_mode frames", () => {
  for (const mode of [0, 1, 2, 3, 4]) {
    const frame = JSON.parse(commandFrame({ type: "set_mode", mode }));
    assert.equal(frame.type, "command");
    assert.deepEqual(frame.command, { type: "set_mode", mode });
  }
});

test("invalid modes are rejected before leaving the console", () => {
  assert.throws(() => validateCommand({ type: "set_mode", mode: 5 }), ProtocolError);
  assert.throws(() => validateCommand({ type: "set_mode", mode: 1.5 }), ProtocolError);
  assert.throws(
    () => validateCommand({ type: "set_mode", mode: Number.NaN }),
    ProtocolError,
  );
});

test("beacon target frames carry finite coordinates", () => {
  const frame = JSON.parse(commandFrame({ type: "set_beacon_target", x: 110, y: -70 }));
  assert.deepEqual(frame.command, { type: "set_beacon_target", x: 110, y: -70 });
  assert.throws(
    () => validateCommand({ type: "set_beacon_target", x: Infinity, y: 0 }),
    ProtocolError,
  );
});

test("time scale must be positive", () => {
  assert.throws(() => validateCommand({ type: "set_time_scale", scale: 0 }), ProtocolError);
  assert.equal(
    JSON.parse(commandFrame({ type: "set_time_scale", scale: 10 })).command.scale,
    10,
  );
});

test("server frames parse by type and junk is refused", () => {
  const hello = parseServerFrame(
    JSON.stringify({ type: "hello", schema_version: SCHEMA_VERSION, protocol: "relnav-bridge" }),
  );
  assert.equal(hello.type, "hello");
  const err = parseServerFrame(JSON.stringify({ type: "error", message: "nope" }));
  assert.equal(err.type, "error");
  assert.throws(() => parseServerFrame("not json"), ProtocolError);
  assert.throws(() => parseServerFrame(JSON.stringify({ type: "telemetry" })), ProtocolError);
});

test("schema compatibility check", () => {
  assert.ok(schemaCompatible({ type: "hello", schema_version: SCHEMA_VERSION, protocol: "x" }));
  assert.ok(!schemaCompatible({ type: "hello", schema_version: 99, protocol: "x" }));
});
