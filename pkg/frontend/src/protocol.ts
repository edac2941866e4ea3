// Wire protocol for the bridge WebSocket: JSON text frames, one endpoint.
// Every frame carries "type"; the console consumes hello/snapshot/error and
// emits command frames. Commands are validated before they leave the UI so
// a buggy control can never corrupt the simulation.

export const SCHEMA_VERSION = 1;
export const PROTOCOL = "relnav-bridge";

export interface TrailPoint {
  t: number;
  truth: [number, number];
  est: [number, number];
}

export interface VehicleSnapshot {
  truth: [number, number];
  est_abs: [number, number];
  cov: [[number, number], [number, number]];
  converged: boolean;
  sigma_major: number;
  mode: number | null;
  depth: number;
  surfaced: boolean;
  lbl: [number, number] | null;
  trail: TrailPoint[];
}

export interface Snapshot {
  type: "snapshot";
  schema_version: number;
  t: number;
  paused: boolean;
  time_scale: number | null;
  beacon: { x: number; y: number; mode: number; target: [number, number] | null };
  vehicles: Record<string, VehicleSnapshot>;
}

export interface Hello {
  type: "hello";
  schema_version: number;
  protocol: string;
}

export interface ErrorFrame {
  type: "error";
  message: string;
}

export type ServerFrame = Snapshot | Hello | ErrorFrame;

export type Command =
  | { type: "set_mode"; mode: number; at?: number }
  | { type: "set_beacon_target"; x: number; y: number; at?: number }
  | { type: "pause" }
  | { type: "resume" }
  | { type: "set_time_scale"; scale: number };

export class ProtocolError extends Error {}

export function validateCommand(cmd: Command): Command {
  switch (cmd.type) {
    case "set_mode":
      if (!Number.isInteger(cmd.mode) || cmd.mode < 0 || cmd.mode > 4) {
        throw new ProtocolError(`mode must be an integer 0..4, got ${cmd.mode}`);
      }
      return cmd;
    case "set_beacon_target":
      if (!Number.isFinite(cmd.x) || !Number.isFinite(cmd.y)) {
        throw new ProtocolError("beacon target needs finite x, y");
      }
      return cmd;
    case "set_time_scale":
      if (!Number.isFinite(cmd.scale) || cmd.scale <= 0) {
        throw new ProtocolError("time scale must be positive");
      }
      return cmd;
    case "pause":
    case "resume":
      return cmd;
    default:
      throw new ProtocolError(`unknown command ${(cmd as { type: string }).type}`);
  }
}

export function commandFrame(cmd: Command): string {
  return JSON.stringify({ type: "command", command: validateCommand(cmd) });
}

export function parseServerFrame(raw: string): ServerFrame {
  let frame: unknown;
  try {
    frame = JSON.parse(raw);
  } catch {
    throw new ProtocolError("frame is not JSON");
  }
  const type = (frame as { type?: string }).type;
  if (type === "hello" || type === "snapshot" || type === "error") {
    return frame as ServerFrame;
  }
  throw new ProtocolError(`unknown frame type ${type}`);
}

export function schemaCompatible(frame: Hello | Snapshot): boolean {
  return frame.schema_version === SCHEMA_VERSION;
}
