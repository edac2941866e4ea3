// Wire protocol for the bridge WebSocket: JSON text frames, one endpoint.
// Every frame carries "type"; the console consumes hello/snapshot/error and
// emits command frames. Commands are validated before they leave the UI so
// a buggy control can never corrupt the simulation.
export const SCHEMA_VERSION = 1;
export const PROTOCOL = "relnav-bridge";
export class ProtocolError extends Error {
}
export function validateCommand(cmd) {
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
            throw new ProtocolError(`unknown command ${cmd.type}`);
    }
}
export function commandFrame(cmd) {
    return JSON.stringify({ type: "command", command: validateCommand(cmd) });
}
export function parseServerFrame(raw) {
    let frame;
    try {
        frame = JSON.parse(raw);
    }
    catch {
        throw new ProtocolError("frame is not JSON");
    }
    const type = frame.type;
    if (type === "hello" || type === "snapshot" || type === "error") {
        return frame;
    }
    throw new ProtocolError(`unknown frame type ${type}`);
}
export function schemaCompatible(frame) {
    return frame.schema_version === SCHEMA_VERSION;
}
