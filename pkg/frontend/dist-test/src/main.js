// Console wiring: the human plays the boat team. Drag the beacon glyph to
// steer it, click the five-position dial to command a mode, recall the
// fleet with one button, and watch estimates against truth.
import { detentAngleDeg, DIAL_POSITIONS, labelFor, modeFromPoint } from "./dial.js";
import { ViewModel } from "./model.js";
import { ConsoleLink } from "./net.js";
import { render } from "./render.js";
import { Viewport } from "./viewport.js";
const RECALL_MODE = 3; // return-and-surface in both shipped missions
function el(id) {
    const node = document.getElementById(id);
    if (!node)
        throw new Error(`missing element #${id}`);
    return node;
}
function bridgeUrl() {
    const params = new URLSearchParams(location.search);
    return params.get("bridge") ?? `ws://${location.hostname || "127.0.0.1"}:8765/sim`;
}
function main() {
    const canvas = el("map");
    const ctx = canvas.getContext("2d");
    const model = new ViewModel();
    const vp = new Viewport(canvas.width, canvas.height, 40, -60, 3.0);
    const link = new ConsoleLink(bridgeUrl());
    const banner = el("banner");
    const statusEl = el("status");
    const timeEl = el("simtime");
    const redraw = () => {
        render(ctx, vp, model);
        drawDial(model.snapshot?.beacon.mode ?? 0);
        if (model.schemaMismatch) {
            banner.textContent = "schema version mismatch: update the console";
            banner.style.display = "block";
        }
        if (model.snapshot) {
            timeEl.textContent = `t=${model.snapshot.t.toFixed(0)}s` +
                (model.snapshot.paused ? " [paused]" : "");
        }
    };
    model.onChange = redraw;
    link.onFrame = (frame) => {
        if (frame.type === "hello")
            model.ingestHello(frame);
        else if (frame.type === "snapshot")
            model.ingestSnapshot(frame);
        else
            console.warn("bridge error:", frame.message);
    };
    link.onStatus = (connected, queued) => {
        model.setConnection(connected ? "connected" : "disconnected");
        statusEl.textContent = connected
            ? "connected"
            : `disconnected${queued ? ` (${queued} queued)` : ""}`;
        statusEl.className = connected ? "ok" : "warn";
    };
    link.connect();
    // -- beacon dragging ----------------------------------------------------
    let dragging = false;
    canvas.addEventListener("mousedown", (ev) => {
        const snap = model.snapshot;
        if (!snap)
            return;
        const [bx, by] = vp.worldToScreen(snap.beacon.x, snap.beacon.y);
        if (Math.hypot(ev.offsetX - bx, ev.offsetY - by) < 14) {
            dragging = true;
        }
        else {
            const pan = { x: ev.offsetX, y: ev.offsetY };
            const move = (m) => {
                vp.panByPixels(m.offsetX - pan.x, m.offsetY - pan.y);
                pan.x = m.offsetX;
                pan.y = m.offsetY;
                redraw();
            };
            const up = () => {
                canvas.removeEventListener("mousemove", move);
                canvas.removeEventListener("mouseup", up);
            };
            canvas.addEventListener("mousemove", move);
            canvas.addEventListener("mouseup", up);
        }
    });
    canvas.addEventListener("mouseup", (ev) => {
        if (!dragging)
            return;
        dragging = false;
        const [x, y] = vp.screenToWorld(ev.offsetX, ev.offsetY);
        link.send({ type: "set_beacon_target", x, y });
    });
    canvas.addEventListener("wheel", (ev) => {
        ev.preventDefault();
        vp.zoomAt(ev.offsetX, ev.offsetY, ev.deltaY < 0 ? 1.15 : 1 / 1.15);
        redraw();
    });
    // -- mode dial ------------------------------------------------------------
    const dial = el("dial");
    const dctx = dial.getContext("2d");
    function drawDial(active) {
        const r = dial.width / 2;
        dctx.clearRect(0, 0, dial.width, dial.height);
        dctx.fillStyle = "#18222f";
        dctx.beginPath();
        dctx.arc(r, r, r - 4, 0, 2 * Math.PI);
        dctx.fill();
        for (const mode of DIAL_POSITIONS) {
            const a = (detentAngleDeg(mode) * Math.PI) / 180;
            const lx = r + Math.sin(a) * (r - 14);
            const ly = r - Math.cos(a) * (r - 14);
            dctx.fillStyle = mode === active ? "#f2c744" : "#7c8aa0";
            dctx.font = "11px monospace";
            dctx.textAlign = "center";
            dctx.fillText(labelFor(mode), lx, ly + 4);
        }
        const a = (detentAngleDeg(active) * Math.PI) / 180;
        dctx.strokeStyle = "#f2c744";
        dctx.lineWidth = 3;
        dctx.beginPath();
        dctx.moveTo(r, r);
        dctx.lineTo(r + Math.sin(a) * (r - 26), r - Math.cos(a) * (r - 26));
        dctx.stroke();
    }
    dial.addEventListener("click", (ev) => {
        const r = dial.width / 2;
        const mode = modeFromPoint(ev.offsetX - r, ev.offsetY - r);
        link.send({ type: "set_mode", mode });
    });
    // -- buttons --------------------------------------------------------------
    el("recall").addEventListener("click", () => {
        link.send({ type: "set_mode", mode: RECALL_MODE });
    });
    el("pause").addEventListener("click", () => {
        link.send({ type: model.snapshot?.paused ? "resume" : "pause" });
    });
    for (const name of ["truth", "estimate", "ellipses", "trails", "lbl"]) {
        const box = el(`ov-${name}`);
        box.checked = model.overlays[name];
        box.addEventListener("change", () => {
            model.overlays[name] = box.checked;
            redraw();
        });
    }
    drawDial(0);
}
window.addEventListener("load", main);
