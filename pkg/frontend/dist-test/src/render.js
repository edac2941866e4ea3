// Canvas map: ENU meters grid, beacon and vehicle glyphs, trails,
// 1-sigma covariance ellipses, and a scale bar. All drawing reads only the
// latest snapshot through the view model.
import { covarianceEllipse } from "./viewport.js";
const VEHICLE_COLORS = ["#e0484d", "#3a7bd5", "#32a852", "#c08a2e"];
export function vehicleColor(index) {
    return VEHICLE_COLORS[index % VEHICLE_COLORS.length];
}
export function render(ctx, vp, model) {
    ctx.fillStyle = "#0c1420";
    ctx.fillRect(0, 0, vp.width, vp.height);
    drawGrid(ctx, vp);
    const snap = model.snapshot;
    if (!snap)
        return;
    const names = model.vehicleNames();
    names.forEach((name, i) => {
        drawVehicle(ctx, vp, model, snap.vehicles[name], name, vehicleColor(i), name === model.selectedVehicle);
    });
    drawBeacon(ctx, vp, snap);
    drawScaleBar(ctx, vp);
}
function drawGrid(ctx, vp) {
    const stepM = gridStep(vp.scale);
    const [minX, maxY] = vp.screenToWorld(0, 0);
    const [maxX, minY] = vp.screenToWorld(vp.width, vp.height);
    ctx.strokeStyle = "#1c2a3c";
    ctx.lineWidth = 1;
    ctx.fillStyle = "#44566c";
    ctx.font = "10px monospace";
    for (let x = Math.ceil(minX / stepM) * stepM; x <= maxX; x += stepM) {
        const [px] = vp.worldToScreen(x, 0);
        ctx.beginPath();
        ctx.moveTo(px, 0);
        ctx.lineTo(px, vp.height);
        ctx.stroke();
        ctx.fillText(`${x}`, px + 2, vp.height - 4);
    }
    for (let y = Math.ceil(minY / stepM) * stepM; y <= maxY; y += stepM) {
        const [, py] = vp.worldToScreen(0, y);
        ctx.beginPath();
        ctx.moveTo(0, py);
        ctx.lineTo(vp.width, py);
        ctx.stroke();
        ctx.fillText(`${y}`, 4, py - 2);
    }
}
export function gridStep(scale) {
    for (const step of [5, 10, 20, 50, 100, 200]) {
        if (step * scale >= 60)
            return step;
    }
    return 500;
}
function drawBeacon(ctx, vp, snap) {
    const [px, py] = vp.worldToScreen(snap.beacon.x, snap.beacon.y);
    if (snap.beacon.target) {
        const [tx, ty] = vp.worldToScreen(snap.beacon.target[0], snap.beacon.target[1]);
        ctx.strokeStyle = "#f2c744";
        ctx.setLineDash([4, 4]);
        ctx.beginPath();
        ctx.moveTo(px, py);
        ctx.lineTo(tx, ty);
        ctx.stroke();
        ctx.setLineDash([]);
        ctx.strokeRect(tx - 4, ty - 4, 8, 8);
    }
    ctx.fillStyle = snap.beacon.mode > 0 ? "#f2c744" : "#6b6b6b";
    ctx.beginPath();
    ctx.moveTo(px, py - 8);
    ctx.lineTo(px + 7, py + 6);
    ctx.lineTo(px - 7, py + 6);
    ctx.closePath();
    ctx.fill();
    ctx.fillStyle = "#dfe7f1";
    ctx.font = "11px monospace";
    ctx.fillText(snap.beacon.mode > 0 ? `beacon M${snap.beacon.mode}` : "beacon OFF", px + 10, py + 4);
}
function drawVehicle(ctx, vp, model, v, name, color, selected) {
    const dim = v.converged ? 1.0 : 0.35; // unconverged estimates render dimmed
    if (model.overlays.trails) {
        ctx.globalAlpha = 0.5;
        ctx.strokeStyle = color;
        ctx.lineWidth = 1;
        ctx.beginPath();
        v.trail.forEach((p, i) => {
            const [px, py] = vp.worldToScreen(p.est[0], p.est[1]);
            if (i === 0)
                ctx.moveTo(px, py);
            else
                ctx.lineTo(px, py);
        });
        ctx.stroke();
        ctx.globalAlpha = 1.0;
    }
    if (model.overlays.ellipses) {
        const axes = covarianceEllipse(v.cov);
        const [cx, cy] = vp.worldToScreen(v.est_abs[0], v.est_abs[1]);
        ctx.globalAlpha = 0.35 * dim;
        ctx.strokeStyle = color;
        ctx.lineWidth = 1.5;
        ctx.beginPath();
        ctx.ellipse(cx, cy, axes.majorM * vp.scale, axes.minorM * vp.scale, -axes.angleRad, 0, 2 * Math.PI);
        ctx.stroke();
        ctx.globalAlpha = 1.0;
    }
    if (model.overlays.truth) {
        const [px, py] = vp.worldToScreen(v.truth[0], v.truth[1]);
        ctx.strokeStyle = "#cfd8e3";
        ctx.lineWidth = 1.5;
        ctx.beginPath();
        ctx.moveTo(px - 5, py - 5);
        ctx.lineTo(px + 5, py + 5);
        ctx.moveTo(px - 5, py + 5);
        ctx.lineTo(px + 5, py - 5);
        ctx.stroke();
    }
    if (model.overlays.lbl && v.lbl) {
        const [px, py] = vp.worldToScreen(v.lbl[0], v.lbl[1]);
        ctx.fillStyle = "#8fd0ff";
        ctx.fillRect(px - 2, py - 2, 4, 4);
    }
    if (model.overlays.estimate) {
        const [px, py] = vp.worldToScreen(v.est_abs[0], v.est_abs[1]);
        ctx.globalAlpha = dim;
        ctx.fillStyle = color;
        ctx.beginPath();
        ctx.arc(px, py, selected ? 6 : 4.5, 0, 2 * Math.PI);
        ctx.fill();
        ctx.globalAlpha = 1.0;
        ctx.fillStyle = "#dfe7f1";
        ctx.font = "11px monospace";
        const tag = v.surfaced ? `${name} (surfaced)` : `${name} M${v.mode ?? "?"}`;
        ctx.fillText(tag, px + 8, py - 6);
    }
}
function drawScaleBar(ctx, vp) {
    const meters = gridStep(vp.scale);
    const px = meters * vp.scale;
    const x0 = vp.width - px - 20;
    const y0 = vp.height - 16;
    ctx.strokeStyle = "#dfe7f1";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(x0, y0);
    ctx.lineTo(x0 + px, y0);
    ctx.stroke();
    ctx.fillStyle = "#dfe7f1";
    ctx.font = "11px monospace";
    ctx.fillText(`${meters} m`, x0 + px / 2 - 12, y0 - 5);
}
