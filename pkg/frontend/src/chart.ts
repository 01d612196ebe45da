// 2D planar chart in scenario coordinates: own ship, obstacles, the
// proposed path, safe-distance ring, pickup points, and a scale bar.
// No basemap; everything derives from the latest snapshot.

import type { Snapshot } from "./types.js";

export interface Viewport {
  scale: number; // px per meter
  offsetX: number; // px of world origin
  offsetY: number;
  width: number;
  height: number;
}

export function fitViewport(snap: Snapshot, width: number, height: number): Viewport {
  const xs: number[] = [snap.environment.own.x];
  const ys: number[] = [snap.environment.own.y];
  for (const o of snap.environment.obstacles) {
    xs.push(o.x);
    ys.push(o.y);
  }
  for (const [px, py] of snap.pickup_points) {
    xs.push(px);
    ys.push(py);
  }
  if (snap.path) {
    for (const w of snap.path.waypoints) {
      xs.push(w.x);
      ys.push(w.y);
    }
  }
  const pad = Math.max(snap.safe_distance * 2, 50);
  const minX = Math.min(...xs) - pad;
  const maxX = Math.max(...xs) + pad;
  const minY = Math.min(...ys) - pad;
  const maxY = Math.max(...ys) + pad;
  const scale = Math.min(width / (maxX - minX), height / (maxY - minY));
  return {
    scale,
    offsetX: -minX * scale + (width - (maxX - minX) * scale) / 2,
    // world y points north; canvas y points down
    offsetY: maxY * scale + (height - (maxY - minY) * scale) / 2,
    width,
    height,
  };
}

export function worldToPx(vp: Viewport, x: number, y: number): [number, number] {
  return [x * vp.scale + vp.offsetX, -y * vp.scale + vp.offsetY];
}

/** Largest round length (1/2/5 x 10^k meters) fitting in maxPx pixels. */
export function scaleBarMeters(vp: Viewport, maxPx = 140): number {
  const maxMeters = maxPx / vp.scale;
  let best = 1;
  for (const exp of [0, 1, 2, 3, 4]) {
    for (const m of [1, 2, 5]) {
      const candidate = m * 10 ** exp;
      if (candidate <= maxMeters) best = candidate;
    }
  }
  return best;
}

export function drawChart(ctx: CanvasRenderingContext2D, snap: Snapshot): void {
  const { width, height } = ctx.canvas;
  const vp = fitViewport(snap, width, height);
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#0b1c2c";
  ctx.fillRect(0, 0, width, height);

  if (snap.path) {
    ctx.strokeStyle = "#3f7f5f";
    ctx.lineWidth = 2;
    ctx.setLineDash([8, 6]);
    ctx.beginPath();
    snap.path.waypoints.forEach((w, i) => {
      const [px, py] = worldToPx(vp, w.x, w.y);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    ctx.stroke();
    ctx.setLineDash([]);
  }

  for (const [wx, wy] of snap.pickup_points) {
    const [px, py] = worldToPx(vp, wx, wy);
    ctx.strokeStyle = "#d9b44a";
    ctx.strokeRect(px - 5, py - 5, 10, 10);
  }

  for (const o of snap.environment.obstacles) {
    const [px, py] = worldToPx(vp, o.x, o.y);
    ctx.fillStyle = "#c65353";
    ctx.beginPath();
    ctx.arc(px, py, 5, 0, 2 * Math.PI);
    ctx.fill();
    const rad = (o.heading * Math.PI) / 180;
    ctx.strokeStyle = "#c65353";
    ctx.beginPath();
    ctx.moveTo(px, py);
    ctx.lineTo(px + 12 * Math.sin(rad), py - 12 * Math.cos(rad));
    ctx.stroke();
  }

  for (const d of snap.environment.detections) {
    const [px, py] = worldToPx(vp, d.x, d.y);
    ctx.strokeStyle = "#e0e6ec";
    ctx.beginPath();
    ctx.arc(px, py, 8, 0, 2 * Math.PI);
    ctx.stroke();
  }

  const own = snap.environment.own;
  const [ox, oy] = worldToPx(vp, own.x, own.y);
  ctx.strokeStyle = "#5a8fbf";
  ctx.beginPath();
  ctx.arc(ox, oy, snap.safe_distance * vp.scale, 0, 2 * Math.PI);
  ctx.stroke();

  const rad = (own.heading * Math.PI) / 180;
  ctx.save();
  ctx.translate(ox, oy);
  ctx.rotate(rad);
  ctx.fillStyle = "#9fd3ff";
  ctx.beginPath();
  ctx.moveTo(0, -10);
  ctx.lineTo(6, 8);
  ctx.lineTo(-6, 8);
  ctx.closePath();
  ctx.fill();
  ctx.restore();

  const meters = scaleBarMeters(vp);
  const barPx = meters * vp.scale;
  ctx.strokeStyle = "#e0e6ec";
  ctx.fillStyle = "#e0e6ec";
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(16, height - 18);
  ctx.lineTo(16 + barPx, height - 18);
  ctx.stroke();
  ctx.font = "12px sans-serif";
  ctx.fillText(meters >= 1000 ? `${meters / 1000} km` : `${meters} m`, 16, height - 26);
}
