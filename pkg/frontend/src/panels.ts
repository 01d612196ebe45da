// DOM panels: sensors, equipment, metrics, alert feed, connection banner.
// Pure render-from-store; no state lives in the DOM.

import type { ConsoleStore } from "./store.js";
import type { SensorFix } from "./types.js";

function fixText(fix: SensorFix | null): string {
  if (!fix) return "-";
  if (!fix.available) return "unavailable";
  return `(${fix.x!.toFixed(1)}, ${fix.y!.toFixed(1)}) ${fix.quality}`;
}

function setRows(container: HTMLElement, rows: [string, string][]): void {
  container.replaceChildren(
    ...rows.map(([label, value]) => {
      const div = document.createElement("div");
      div.className = "row";
      const l = document.createElement("span");
      l.className = "label";
      l.textContent = label;
      const v = document.createElement("span");
      v.className = "value";
      v.textContent = value;
      div.append(l, v);
      return div;
    }),
  );
}

export function renderBanner(store: ConsoleStore, el: HTMLElement): void {
  const messages: Record<string, string> = {
    idle: "not connected",
    connecting: "connecting...",
    live: "",
    reconnecting: "connection lost - reconnecting",
    auth_failed: "authentication failed: check the token",
    unreachable: "server unreachable",
  };
  let text = messages[store.connection] ?? "";
  if (store.sequenceRestarted) {
    text = text ? `${text} | server restarted: stream gap` : "server restarted: stream gap";
  }
  el.textContent = text;
  el.className = text ? "banner visible" : "banner";
}

export function renderSensors(store: ConsoleStore, el: HTMLElement): void {
  const snap = store.snapshot;
  if (!snap) {
    setRows(el, [["sensors", "waiting for snapshot"]]);
    return;
  }
  const sol = snap.sensors.solution;
  setRows(el, [
    ["GPS", fixText(snap.sensors.gps)],
    ["INS", fixText(snap.sensors.ins)],
    ["chosen", sol ? sol.source : "-"],
    ["discrepancy", sol ? `${sol.discrepancy.toFixed(2)} m` : "-"],
    ["flags", sol && sol.flags.length ? sol.flags.join(", ") : "none"],
  ]);
}

export function renderEquipment(store: ConsoleStore, el: HTMLElement): void {
  const snap = store.snapshot;
  if (!snap) {
    setRows(el, [["equipment", "waiting for snapshot"]]);
    return;
  }
  const eq = snap.equipment;
  setRows(el, [
    ["state", eq.state],
    ["controller", eq.active_controller],
    ["primary power", eq.primary_power ? "on" : "off"],
    ["heartbeat age", `${eq.heartbeat_age.toFixed(2)} s`],
    ["degraded", eq.degraded.length ? eq.degraded.join(", ") : "none"],
  ]);
  el.dataset.state = eq.state;
}

export function renderMetrics(store: ConsoleStore, el: HTMLElement): void {
  const snap = store.snapshot;
  if (!snap) {
    el.textContent = "";
    return;
  }
  const own = snap.environment.own;
  el.textContent =
    `t=${snap.time.toFixed(1)}s  ` +
    `${snap.metrics.miles.toFixed(4)} nmi  ` +
    `nav err ${(snap.metrics.nav_error_rate * 100).toFixed(3)}%  ` +
    `loop ${snap.metrics.loop_ms.toFixed(1)} ms  ` +
    `spd ${own.speed.toFixed(1)} m/s hdg ${own.heading.toFixed(0)}`;
}

export function renderAlerts(store: ConsoleStore, el: HTMLElement): void {
  el.replaceChildren(
    ...store.alerts
      .slice(-40)
      .reverse()
      .map((a) => {
        const li = document.createElement("li");
        li.className = a.kind;
        li.textContent = `[${a.time.toFixed(1)}s] ${a.text}`;
        return li;
      }),
  );
}

export interface OverrideControls {
  engage: HTMLButtonElement;
  release: HTMLButtonElement;
  thrust: HTMLInputElement;
  rudder: HTMLInputElement;
  apply: HTMLButtonElement;
  error: HTMLElement;
}

export function renderOverride(store: ConsoleStore, c: OverrideControls): void {
  c.engage.disabled = store.overrideActive || store.overridePending;
  c.release.disabled = !store.overrideActive;
  const helm = store.controlsEnabled;
  c.thrust.disabled = !helm;
  c.rudder.disabled = !helm;
  c.apply.disabled = !store.overrideActive;
  c.error.textContent = store.inlineError ?? "";
}
