// Console entry point: wire the stream, the store, and the panels.
// Endpoint and token come from URL query parameters or the settings panel.

import { drawChart } from "./chart.js";
import { postOverride, OverrideError, StreamClient } from "./client.js";
import {
  renderAlerts,
  renderBanner,
  renderEquipment,
  renderMetrics,
  renderOverride,
  renderSensors,
  type OverrideControls,
} from "./panels.js";
import { ConsoleStore } from "./store.js";

function q<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

const params = new URLSearchParams(window.location.search);
const endpoint = params.get("endpoint") ?? window.location.origin;
const token = params.get("token");

const store = new ConsoleStore();
// the DOM WebSocket satisfies the narrow runtime contract of WebSocketLike;
// its handler signatures are wider, hence the cast at this boundary
const client = new StreamClient(
  endpoint,
  token,
  store,
  (url) => new WebSocket(url) as unknown as import("./client.js").WebSocketLike,
);

const canvas = q<HTMLCanvasElement>("chart");
const ctx = canvas.getContext("2d")!;
const banner = q<HTMLElement>("banner");
const sensors = q<HTMLElement>("sensors");
const equipment = q<HTMLElement>("equipment");
const metrics = q<HTMLElement>("metrics");
const alerts = q<HTMLElement>("alerts");

const controls: OverrideControls = {
  engage: q<HTMLButtonElement>("engage"),
  release: q<HTMLButtonElement>("release"),
  thrust: q<HTMLInputElement>("thrust"),
  rudder: q<HTMLInputElement>("rudder"),
  apply: q<HTMLButtonElement>("apply-helm"),
  error: q<HTMLElement>("override-error"),
};

q<HTMLElement>("endpoint-label").textContent = endpoint;

const settingsForm = q<HTMLFormElement>("settings");
settingsForm.addEventListener("submit", (ev) => {
  ev.preventDefault();
  const data = new FormData(settingsForm);
  const next = new URLSearchParams();
  const ep = String(data.get("endpoint") ?? "").trim();
  const tok = String(data.get("token") ?? "").trim();
  if (ep) next.set("endpoint", ep);
  if (tok) next.set("token", tok);
  window.location.search = next.toString();
});

async function sendOverride(kind: "engage" | "release" | "helm"): Promise<void> {
  const request =
    kind === "helm"
      ? {
          kind,
          thrust: Number(controls.thrust.value),
          rudder: Number(controls.rudder.value),
        }
      : { kind };
  if (kind === "engage") store.overrideRequested();
  try {
    await postOverride(endpoint, token, request);
    if (kind === "release") store.overrideReleased();
  } catch (err) {
    if (err instanceof OverrideError) store.overrideRejected(err.message);
    else store.overrideRejected(String(err));
  }
}

controls.engage.addEventListener("click", () => void sendOverride("engage"));
controls.release.addEventListener("click", () => void sendOverride("release"));
controls.apply.addEventListener("click", () => void sendOverride("helm"));
controls.rudder.addEventListener("input", () => {
  q<HTMLElement>("rudder-value").textContent = `${controls.rudder.value} deg`;
});
controls.thrust.addEventListener("input", () => {
  q<HTMLElement>("thrust-value").textContent = controls.thrust.value;
});

function render(): void {
  renderBanner(store, banner);
  renderSensors(store, sensors);
  renderEquipment(store, equipment);
  renderMetrics(store, metrics);
  renderAlerts(store, alerts);
  renderOverride(store, controls);
  if (store.snapshot) drawChart(ctx, store.snapshot);
}

store.subscribe(render);
render();
client.connect();
