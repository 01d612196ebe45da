// Stream subscription with reconnect/backoff, and the override POST.
//
// WebSocket and fetch are injected so the logic runs under test without a
// browser; close code 4401 from the server means the token was rejected.

import type { OverrideAck, OverrideRequest, StreamMessage } from "./types.js";
import type { ConsoleStore } from "./store.js";

export interface WebSocketLike {
  onopen: (() => void) | null;
  onclose: ((ev: { code: number }) => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  close(): void;
}

export type WebSocketFactory = (url: string) => WebSocketLike;

const BACKOFF_MS = [500, 1000, 2000, 4000, 8000];

export function streamUrl(endpoint: string, token: string | null): string {
  const base = endpoint.replace(/\/$/, "").replace(/^http/, "ws");
  return token ? `${base}/stream?token=${encodeURIComponent(token)}` : `${base}/stream`;
}

export class StreamClient {
  private ws: WebSocketLike | null = null;
  private attempts = 0;
  private stopped = false;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private endpoint: string,
    private token: string | null,
    private store: ConsoleStore,
    private wsFactory: WebSocketFactory,
    private schedule: (fn: () => void, ms: number) => ReturnType<typeof setTimeout> = setTimeout,
  ) {}

  connect(): void {
    this.stopped = false;
    this.open("connecting");
  }

  private open(phase: "connecting" | "reconnecting"): void {
    this.store.setConnection(phase);
    let ws: WebSocketLike;
    try {
      ws = this.wsFactory(streamUrl(this.endpoint, this.token));
    } catch {
      this.store.setConnection("unreachable");
      this.retry();
      return;
    }
    this.ws = ws;
    ws.onopen = () => {
      this.attempts = 0;
      this.store.setConnection("live");
    };
    ws.onmessage = (ev) => {
      let msg: StreamMessage;
      try {
        msg = JSON.parse(ev.data) as StreamMessage;
      } catch {
        return; // torn frame: drop, the next snapshot supersedes it
      }
      this.store.applyMessage(msg);
    };
    ws.onclose = (ev) => {
      if (this.stopped) return;
      if (ev.code === 4401) {
        this.store.setConnection("auth_failed");
        return; // a bad token will not fix itself
      }
      this.store.setConnection("reconnecting");
      this.retry();
    };
  }

  private retry(): void {
    if (this.stopped) return;
    const delay = BACKOFF_MS[Math.min(this.attempts, BACKOFF_MS.length - 1)];
    this.attempts += 1;
    this.timer = this.schedule(() => this.open("reconnecting"), delay);
  }

  close(): void {
    this.stopped = true;
    if (this.timer !== null) clearTimeout(this.timer);
    this.ws?.close();
  }
}

export class OverrideError extends Error {
  constructor(
    readonly reason: "rejected" | "auth" | "unreachable",
    message: string,
  ) {
    super(message);
  }
}

export async function postOverride(
  endpoint: string,
  token: string | null,
  request: OverrideRequest,
  fetchImpl: typeof fetch = fetch,
): Promise<OverrideAck> {
  const headers: Record<string, string> = { "Content-Type": "application/json" };
  if (token) headers["Authorization"] = `Bearer ${token}`;
  let res: Response;
  try {
    res = await fetchImpl(`${endpoint.replace(/\/$/, "")}/override`, {
      method: "POST",
      headers,
      body: JSON.stringify(request),
    });
  } catch (err) {
    throw new OverrideError("unreachable", String(err));
  }
  if (res.status === 401) throw new OverrideError("auth", "bearer token rejected");
  if (!res.ok) {
    let detail = `HTTP ${res.status}`;
    try {
      const body = (await res.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // keep the status text
    }
    throw new OverrideError("rejected", detail);
  }
  return (await res.json()) as OverrideAck;
}
