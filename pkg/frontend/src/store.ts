// Single source of truth for everything the console renders.
//
// The store never invents state: the displayed failover state (and every
// other panel) derives from the latest snapshot the server actually sent.
// Override actions only mark an intent as pending; the UI flips to
// MANUAL_OVERRIDE when the confirming snapshot arrives.

import type { Snapshot, StreamMessage } from "./types.js";

export type ConnectionState =
  | "idle"
  | "connecting"
  | "live"
  | "reconnecting"
  | "auth_failed"
  | "unreachable";

export interface AlertEntry {
  seq: number;
  time: number;
  kind: "failover" | "alert";
  text: string;
}

const ALERT_LIMIT = 200;

export class ConsoleStore {
  connection: ConnectionState = "idle";
  snapshot: Snapshot | null = null;
  lastSeq: number | null = null;
  sequenceRestarted = false;
  alerts: AlertEntry[] = [];
  overridePending = false;
  inlineError: string | null = null;
  private listeners: (() => void)[] = [];

  subscribe(listener: () => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const fn of this.listeners) fn();
  }

  // -- stream lifecycle ------------------------------------------------

  setConnection(state: ConnectionState): void {
    this.connection = state;
    if (state === "reconnecting" || state === "connecting") {
      // a fresh server session restarts sequence numbers
      this.lastSeq = null;
    }
    this.emit();
  }

  applyMessage(msg: StreamMessage): void {
    if (this.lastSeq !== null && msg.seq <= this.lastSeq) {
      // messages are never reordered within a session: a backward jump
      // means the server restarted; flag the gap rather than hide it
      this.sequenceRestarted = true;
    }
    this.lastSeq = msg.seq;
    if (msg.type === "snapshot") {
      this.snapshot = msg.payload;
      if (msg.payload.equipment.state === "MANUAL_OVERRIDE") {
        this.overridePending = false;
      }
    } else if (msg.type === "failover") {
      const p = msg.payload;
      this.pushAlert({
        seq: msg.seq,
        time: p.time,
        kind: "failover",
        text: `${p.old_state} -> ${p.new_state} (${p.cause})`,
      });
    } else {
      const p = msg.payload;
      const detail =
        p.discrepancy !== undefined
          ? `discrepancy ${p.discrepancy.toFixed(1)} m, using ${p.chosen_source}`
          : p.kind;
      this.pushAlert({ seq: msg.seq, time: p.time, kind: "alert", text: detail });
    }
    this.emit();
  }

  private pushAlert(entry: AlertEntry): void {
    this.alerts.push(entry);
    if (this.alerts.length > ALERT_LIMIT) {
      this.alerts.splice(0, this.alerts.length - ALERT_LIMIT);
    }
  }

  // -- derived views -----------------------------------------------------

  /** The failover state shown to the operator: exactly what the server sent. */
  get displayedState(): string | null {
    return this.snapshot ? this.snapshot.equipment.state : null;
  }

  get overrideActive(): boolean {
    return this.displayedState === "MANUAL_OVERRIDE";
  }

  /** Helm controls unlock only while an override is pending or active. */
  get controlsEnabled(): boolean {
    return this.overrideActive || this.overridePending;
  }

  // -- override intents ----------------------------------------------------

  overrideRequested(): void {
    this.overridePending = true;
    this.inlineError = null;
    this.emit();
  }

  overrideReleased(): void {
    this.overridePending = false;
    this.inlineError = null;
    this.emit();
  }

  overrideRejected(message: string): void {
    this.inlineError = message;
    this.overridePending = false;
    this.emit();
  }

  clearInlineError(): void {
    this.inlineError = null;
    this.emit();
  }
}
