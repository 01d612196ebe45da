// Mock-stream tests: the console state machine never shows anything the
// server did not send, keeps the alert feed ordered and complete, and
// gates the override controls correctly.

import { describe, expect, it } from "vitest";

import { ConsoleStore } from "../src/store.js";
import type { StreamMessage } from "../src/types.js";
import { makeSnapshot } from "./snapshots.js";

function snapMsg(seq: number, state = "NORMAL", time = 0): StreamMessage {
  return { type: "snapshot", seq, payload: makeSnapshot({ state, time }) };
}

describe("state discipline", () => {
  it("renders nothing before the first snapshot", () => {
    const store = new ConsoleStore();
    expect(store.displayedState).toBeNull();
  });

  it("always displays exactly the last received snapshot state", () => {
    const store = new ConsoleStore();
    const sequence = ["NORMAL", "DEGRADED_L1", "BACKUP_CONTROL_L2", "NORMAL"];
    sequence.forEach((state, i) => {
      store.applyMessage(snapMsg(i + 1, state));
      expect(store.displayedState).toBe(state);
    });
  });

  it("never shows MANUAL_OVERRIDE optimistically after an engage request", () => {
    const store = new ConsoleStore();
    store.applyMessage(snapMsg(1, "NORMAL"));
    store.overrideRequested();
    // the request is pending: displayed state must still be the server's
    expect(store.displayedState).toBe("NORMAL");
    expect(store.overrideActive).toBe(false);
    expect(store.overridePending).toBe(true);
    // only the acknowledging snapshot flips the view
    store.applyMessage(snapMsg(2, "MANUAL_OVERRIDE"));
    expect(store.displayedState).toBe("MANUAL_OVERRIDE");
    expect(store.overridePending).toBe(false);
  });

  it("only ever displays states that arrived on the stream", () => {
    const store = new ConsoleStore();
    const sent: string[] = [];
    const states = ["NORMAL", "DEGRADED_L1", "BACKUP_CONTROL_L2", "MANUAL_OVERRIDE"];
    for (let i = 0; i < 50; i++) {
      const state = states[i % states.length];
      sent.push(state);
      store.applyMessage(snapMsg(i + 1, state, i * 0.1));
      expect(sent).toContain(store.displayedState!);
      expect(store.displayedState).toBe(sent[sent.length - 1]);
    }
  });
});

describe("override controls gating", () => {
  it("controls disabled unless override pending or active", () => {
    const store = new ConsoleStore();
    store.applyMessage(snapMsg(1, "NORMAL"));
    expect(store.controlsEnabled).toBe(false);
    store.overrideRequested();
    expect(store.controlsEnabled).toBe(true); // pending
    store.applyMessage(snapMsg(2, "MANUAL_OVERRIDE"));
    expect(store.controlsEnabled).toBe(true); // active
    store.applyMessage(snapMsg(3, "NORMAL"));
    expect(store.controlsEnabled).toBe(false); // released by the server
  });

  it("rejected helm surfaces inline and clears the pending flag", () => {
    const store = new ConsoleStore();
    store.applyMessage(snapMsg(1, "NORMAL"));
    store.overrideRequested();
    store.overrideRejected("helm commands require an engaged override");
    expect(store.inlineError).toMatch(/engaged override/);
    expect(store.overridePending).toBe(false);
  });
});

describe("alert feed", () => {
  function failoverMsg(seq: number, to: string): StreamMessage {
    return {
      type: "failover",
      seq,
      payload: {
        time: seq * 0.1,
        kind: "failover_transition",
        old_state: "NORMAL",
        new_state: to,
        cause: "HeartbeatStall",
      },
    };
  }

  it("entries stay in sequence order and none are dropped", () => {
    const store = new ConsoleStore();
    store.applyMessage(snapMsg(1));
    store.applyMessage(failoverMsg(2, "BACKUP_CONTROL_L2"));
    store.applyMessage({
      type: "alert",
      seq: 3,
      payload: { time: 0.3, kind: "nav_discrepancy", discrepancy: 98.2, chosen_source: "INS" },
    });
    store.applyMessage(snapMsg(4, "BACKUP_CONTROL_L2"));
    store.applyMessage(failoverMsg(5, "NORMAL"));
    expect(store.alerts.map((a) => a.seq)).toEqual([2, 3, 5]);
    expect(store.alerts[0].text).toContain("BACKUP_CONTROL_L2");
    expect(store.alerts[1].text).toContain("98.2");
  });

  it("flags a sequence restart instead of hiding it", () => {
    const store = new ConsoleStore();
    store.applyMessage(snapMsg(10));
    expect(store.sequenceRestarted).toBe(false);
    store.applyMessage(snapMsg(2)); // server restarted: numbering restarted
    expect(store.sequenceRestarted).toBe(true);
  });

  it("forward gaps from snapshot coalescing are not restarts", () => {
    const store = new ConsoleStore();
    store.applyMessage(snapMsg(1));
    store.applyMessage(snapMsg(7)); // coalesced intermediate snapshots
    expect(store.sequenceRestarted).toBe(false);
  });

  it("reconnect resets the sequence baseline", () => {
    const store = new ConsoleStore();
    store.applyMessage(snapMsg(50));
    store.setConnection("reconnecting");
    store.setConnection("live");
    store.applyMessage(snapMsg(1)); // fresh session numbering
    expect(store.displayedState).toBe("NORMAL");
  });
});
