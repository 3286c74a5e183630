/**
 * Pure projection of the session's envelope stream into the console view.
 *
 * The console invents no state: everything rendered is derived by folding
 * received envelopes, in seq order, into a ConsoleSessionView. Pending
 * injections are the [NEW INFO] events not yet answered by an
 * agent_response or silent event.
 */

import type { Envelope, ProfilePayload } from "./protocol.js";

export interface Turn {
  role: "user" | "assistant" | "system";
  text: string;
  tsMs: number;
}

export interface VerdictView {
  batchId: number;
  verdict: string;
  observationRef: string;
}

export interface DebounceView {
  step: number;
  verdict: string;
  trigger: boolean;
  reason: string;
  batchId: number | null;
}

export interface SpanView {
  component: string;
  startMs: number;
  endMs: number;
  correlationId: string;
}

export interface PendingInjection {
  text: string;
  tsMs: number;
  batchId: number | null;
}

export interface InteractionLatency {
  correlationId: string;
  totalMs: number;
  budgetOk: boolean;
}

export interface ConsoleSessionView {
  sessionId: string | null;
  profile: ProfilePayload | null;
  transcript: Turn[];
  lastVerdict: VerdictView | null;
  debounce: DebounceView | null;
  pendingInjections: PendingInjection[];
  spans: SpanView[];
  lastInteraction: InteractionLatency | null;
  otherSpeakerActive: boolean;
  nudgeCount: number;
  silentCount: number;
  errors: string[];
  stopped: boolean;
  lastSeq: number;
  eventCount: number;
}

export const BUDGET_MS = 1000;
const SPAN_HISTORY = 200;
const CHAIN = ["stt", "mllm", "tts"] as const;

export function initialView(): ConsoleSessionView {
  return {
    sessionId: null,
    profile: null,
    transcript: [],
    lastVerdict: null,
    debounce: null,
    pendingInjections: [],
    spans: [],
    lastInteraction: null,
    otherSpeakerActive: false,
    nudgeCount: 0,
    silentCount: 0,
    errors: [],
    stopped: false,
    lastSeq: -1,
    eventCount: 0,
  };
}

function latencyFor(spans: SpanView[], correlationId: string): InteractionLatency | null {
  const mine = spans.filter((s) => s.correlationId === correlationId);
  const totals = new Map<string, number>();
  for (const span of mine) {
    if ((CHAIN as readonly string[]).includes(span.component)) {
      totals.set(span.component, (totals.get(span.component) ?? 0) + (span.endMs - span.startMs));
    }
  }
  if (!CHAIN.every((c) => totals.has(c))) {
    return null;
  }
  let totalMs = 0;
  for (const value of totals.values()) {
    totalMs += value;
  }
  return { correlationId, totalMs, budgetOk: totalMs < BUDGET_MS };
}

/** Fold one envelope into the view, returning a new view object. */
export function reduceEnvelope(view: ConsoleSessionView, envelope: Envelope): ConsoleSessionView {
  const next: ConsoleSessionView = {
    ...view,
    transcript: view.transcript,
    pendingInjections: view.pendingInjections,
    spans: view.spans,
    errors: view.errors,
    lastSeq: envelope.seq,
    eventCount: view.eventCount + 1,
  };
  const p = envelope.payload;
  switch (envelope.type) {
    case "session_start": {
      next.sessionId = envelope.session_id;
      next.profile = (p["profile"] as ProfilePayload) ?? null;
      break;
    }
    case "session_stop": {
      next.stopped = true;
      break;
    }
    case "user_utterance": {
      next.transcript = [
        ...view.transcript,
        { role: "user", text: String(p["text"] ?? ""), tsMs: Number(p["ts_ms"] ?? envelope.ts_ms) },
      ];
      break;
    }
    case "agent_response": {
      next.transcript = [
        ...view.transcript,
        { role: "assistant", text: String(p["text"] ?? ""), tsMs: Number(p["ts_ms"] ?? envelope.ts_ms) },
      ];
      next.nudgeCount = view.nudgeCount + 1;
      next.pendingInjections = []; // the response answers whatever was pending
      const correlationId = String(p["correlation_id"] ?? "");
      next.lastInteraction = latencyFor(view.spans, correlationId) ?? view.lastInteraction;
      break;
    }
    case "new_info_injected": {
      const turn: Turn = {
        role: "system",
        text: String(p["text"] ?? ""),
        tsMs: Number(p["ts_ms"] ?? envelope.ts_ms),
      };
      next.transcript = [...view.transcript, turn];
      next.pendingInjections = [
        ...view.pendingInjections,
        { text: turn.text, tsMs: turn.tsMs, batchId: (p["batch_id"] as number) ?? null },
      ];
      break;
    }
    case "silent": {
      next.silentCount = view.silentCount + 1;
      next.pendingInjections = [];
      break;
    }
    case "context_verdict": {
      next.lastVerdict = {
        batchId: Number(p["batch_id"] ?? -1),
        verdict: String(p["verdict"] ?? "UNSURE"),
        observationRef: String(p["observation_ref"] ?? ""),
      };
      break;
    }
    case "debounce_decision": {
      next.debounce = {
        step: Number(p["R_t"] ?? 0),
        verdict: String(p["verdict"] ?? ""),
        trigger: Boolean(p["trigger"]),
        reason: String(p["reason"] ?? ""),
        batchId: (p["batch_id"] as number) ?? null,
      };
      break;
    }
    case "trace": {
      const span: SpanView = {
        component: String(p["component"] ?? ""),
        startMs: Number(p["start_ms"] ?? 0),
        endMs: Number(p["end_ms"] ?? 0),
        correlationId: String(p["correlation_id"] ?? ""),
      };
      next.spans = [...view.spans.slice(-(SPAN_HISTORY - 1)), span];
      break;
    }
    case "inject": {
      if (p["kind"] === "other_speaker_toggle") {
        next.otherSpeakerActive = Boolean(p["active"]);
      }
      break;
    }
    case "error": {
      const message = `${String(p["code"] ?? "Error")}: ${String(p["message"] ?? "")}`;
      next.errors = [...view.errors.slice(-19), message];
      break;
    }
    default:
      break;
  }
  return next;
}

export function reduceAll(envelopes: Envelope[]): ConsoleSessionView {
  let view = initialView();
  for (const envelope of envelopes) {
    view = reduceEnvelope(view, envelope);
  }
  return view;
}
