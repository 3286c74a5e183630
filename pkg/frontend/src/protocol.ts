/**
 * Gateway envelope protocol. The console speaks nothing else: every frame is
 * one JSON envelope {type, session_id, seq, ts_ms, payload}, plus the
 * connection-level {"type":"subscribe"} control frame for read-only
 * observers.
 */

export const ENVELOPE_TYPES = [
  "session_start",
  "session_stop",
  "frame_batch",
  "scene_observation",
  "context_verdict",
  "debounce_decision",
  "new_info_injected",
  "user_utterance",
  "agent_response",
  "silent",
  "trace",
  "error",
  "inject",
] as const;

export type EnvelopeType = (typeof ENVELOPE_TYPES)[number];

export interface Envelope {
  type: EnvelopeType;
  session_id: string;
  seq: number;
  ts_ms: number;
  payload: Record<string, unknown>;
}

export interface ProfilePayload {
  user_id: string;
  goal: string;
  role_traits: string;
  voice_ref: string;
  quiet_threshold_ms: number;
}

export interface ProvidersConfig {
  mode: "mock";
  strict?: boolean;
  latency?: { stt_ms?: number; mllm_ms?: number; tts_ms?: number };
  scripts?: Record<string, Array<string | { reply: string; pattern?: string }>>;
  completer_default?: string;
  classifier_default?: string;
  describer_default?: string;
}

export function parseEnvelope(text: string): Envelope {
  const raw = JSON.parse(text) as Record<string, unknown>;
  const type = raw["type"];
  if (typeof type !== "string" || !(ENVELOPE_TYPES as readonly string[]).includes(type)) {
    throw new Error(`unregistered envelope type: ${String(type)}`);
  }
  if (typeof raw["session_id"] !== "string" || typeof raw["seq"] !== "number") {
    throw new Error("malformed envelope frame");
  }
  return {
    type: type as EnvelopeType,
    session_id: raw["session_id"] as string,
    seq: raw["seq"] as number,
    ts_ms: (raw["ts_ms"] as number) ?? 0,
    payload: (raw["payload"] as Record<string, unknown>) ?? {},
  };
}

export function encodeEnvelope(envelope: Envelope): string {
  return JSON.stringify({
    type: envelope.type,
    session_id: envelope.session_id,
    seq: envelope.seq,
    ts_ms: envelope.ts_ms,
    payload: envelope.payload,
  });
}
