/**
 * DOM wiring for the operator console. All state lives in the projection;
 * every envelope triggers a re-render of the affected panels.
 */

import { GatewayClient } from "./client.js";
import {
  ConsoleSessionView,
  initialView,
  reduceEnvelope,
} from "./projection.js";
import type { ProfilePayload, ProvidersConfig } from "./protocol.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

let client: GatewayClient | null = null;
let view: ConsoleSessionView = initialView();

function defaultProfile(): ProfilePayload {
  return {
    user_id: "console-user",
    goal: ($("goal") as HTMLInputElement).value.trim(),
    role_traits: ($("traits") as HTMLInputElement).value.trim(),
    voice_ref: "voice-console",
    quiet_threshold_ms: 3000,
  };
}

function demoProviders(): ProvidersConfig {
  // Everything mock: scripted latency and friendly defaults so the console
  // works standalone. Real deployments would script replies per session.
  return {
    mode: "mock",
    strict: false,
    latency: { stt_ms: 100, mllm_ms: 450, tts_ms: 370 },
    classifier_default: "Output: yes",
    completer_default: "Okay. I know what I'm about; staying on track.",
    describer_default: "The scene looks uneventful with nothing notable happening.",
  };
}

function setStatus(text: string, ok: boolean): void {
  const el = $("status");
  el.textContent = text;
  el.className = ok ? "status ok" : "status err";
}

function render(): void {
  const transcript = $("transcript");
  transcript.innerHTML = "";
  for (const turn of view.transcript) {
    const row = document.createElement("div");
    row.className = `turn ${turn.role}`;
    const when = (turn.tsMs / 1000).toFixed(1).padStart(6);
    row.textContent = `[${when}s] ${turn.role}: ${turn.text}`;
    transcript.appendChild(row);
  }
  transcript.scrollTop = transcript.scrollHeight;

  $("verdict").textContent = view.lastVerdict
    ? `${view.lastVerdict.verdict} (batch ${view.lastVerdict.batchId})`
    : "-";
  $("debounce").textContent = view.debounce
    ? `R_t=${view.debounce.step} ${view.debounce.trigger ? "TRIGGER" : "hold"} (${view.debounce.reason})`
    : "-";
  $("counts").textContent = `${view.nudgeCount} nudges / ${view.silentCount} silent`;
  $("speaker").textContent = view.otherSpeakerActive ? "other speaker: TALKING" : "other speaker: quiet";

  const pending = $("pending");
  pending.innerHTML = "";
  for (const injection of view.pendingInjections) {
    const li = document.createElement("li");
    li.textContent = `deferred: ${injection.text}`;
    pending.appendChild(li);
  }
  if (view.pendingInjections.length === 0) {
    const li = document.createElement("li");
    li.className = "muted";
    li.textContent = "none";
    pending.appendChild(li);
  }

  const latency = $("latency");
  if (view.lastInteraction) {
    const { totalMs, budgetOk } = view.lastInteraction;
    latency.textContent = `last interaction: ${totalMs} ms ${budgetOk ? "(within 1.0 s budget)" : "(OVER BUDGET)"}`;
    latency.className = budgetOk ? "ok" : "err";
  } else {
    latency.textContent = "last interaction: -";
  }
  const spans = $("spans");
  spans.innerHTML = "";
  for (const span of view.spans.slice(-8)) {
    const li = document.createElement("li");
    li.textContent = `${span.component} ${span.endMs - span.startMs} ms (${span.correlationId})`;
    spans.appendChild(li);
  }

  const errors = $("errors");
  errors.textContent = view.errors.length ? view.errors[view.errors.length - 1] : "";
}

async function connect(): Promise<void> {
  const url = ($("url") as HTMLInputElement).value.trim();
  const sessionId = ($("session") as HTMLInputElement).value.trim() || `console-${Date.now()}`;
  const observe = ($("observe") as HTMLInputElement).checked;
  view = initialView();
  client = new GatewayClient({
    url,
    sessionId,
    onEnvelope: (envelope) => {
      view = reduceEnvelope(view, envelope);
      render();
    },
    onStatus: (status) => setStatus(status, status === "connected"),
  });
  try {
    await client.connect();
  } catch (error) {
    setStatus(`connection refused: ${String(error)}`, false);
    client = null;
    return;
  }
  if (observe) {
    client.subscribe();
  } else {
    client.startSession(defaultProfile(), demoProviders());
  }
  for (const id of ["say", "scene", "toggle", "stop"]) {
    ($(id) as HTMLButtonElement).disabled = false;
  }
}

function wire(): void {
  $("connect").addEventListener("click", () => void connect());
  $("say").addEventListener("click", () => {
    const input = $("utterance") as HTMLInputElement;
    if (client && input.value.trim()) {
      client.sendUtterance(input.value.trim());
      input.value = "";
    }
  });
  $("scene").addEventListener("click", () => {
    const input = $("scenetext") as HTMLInputElement;
    if (client && input.value.trim()) {
      client.injectScene(input.value.trim());
      input.value = "";
    }
  });
  $("toggle").addEventListener("click", () => {
    client?.toggleOtherSpeaker(!view.otherSpeakerActive);
  });
  $("stop").addEventListener("click", () => client?.stopSession());
  render();
}

wire();
