/**
 * Websocket client for the gateway. One connection per session view; all
 * inbound envelopes are handed to the caller in arrival (seq) order. The
 * socket implementation is injectable so tests can run under node.
 */

import {
  Envelope,
  ProfilePayload,
  ProvidersConfig,
  encodeEnvelope,
  parseEnvelope,
} from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface GatewayClientOptions {
  url: string;
  sessionId: string;
  onEnvelope: (envelope: Envelope) => void;
  onStatus?: (status: "connecting" | "connected" | "closed" | "error") => void;
  socketFactory?: SocketFactory;
}

const defaultFactory: SocketFactory = (url) =>
  new WebSocket(url) as unknown as SocketLike;

export class GatewayClient {
  private socket: SocketLike | null = null;
  private seq = 0;
  private readonly startedAt = Date.now();

  constructor(private readonly options: GatewayClientOptions) {}

  connect(): Promise<void> {
    const factory = this.options.socketFactory ?? defaultFactory;
    const status = this.options.onStatus ?? (() => undefined);
    status("connecting");
    return new Promise((resolve, reject) => {
      const socket = factory(this.options.url);
      this.socket = socket;
      socket.onopen = () => {
        status("connected");
        resolve();
      };
      socket.onerror = (event) => {
        status("error");
        reject(new Error(`websocket error: ${String(event)}`));
      };
      socket.onclose = () => status("closed");
      socket.onmessage = (event) => {
        this.options.onEnvelope(parseEnvelope(String(event.data)));
      };
    });
  }

  private sendEnvelope(type: Envelope["type"], payload: Record<string, unknown>): void {
    if (!this.socket) {
      throw new Error("not connected");
    }
    this.socket.send(
      encodeEnvelope({
        type,
        session_id: this.options.sessionId,
        seq: this.seq++,
        ts_ms: Date.now() - this.startedAt,
        payload,
      }),
    );
  }

  startSession(profile: ProfilePayload, providers: ProvidersConfig, config?: Record<string, unknown>): void {
    this.sendEnvelope("session_start", { profile, providers, ...(config ? { config } : {}) });
  }

  /** Attach as a read-only observer of an already-running session. */
  subscribe(): void {
    if (!this.socket) {
      throw new Error("not connected");
    }
    this.socket.send(JSON.stringify({ type: "subscribe", session_id: this.options.sessionId }));
  }

  sendUtterance(text: string): void {
    this.sendEnvelope("user_utterance", { text });
  }

  injectScene(description: string): void {
    this.sendEnvelope("inject", { kind: "scene", description });
  }

  toggleOtherSpeaker(active: boolean): void {
    this.sendEnvelope("inject", { kind: "other_speaker_toggle", active });
  }

  stopSession(): void {
    this.sendEnvelope("session_stop", {});
  }

  close(): void {
    this.socket?.close();
    this.socket = null;
  }
}
