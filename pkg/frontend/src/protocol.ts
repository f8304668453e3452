/**
 * Client side of the prover protocol: one JSON object per message.
 *
 * Commands are POSTed; full proof-state snapshots arrive both in command
 * replies and over the server-sent event stream (one `data:` line per
 * message). The client performs no proof logic of its own: it renders
 * exactly the server snapshot.
 */

export const PROTOCOL_VERSION = 1;

export interface Hypothesis {
  name: string;
  formula: string;
}

export interface GoalView {
  variables: string[];
  hypotheses: Hypothesis[];
  goal: string;
}

export interface TrustEntry {
  kind: string;
  detail: string;
  theorem: string;
}

export interface Snapshot {
  v: number;
  type: "snapshot";
  mode: "top" | "proof";
  lemmas: string[];
  definitions: string[];
  transcript: string[];
  trust: TrustEntry[];
  theorem?: string;
  statement?: string;
  subgoal_count?: number;
  goals?: GoalView[];
  done?: boolean;
}

export interface CommandReply {
  v: number;
  type: "ok" | "error";
  messages?: string[];
  error?: string;
  snapshot: Snapshot;
}

export interface Hello {
  v: number;
  type: "hello";
  session: string;
  token: string;
  snapshot: Snapshot;
}

export function decodeSnapshot(raw: unknown): Snapshot {
  const o = raw as Snapshot;
  if (!o || o.v !== PROTOCOL_VERSION || o.type !== "snapshot") {
    throw new Error("not a protocol v1 snapshot");
  }
  return o;
}

export class ProverClient {
  constructor(
    readonly base: string,
    readonly session: string,
    readonly token: string,
  ) {}

  static async connect(base: string, name?: string): Promise<ProverClient> {
    const r = await fetch(`${base}/api/session`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(name ? { name } : {}),
    });
    if (r.status === 409) throw new Error("session busy (single writer)");
    if (!r.ok) throw new Error(`connect failed: ${r.status}`);
    const hello = (await r.json()) as Hello;
    return new ProverClient(base, hello.session, hello.token);
  }

  async command(text: string): Promise<CommandReply> {
    const r = await fetch(`${this.base}/api/session/${this.session}/command`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ token: this.token, text }),
    });
    if (!r.ok) throw new Error(`command failed: ${r.status}`);
    return (await r.json()) as CommandReply;
  }

  /** Follow the snapshot stream; resolves when the stream closes. */
  async follow(
    onSnapshot: (s: Snapshot) => void,
    opts: { once?: boolean } = {},
  ): Promise<void> {
    const url = `${this.base}/api/session/${this.session}/events${opts.once ? "?once=true" : ""}`;
    const r = await fetch(url);
    if (!r.ok || !r.body) throw new Error(`events failed: ${r.status}`);
    const reader = r.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let idx: number;
      while ((idx = buffer.indexOf("\n")) >= 0) {
        const line = buffer.slice(0, idx).trimEnd();
        buffer = buffer.slice(idx + 1);
        if (line.startsWith("data: ")) {
          onSnapshot(decodeSnapshot(JSON.parse(line.slice(6))));
          if (opts.once) {
            await reader.cancel();
            return;
          }
        }
      }
    }
  }
}
