/**
 * Client side of the prover protocol: one JSON object per message.
 *
 * Commands are POSTed; full proof-state snapshots arrive both in command
 * replies and over the server-sent event stream (one `data:` line per
 * message). The client performs no proof logic of its own: it renders
 * exactly the server snapshot.
 */
export const PROTOCOL_VERSION = 1;
export function decodeSnapshot(raw) {
    const o = raw;
    if (!o || o.v !== PROTOCOL_VERSION || o.type !== "snapshot") {
        throw new Error("not a protocol v1 snapshot");
    }
    return o;
}
export class ProverClient {
    constructor(base, session, token) {
        this.base = base;
        this.session = session;
        this.token = token;
    }
    static async connect(base, name) {
        const r = await fetch(`${base}/api/session`, {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify(name ? { name } : {}),
        });
        if (r.status === 409)
            throw new Error("session busy (single writer)");
        if (!r.ok)
            throw new Error(`connect failed: ${r.status}`);
        const hello = (await r.json());
        return new ProverClient(base, hello.session, hello.token);
    }
    async command(text) {
        const r = await fetch(`${this.base}/api/session/${this.session}/command`, {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify({ token: this.token, text }),
        });
        if (!r.ok)
            throw new Error(`command failed: ${r.status}`);
        return (await r.json());
    }
    /** Follow the snapshot stream; resolves when the stream closes. */
    async follow(onSnapshot, opts = {}) {
        const url = `${this.base}/api/session/${this.session}/events${opts.once ? "?once=true" : ""}`;
        const r = await fetch(url);
        if (!r.ok || !r.body)
            throw new Error(`events failed: ${r.status}`);
        const reader = r.body.getReader();
        const decoder = new TextDecoder();
        let buffer = "";
        for (;;) {
            const { done, value } = await reader.read();
            if (done)
                break;
            buffer += decoder.decode(value, { stream: true });
            let idx;
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
