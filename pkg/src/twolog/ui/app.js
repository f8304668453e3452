/**
 * Browser entry point: connect to the prover, mirror its snapshots, and
 * submit one command per line from the input box (history on arrows).
 */
import { ProverClient } from "./protocol.js";
import { renderSnapshot } from "./render.js";
import { exportTranscript, transcriptFilename } from "./transcript.js";
const state = {
    client: null,
    snapshot: null,
    unicode: true,
    history: [],
    historyPos: 0,
};
function $(id) {
    const e = document.getElementById(id);
    if (!e)
        throw new Error(`missing element #${id}`);
    return e;
}
function redraw() {
    if (state.snapshot) {
        renderSnapshot($("state"), state.snapshot, { unicode: state.unicode });
    }
}
function setBanner(text, cls) {
    const b = $("banner");
    b.textContent = text;
    b.className = cls;
}
async function connectLoop() {
    for (;;) {
        try {
            const client = await ProverClient.connect("", undefined);
            state.client = client;
            setBanner(`connected (session ${client.session})`, "banner ok");
            await client.follow((snap) => {
                state.snapshot = snap;
                redraw();
            });
            // stream ended: fall through to reconnect
        }
        catch (e) {
            // connection lost: keep the last snapshot read-only
        }
        state.client = null;
        setBanner("connection lost — showing last snapshot; retrying…", "banner lost");
        await new Promise((r) => setTimeout(r, 2000));
    }
}
async function submit() {
    const input = $("tactic");
    const text = input.value.trim();
    if (!text || !state.client)
        return;
    state.history.push(text);
    state.historyPos = state.history.length;
    const reply = await state.client.command(text.endsWith(".") ? text : text + ".");
    state.snapshot = reply.snapshot;
    redraw();
    const diag = $("diagnostic");
    if (reply.type === "error") {
        diag.textContent = reply.error ?? "error";
        diag.className = "diagnostic error";
    }
    else {
        diag.textContent = (reply.messages ?? []).join("; ");
        diag.className = "diagnostic";
        input.value = "";
    }
}
function wireUp() {
    const input = $("tactic");
    input.addEventListener("keydown", (ev) => {
        if (ev.key === "Enter")
            void submit();
        if (ev.key === "ArrowUp" && state.historyPos > 0) {
            state.historyPos -= 1;
            input.value = state.history[state.historyPos] ?? "";
            ev.preventDefault();
        }
        if (ev.key === "ArrowDown") {
            state.historyPos = Math.min(state.historyPos + 1, state.history.length);
            input.value = state.history[state.historyPos] ?? "";
            ev.preventDefault();
        }
    });
    $("undo").addEventListener("click", () => {
        if (state.client) {
            const input = $("tactic");
            input.value = "undo.";
            void submit();
        }
    });
    $("export").addEventListener("click", () => {
        if (!state.snapshot)
            return;
        const blob = new Blob([exportTranscript(state.snapshot)], { type: "text/plain" });
        const a = document.createElement("a");
        a.href = URL.createObjectURL(blob);
        a.download = transcriptFilename(state.snapshot);
        a.click();
        URL.revokeObjectURL(a.href);
    });
    $("unicode").addEventListener("change", (ev) => {
        state.unicode = ev.target.checked;
        redraw();
    });
}
wireUp();
void connectLoop();
