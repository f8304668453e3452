/**
 * Transcript export: the server snapshot carries the authoritative list
 * of executed commands; the export is a replayable script for batch mode.
 */
export function exportTranscript(snapshot) {
    const lines = [
        "% exported twolog session transcript",
        ...snapshot.transcript,
        "",
    ];
    return lines.join("\n");
}
export function transcriptFilename(snapshot) {
    const base = snapshot.theorem ?? "session";
    return `${base}.thm`;
}
