/**
 * Transcript export: the server snapshot carries the authoritative list
 * of executed commands; the export is a replayable script for batch mode.
 */

import type { Snapshot } from "./protocol.js";

export function exportTranscript(snapshot: Snapshot): string {
  const lines = [
    "% exported twolog session transcript",
    ...snapshot.transcript,
    "",
  ];
  return lines.join("\n");
}

export function transcriptFilename(snapshot: Snapshot): string {
  const base = snapshot.theorem ?? "session";
  return `${base}.thm`;
}
