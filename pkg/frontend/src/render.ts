/**
 * DOM rendering of a snapshot. Stateless with respect to proof logic:
 * everything shown is read off the latest server snapshot.
 */

import type { Snapshot } from "./protocol.js";
import { prettify, splitAnnotation } from "./prettify.js";

function el(tag: string, cls?: string, text?: string): HTMLElement {
  const e = document.createElement(tag);
  if (cls) e.className = cls;
  if (text !== undefined) e.textContent = text;
  return e;
}

export interface RenderOptions {
  unicode: boolean;
}

export function renderSnapshot(root: HTMLElement, snap: Snapshot, opts: RenderOptions): void {
  root.replaceChildren();

  const header = el("div", "header");
  if (snap.mode === "proof") {
    const count = snap.subgoal_count ?? 0;
    header.append(
      el("span", "theorem-name", snap.theorem ?? ""),
      el(
        "span",
        "subgoal-count",
        snap.done ? "proof completed — qed. to record" : `${count} subgoal(s)`,
      ),
    );
  } else {
    header.append(el("span", "mode", "no proof in progress"));
  }
  root.append(header);

  if (snap.mode === "proof" && snap.statement) {
    root.append(el("div", "statement", prettify(snap.statement, opts.unicode)));
  }

  const goals = snap.goals ?? [];
  goals.forEach((goal, idx) => {
    const panel = el("div", idx === 0 ? "goal focused" : "goal");
    panel.append(el("div", "goal-title", idx === 0 ? `subgoal 1 of ${goals.length} (focused)` : `subgoal ${idx + 1}`));
    if (goal.variables.length) {
      panel.append(el("div", "variables", "Variables: " + goal.variables.join(" ")));
    }
    const hyps = el("div", "hypotheses");
    for (const h of goal.hypotheses) {
      const row = el("div", "hyp");
      const { body, ann } = splitAnnotation(h.formula);
      row.append(el("span", "hyp-name", h.name));
      row.append(el("span", "hyp-formula", prettify(body, opts.unicode)));
      if (ann) {
        // measure annotations: * (smaller) is rendered distinctly from @
        row.append(el("span", ann.startsWith("*") ? "ann-star" : "ann-at", ann));
      }
      hyps.append(row);
    }
    panel.append(hyps);
    panel.append(el("div", "turnstile", "============================"));
    panel.append(el("div", "goal-formula", prettify(goal.goal, opts.unicode)));
    root.append(panel);
  });

  const lemmas = el("div", "lemmas");
  lemmas.append(el("div", "panel-title", "lemmas"));
  for (const name of snap.lemmas) lemmas.append(el("span", "lemma", name));
  root.append(lemmas);

  if (snap.trust.length) {
    const trust = el("div", "trust");
    trust.append(el("div", "panel-title", "trust report"));
    for (const t of snap.trust) {
      trust.append(el("div", "trust-entry", `${t.kind}: ${t.detail}${t.theorem ? " in " + t.theorem : ""}`));
    }
    root.append(trust);
  }
}
