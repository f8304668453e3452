/**
 * Unicode rendering of the ASCII wire syntax, with a toggle back to
 * plain ASCII. Purely textual: token-level replacements that never touch
 * identifiers, so prettify is reversible on prover output.
 */

const WORD_MAP: [RegExp, string][] = [
  [/\bforall\b/g, "∀"], // ∀
  [/\bexists\b/g, "∃"], // ∃
  [/\bnabla\b/g, "∇"], // ∇
  [/\bpi\b/g, "Π"], // Π
];

const SYMBOL_MAP: [RegExp, string][] = [
  [/\|-/g, "⊢"], // ⊢
  [/:=/g, "≜"], // ≜
  [/->/g, "→"], // →
  [/=>/g, "⇒"], // ⇒
  [/\/\\/g, "∧"], // ∧
  [/\\\//g, "∨"], // ∨
];

export function prettify(text: string, unicode: boolean): string {
  if (!unicode) return text;
  let out = text;
  for (const [re, sub] of WORD_MAP) out = out.replace(re, sub);
  for (const [re, sub] of SYMBOL_MAP) out = out.replace(re, sub);
  return out;
}

export function asciify(text: string): string {
  return text
    .replace(/∀/g, "forall")
    .replace(/∃/g, "exists")
    .replace(/∇/g, "nabla")
    .replace(/Π/g, "pi")
    .replace(/⊢/g, "|-")
    .replace(/≜/g, ":=")
    .replace(/→/g, "->")
    .replace(/⇒/g, "=>")
    .replace(/∧/g, "/\\")
    .replace(/∨/g, "\\/");
}

/** Split a trailing induction annotation off a rendered formula. */
export function splitAnnotation(formula: string): { body: string; ann: string } {
  const m = formula.match(/^(.*?)(@+|\*+)$/s);
  if (m && (m[1].endsWith("}") || /[\w)]$/.test(m[1]))) {
    return { body: m[1], ann: m[2] };
  }
  return { body: formula, ann: "" };
}
