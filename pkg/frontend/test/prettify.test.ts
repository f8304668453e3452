import { describe, expect, it } from "vitest";
import { asciify, prettify, splitAnnotation } from "../src/prettify.js";

describe("prettify", () => {
  it("renders quantifiers and connectives in unicode", () => {
    const wire = "forall M N, {step M N} -> (halts M /\\ true) \\/ false";
    const pretty = prettify(wire, true);
    expect(pretty).toContain("∀");
    expect(pretty).toContain("→");
    expect(pretty).toContain("∧");
    expect(pretty).toContain("∨");
    expect(pretty).not.toContain("forall");
  });

  it("is the identity in ascii mode", () => {
    const wire = "forall M, nabla x, {L |- of (R x) (A x)} -> pi y\\ B y = B y";
    expect(prettify(wire, false)).toBe(wire);
  });

  it("round-trips through asciify", () => {
    const samples = [
      "forall M N, {step M N} -> N = N",
      "nabla x, cntx ((of x A) :: L) := {type A} /\\ cntx L",
      "{L |- pi y\\ B y}",
      "exists V, {steps M V} /\\ {value V}",
    ];
    for (const s of samples) {
      expect(asciify(prettify(s, true))).toBe(s);
    }
  });

  it("does not touch identifiers containing keywords", () => {
    expect(prettify("forallx pix", true)).toBe("forallx pix");
  });

  it("splits induction annotations", () => {
    expect(splitAnnotation("{step M N}@")).toEqual({ body: "{step M N}", ann: "@" });
    expect(splitAnnotation("{step M N}**")).toEqual({ body: "{step M N}", ann: "**" });
    expect(splitAnnotation("reduce N A*")).toEqual({ body: "reduce N A", ann: "*" });
    expect(splitAnnotation("{step M N}")).toEqual({ body: "{step M N}", ann: "" });
  });
});
