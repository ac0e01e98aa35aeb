import { describe, expect, it } from "vitest";

import {
  advance,
  deriveExpected,
  effectiveCycle,
  initialState,
  preview,
  shiftChar,
} from "../src/rules.js";
import type { RuleSpec } from "../src/wire.js";

const CAESAR: RuleSpec = {
  variant: "Caesar",
  positions: [1],
  deltas: [-2],
  alphabet_mode: "Letters26",
  cycle_length: 4,
};

describe("caesar derivation", () => {
  it("first shift turns yomnot into womnot", () => {
    const { expectedSecret } = deriveExpected("yomnot", CAESAR, initialState(CAESAR), 30);
    expect(expectedSecret).toBe("womnot");
  });

  it("walks w, u, s, q across successive logins and wraps", () => {
    let state = initialState(CAESAR);
    const seen: string[] = [];
    for (let i = 0; i < 5; i++) {
      seen.push(deriveExpected("yomnot", CAESAR, state, 30).expectedSecret[0]!);
      state = advance(CAESAR, state);
    }
    expect(seen).toEqual(["w", "u", "s", "q", "w"]);
  });

  it("alnum36 wraps digit nine to letter a", () => {
    expect(shiftChar("9", 1, "Alnum36")).toBe("a");
  });
});

describe("time rule", () => {
  const TIME: RuleSpec = { variant: "Time", positions: [], offset_minutes: 15 };

  it("15:30 plus 15 gives 45; 15:59 plus 15 gives 14", () => {
    expect(deriveExpected("yomnot", TIME, initialState(TIME), 30).expectedTimeValue).toBe(45);
    expect(deriveExpected("yomnot", TIME, initialState(TIME), 59).expectedTimeValue).toBe(14);
  });

  it("secret itself never changes", () => {
    expect(deriveExpected("yomnot", TIME, initialState(TIME), 7).expectedSecret).toBe("yomnot");
  });
});

describe("special character rule", () => {
  const SPECIAL: RuleSpec = {
    variant: "SpecialChar",
    positions: [2],
    charset: ["@", "&", "*", "#"],
  };

  it("cycles the charset every four logins", () => {
    let state = initialState(SPECIAL);
    const seen: string[] = [];
    for (let i = 0; i < 8; i++) {
      seen.push(deriveExpected("yomnot2025", SPECIAL, state, 0).expectedSecret[1]!);
      state = advance(SPECIAL, state);
    }
    expect(seen).toEqual(["@", "&", "*", "#", "@", "&", "*", "#"]);
  });
});

describe("space, case, leet, mixed", () => {
  it("space schedule honours repeat counts", () => {
    const spec: RuleSpec = { variant: "Space", positions: [], space_schedule: [[1, 2], [3, 1]] };
    let state = initialState(spec);
    const at: number[] = [];
    for (let i = 0; i < 6; i++) {
      at.push(deriveExpected("yomnot", spec, state, 0).expectedSecret.indexOf(" ") + 1);
      state = advance(spec, state);
    }
    expect(at).toEqual([1, 1, 3, 1, 1, 3]);
  });

  it("case toggle alternates against the base", () => {
    const spec: RuleSpec = { variant: "CharCase", positions: [], case_schedule: [[1], []] };
    const steps = preview("yomnot", spec, 4, 0);
    expect(steps.map((s) => s.expectedSecret)).toEqual(["Yomnot", "yomnot", "Yomnot", "yomnot"]);
  });

  it("leet substitutes scheduled positions", () => {
    const spec: RuleSpec = {
      variant: "Leet",
      positions: [],
      leet_map: { y: "e" },
      leet_schedule: [[1], []],
    };
    expect(deriveExpected("yomnot", spec, initialState(spec), 0).expectedSecret).toBe("eomnot");
  });

  it("mixed children apply left to right with lcm cycle", () => {
    const spec: RuleSpec = {
      variant: "Mixed",
      positions: [],
      children: [
        { variant: "SpecialChar", positions: [2], charset: ["@", "&", "*"] },
        { variant: "CharCase", positions: [], case_schedule: [[1], []] },
      ],
    };
    expect(effectiveCycle(spec)).toBe(6);
    expect(deriveExpected("yomnot", spec, initialState(spec), 0).expectedSecret).toBe("Y@mnot");
  });
});
