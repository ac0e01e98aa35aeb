/**
 * Client-side rule derivation for the wizard's live preview.
 *
 * Mirrors the server's schedule semantics exactly: the preview is computed
 * locally for user comprehension and never transmitted; the preview test
 * cross-checks it against the server's admin debug endpoint.
 */

import type { RuleSpec } from "./wire.js";

export interface RuleState {
  loginIndex: number;
  cursors: number[];
}

export class RuleError extends Error {}

function charIndex(ch: string, mode: "Letters26" | "Alnum36"): number {
  const low = ch.toLowerCase();
  if (low >= "a" && low <= "z") return low.charCodeAt(0) - 96;
  if (mode === "Alnum36" && ch >= "0" && ch <= "9") return ch.charCodeAt(0) - 48 + 27;
  throw new RuleError(`character ${JSON.stringify(ch)} is outside the ${mode} alphabet`);
}

function indexChar(index: number, upper: boolean, mode: "Letters26" | "Alnum36"): string {
  const size = mode === "Letters26" ? 26 : 36;
  const wrapped = ((index - 1) % size + size) % size + 1;
  if (wrapped <= 26) {
    const ch = String.fromCharCode(96 + wrapped);
    return upper ? ch.toUpperCase() : ch;
  }
  return String.fromCharCode(48 + wrapped - 27);
}

export function shiftChar(ch: string, delta: number, mode: "Letters26" | "Alnum36"): string {
  return indexChar(charIndex(ch, mode) + delta, ch === ch.toUpperCase() && ch.toLowerCase() !== ch, mode);
}

export function effectiveCycle(spec: RuleSpec): number {
  switch (spec.variant) {
    case "Caesar":
      return spec.cycle_length ?? (spec.deltas?.length ?? 1);
    case "Space":
      return (spec.space_schedule ?? []).reduce((acc, [, rep]) => acc + rep, 0);
    case "Leet":
      return (spec.leet_schedule ?? []).length;
    case "SpecialChar":
      return spec.cycle_length ?? (spec.charset?.length ?? 1);
    case "CharCase":
      return (spec.case_schedule ?? []).length;
    case "Mixed":
      return (spec.children ?? []).reduce((acc, c) => lcm(acc, effectiveCycle(c)), 1);
    default:
      return 1;
  }
}

function lcm(a: number, b: number): number {
  const gcd = (x: number, y: number): number => (y === 0 ? x : gcd(y, x % y));
  return (a / gcd(a, b)) * b;
}

export function governedPositions(spec: RuleSpec): Set<number> {
  switch (spec.variant) {
    case "Caesar":
    case "SpecialChar":
      return new Set(spec.positions);
    case "Space":
      return new Set((spec.space_schedule ?? []).map(([pos]) => pos));
    case "Leet":
      return new Set((spec.leet_schedule ?? []).flat());
    case "CharCase":
      return new Set((spec.case_schedule ?? []).flat());
    case "Mixed": {
      const out = new Set<number>();
      for (const child of spec.children ?? []) {
        for (const p of governedPositions(child)) out.add(p);
      }
      return out;
    }
    default:
      return new Set();
  }
}

export function initialState(spec: RuleSpec): RuleState {
  const n = spec.variant === "Mixed" ? (spec.children ?? []).length : 1;
  return { loginIndex: 0, cursors: new Array(n).fill(0) };
}

function spacePosition(spec: RuleSpec, cursor: number): number {
  const schedule = spec.space_schedule ?? [];
  let c = cursor % effectiveCycle(spec);
  for (const [pos, rep] of schedule) {
    if (c < rep) return pos;
    c -= rep;
  }
  throw new RuleError("space schedule exhausted");
}

function swapCase(ch: string): string {
  const lower = ch.toLowerCase();
  const upper = ch.toUpperCase();
  if (ch === lower && lower !== upper) return upper;
  if (ch === upper && lower !== upper) return lower;
  return ch;
}

function applySingle(base: string, spec: RuleSpec, cursor: number): string {
  switch (spec.variant) {
    case "Static":
    case "Time":
      return base;
    case "Caesar": {
      const deltas = spec.deltas ?? [];
      if (deltas.length === 0) throw new RuleError("Caesar rule needs deltas");
      let shift = 0;
      for (let j = 0; j <= cursor; j++) shift += deltas[j % deltas.length]!;
      const chars = [...base];
      for (const pos of spec.positions) {
        const ch = chars[pos - 1];
        if (ch === undefined) throw new RuleError(`position ${pos} outside the secret`);
        chars[pos - 1] = shiftChar(ch, shift, spec.alphabet_mode ?? "Letters26");
      }
      return chars.join("");
    }
    case "Space": {
      const pos = spacePosition(spec, cursor);
      if (pos < 1 || pos > base.length + 1) throw new RuleError(`space position ${pos} out of range`);
      return base.slice(0, pos - 1) + " " + base.slice(pos - 1);
    }
    case "Leet": {
      const schedule = spec.leet_schedule ?? [];
      const mapping = spec.leet_map ?? { t: "7", n: "9", o: "0", y: "e" };
      const chars = [...base];
      for (const pos of schedule[cursor % schedule.length] ?? []) {
        const ch = chars[pos - 1];
        if (ch === undefined) throw new RuleError(`position ${pos} outside the secret`);
        const sub = mapping[ch];
        if (sub === undefined) throw new RuleError(`no leet substitution for ${JSON.stringify(ch)}`);
        chars[pos - 1] = sub;
      }
      return chars.join("");
    }
    case "SpecialChar": {
      const charset = spec.charset ?? [];
      if (charset.length === 0) throw new RuleError("SpecialChar rule needs a charset");
      const ch = charset[cursor % charset.length]!;
      const chars = [...base];
      for (const pos of spec.positions) {
        if (pos < 1 || pos > chars.length) throw new RuleError(`position ${pos} outside the secret`);
        chars[pos - 1] = ch;
      }
      return chars.join("");
    }
    case "CharCase": {
      const schedule = spec.case_schedule ?? [];
      const chars = [...base];
      for (const pos of schedule[cursor % schedule.length] ?? []) {
        const ch = chars[pos - 1];
        if (ch === undefined) throw new RuleError(`position ${pos} outside the secret`);
        chars[pos - 1] = swapCase(ch);
      }
      return chars.join("");
    }
    default:
      throw new RuleError(`cannot apply variant ${spec.variant}`);
  }
}

export interface Derived {
  expectedSecret: string;
  expectedTimeValue: number | null;
}

/** Expected secret and auxiliary time value at the given schedule state. */
export function deriveExpected(
  baseSecret: string,
  spec: RuleSpec,
  state: RuleState,
  loginMinute: number,
): Derived {
  if (!baseSecret) throw new RuleError("base secret is empty");
  let timeValue: number | null = null;
  if (spec.variant === "Mixed") {
    let out = baseSecret;
    const children = spec.children ?? [];
    children.forEach((child, i) => {
      if (child.variant === "Time") {
        timeValue = (loginMinute + (child.offset_minutes ?? 0)) % 60;
      }
      out = applySingle(out, child, state.cursors[i] ?? 0);
    });
    return { expectedSecret: out, expectedTimeValue: timeValue };
  }
  if (spec.variant === "Time") {
    timeValue = (loginMinute + (spec.offset_minutes ?? 0)) % 60;
    return { expectedSecret: baseSecret, expectedTimeValue: timeValue };
  }
  return {
    expectedSecret: applySingle(baseSecret, spec, state.cursors[0] ?? 0),
    expectedTimeValue: null,
  };
}

export function advance(spec: RuleSpec, state: RuleState): RuleState {
  if (spec.variant === "Mixed") {
    const cycles = (spec.children ?? []).map(effectiveCycle);
    return {
      loginIndex: state.loginIndex + 1,
      cursors: state.cursors.map((c, i) => (c + 1) % Math.max(1, cycles[i] ?? 1)),
    };
  }
  const cycle = Math.max(1, effectiveCycle(spec));
  return { loginIndex: state.loginIndex + 1, cursors: [((state.cursors[0] ?? 0) + 1) % cycle] };
}

/** The next `steps` expected secrets starting from the given state. */
export function preview(
  baseSecret: string,
  spec: RuleSpec,
  steps: number,
  loginMinute: number,
  from: RuleState = initialState(spec),
): Derived[] {
  const out: Derived[] = [];
  let state = from;
  for (let i = 0; i < steps; i++) {
    out.push(deriveExpected(baseSecret, spec, state, loginMinute));
    state = advance(spec, state);
  }
  return out;
}
