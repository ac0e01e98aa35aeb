/**
 * Rule wizard: turns form selections into a schema-valid rule spec, blocks
 * invalid position choices inline, and previews the next five expected secrets
 * locally (never transmitted).
 */

import {
  advance,
  deriveExpected,
  effectiveCycle,
  governedPositions,
  initialState,
  preview,
  RuleError,
} from "./rules.js";
import type { Derived } from "./rules.js";
import { RuleSpecSchema, type DecoySpec, type RuleSpec, type RuleVariant } from "./wire.js";

export interface WizardInput {
  variant: RuleVariant;
  secret: string;
  positions?: number[];
  delta?: number;
  alphabetMode?: "Letters26" | "Alnum36";
  cycleLength?: number;
  spaceSchedule?: Array<[number, number]>;
  leetMap?: Record<string, string>;
  leetSchedule?: number[][];
  charset?: string[];
  caseSchedule?: number[][];
  offsetMinutes?: number;
  children?: RuleSpec[];
  decoyPositions?: number[];
}

export interface WizardResult {
  ok: true;
  rule: RuleSpec;
  decoy: DecoySpec;
  preview: Derived[];
}

export interface WizardFailure {
  ok: false;
  errors: string[];
}

export const PREVIEW_STEPS = 5;

export function buildRule(input: WizardInput): RuleSpec {
  switch (input.variant) {
    case "Caesar":
      return {
        variant: "Caesar",
        positions: input.positions ?? [],
        deltas: [input.delta ?? -2],
        alphabet_mode: input.alphabetMode ?? "Letters26",
        cycle_length: input.cycleLength ?? 4,
      };
    case "Space":
      return { variant: "Space", positions: [], space_schedule: input.spaceSchedule ?? [[1, 1]] };
    case "Leet":
      return {
        variant: "Leet",
        positions: [],
        leet_map: input.leetMap ?? { t: "7", n: "9", o: "0", y: "e" },
        leet_schedule: input.leetSchedule ?? [],
      };
    case "SpecialChar":
      return {
        variant: "SpecialChar",
        positions: input.positions ?? [],
        charset: input.charset ?? ["@", "&", "*", "#"],
      };
    case "CharCase":
      return { variant: "CharCase", positions: [], case_schedule: input.caseSchedule ?? [] };
    case "Mixed":
      return { variant: "Mixed", positions: [], children: input.children ?? [] };
    case "Time":
      return { variant: "Time", positions: [], offset_minutes: input.offsetMinutes ?? 0 };
    default:
      return { variant: "Static", positions: [] };
  }
}

export function runWizard(input: WizardInput, loginMinute: number): WizardResult | WizardFailure {
  const errors: string[] = [];
  if (!input.secret) {
    errors.push("choose a secret first");
    return { ok: false, errors };
  }
  const rule = buildRule(input);
  const parsed = RuleSpecSchema.safeParse(rule);
  if (!parsed.success) {
    errors.push(...parsed.error.issues.map((i) => i.message));
    return { ok: false, errors };
  }

  const governed = governedPositions(rule);
  for (const pos of governed) {
    const limit = rule.variant === "Space" ? input.secret.length + 1 : input.secret.length;
    if (pos < 1 || pos > limit) {
      errors.push(`position ${pos} is outside the secret`);
    }
  }
  const decoyPositions = input.decoyPositions ?? [];
  for (const pos of decoyPositions) {
    if (governed.has(pos)) {
      errors.push(`decoy position ${pos} overlaps a rule position`);
    }
    if (pos < 1 || pos > input.secret.length) {
      errors.push(`decoy position ${pos} is outside the secret`);
    }
  }
  if (errors.length) return { ok: false, errors };

  let steps: Derived[];
  try {
    steps = preview(input.secret, rule, PREVIEW_STEPS, loginMinute);
    // a full dry pass over one cycle surfaces mid-cycle conflicts early
    let state = initialState(rule);
    for (let i = 0; i < Math.min(32, cycleOf(rule)); i++) {
      deriveExpected(input.secret, rule, state, loginMinute);
      state = advance(rule, state);
    }
  } catch (err) {
    if (err instanceof RuleError) {
      return { ok: false, errors: [err.message] };
    }
    throw err;
  }
  return {
    ok: true,
    rule,
    decoy: { decoy_positions: decoyPositions, enabled: decoyPositions.length > 0 },
    preview: steps,
  };
}

function cycleOf(rule: RuleSpec): number {
  return effectiveCycle(rule);
}
