/**
 * Wire types for the authentication service, mirrored as zod schemas.
 *
 * These must stay shape-identical to the server's published JSON Schemas
 * (schema/wire_contract.schema.json); the contract test enforces it.
 */

import { z } from "zod";

export const EVENT_KINDS = [
  "KeyDown",
  "KeyUp",
  "Backspace",
  "Paste",
  "FocusChange",
  "PointerMove",
  "PointerClick",
  "Scroll",
  "Submit",
  "CaptchaShown",
  "CaptchaAction",
  "CaptchaSolved",
] as const;

export type EventKind = (typeof EVENT_KINDS)[number];

export const WireEventSchema = z.object({
  kind: z.enum(EVENT_KINDS),
  t_ms: z.number().nonnegative(),
  key: z.string().optional(),
  field: z.string().optional(),
  x: z.number().optional(),
  y: z.number().optional(),
});
export type WireEvent = z.infer<typeof WireEventSchema>;

export const DeviceSchema = z.object({
  browser: z.string().nullish(),
  browser_version: z.string().nullish(),
  os: z.string().nullish(),
  os_version: z.string().nullish(),
  device_type: z.string().nullish(),
  user_agent: z.string().nullish(),
  screen_width: z.number().int().nullish(),
  screen_height: z.number().int().nullish(),
  color_depth: z.number().int().nullish(),
  touch_capable: z.boolean().nullish(),
  fonts_plugins_digest: z.string().nullish(),
  canvas_digest: z.string().nullish(),
  audio_digest: z.string().nullish(),
  locale: z.string().nullish(),
  keyboard_language: z.string().nullish(),
});

export const NetworkSchema = z.object({
  ip: z.string().nullish(),
  asn: z.string().nullish(),
  isp: z.string().nullish(),
  connection_type: z.string().nullish(),
  vpn: z.boolean().nullish(),
  proxy: z.boolean().nullish(),
  tor_exit: z.boolean().nullish(),
  ip_reputation: z.enum(["Clean", "Blacklisted", "Unknown"]).nullish(),
});

export const GeoSchema = z.object({
  country: z.string().nullish(),
  region: z.string().nullish(),
  city: z.string().nullish(),
  lat: z.number().min(-90).max(90).nullish(),
  lon: z.number().min(-180).max(180).nullish(),
  timezone_offset_min: z.number().int().nullish(),
  clock_offset_ms: z.number().nullish(),
});

export const ContextSchema = z.object({
  device: DeviceSchema.default({}),
  network: NetworkSchema.default({}),
  geo: GeoSchema.default({}),
  client_time: z.number().nullish(),
});
export type ContextSnapshot = z.infer<typeof ContextSchema>;

export const RULE_VARIANTS = [
  "Caesar",
  "Space",
  "Leet",
  "SpecialChar",
  "CharCase",
  "Mixed",
  "Time",
  "Static",
] as const;
export type RuleVariant = (typeof RULE_VARIANTS)[number];

const RuleSpecBase = z.object({
  variant: z.enum(RULE_VARIANTS),
  positions: z.array(z.number().int().min(1)).default([]),
  deltas: z.array(z.number().int()).optional(),
  alphabet_mode: z.enum(["Letters26", "Alnum36"]).optional(),
  cycle_length: z.number().int().min(1).optional(),
  space_schedule: z.array(z.tuple([z.number().int().min(1), z.number().int().min(1)])).optional(),
  leet_map: z.record(z.string(), z.string()).optional(),
  leet_schedule: z.array(z.array(z.number().int().min(1))).optional(),
  charset: z.array(z.string().length(1)).optional(),
  case_schedule: z.array(z.array(z.number().int().min(1))).optional(),
  offset_minutes: z.number().int().min(0).max(59).optional(),
});

export type RuleSpec = z.infer<typeof RuleSpecBase> & { children?: RuleSpec[] };

export const RuleSpecSchema: z.ZodType<RuleSpec> = RuleSpecBase.extend({
  children: z.lazy(() => z.array(RuleSpecSchema)).optional(),
}) as z.ZodType<RuleSpec>;

export const DecoySchema = z.object({
  decoy_positions: z.array(z.number().int().min(1)).default([]),
  enabled: z.boolean().default(false),
});
export type DecoySpec = z.infer<typeof DecoySchema>;

export const CreateUserRequestSchema = z.object({
  username: z.string().min(1).max(64),
  secret: z.string().min(1).max(256),
  rule: RuleSpecSchema,
  decoy: DecoySchema.optional(),
});
export type CreateUserRequest = z.infer<typeof CreateUserRequestSchema>;

export const AttemptRequestSchema = z.object({
  username: z.string(),
  secret_candidate: z.string(),
  time_value: z.number().int().min(0).max(59).nullish(),
  events: z.array(WireEventSchema),
  context: ContextSchema,
  session_token: z.string(),
  attempt_id: z.string().min(1).max(128),
});
export type AttemptRequest = z.infer<typeof AttemptRequestSchema>;

export const AttemptResponseSchema = z.object({
  outcome: z.enum(["Allow", "Challenge", "Deny", "Lock"]),
  challenge: z
    .object({
      kind: z.enum(["RuleNameQuestion", "RotationThresholdQuestion", "Captcha"]),
      prompt: z.string(),
    })
    .nullish(),
  risk_total: z.number(),
  reason_codes: z.array(z.string()),
  retry_allowed: z.boolean(),
  match_percentage: z.number().nullish(),
  attempt_id: z.string(),
});
export type AttemptResponse = z.infer<typeof AttemptResponseSchema>;

export const PreviewResponseSchema = z.object({
  username: z.string(),
  steps: z.array(
    z.object({
      step: z.number().int(),
      expected_secret: z.string(),
      expected_time_value: z.number().int().nullish(),
    }),
  ),
});
export type PreviewResponse = z.infer<typeof PreviewResponseSchema>;
