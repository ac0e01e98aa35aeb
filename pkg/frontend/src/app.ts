/**
 * Demo page wiring: register with a rule, log in with live telemetry capture,
 * answer challenges.  Everything talks to the service's JSON API only.
 */

import { attachCapture, CaptureBuffer, PASSWORD_FIELD } from "./capture.js";
import { AuthClient, ApiError } from "./client.js";
import { gatherContext } from "./fingerprint.js";
import { runWizard, type WizardInput } from "./wizard.js";
import type { ContextSnapshot, RuleVariant } from "./wire.js";

interface PageState {
  client: AuthClient;
  context: ContextSnapshot | null;
  sessionToken: string | null;
  buffer: CaptureBuffer | null;
  detach: (() => void) | null;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setText(id: string, text: string): void {
  el(id).textContent = text;
}

export async function bootstrap(baseUrl = ""): Promise<void> {
  const state: PageState = {
    client: new AuthClient(baseUrl || window.location.origin),
    context: null,
    sessionToken: null,
    buffer: null,
    detach: null,
  };
  state.context = await gatherContext();

  const form = el<HTMLFormElement>("login-form");
  const username = el<HTMLInputElement>("username");
  const password = el<HTMLInputElement>("password");
  const timeValue = el<HTMLInputElement>("time-value");

  const freshCapture = () => {
    state.detach?.();
    state.buffer = new CaptureBuffer();
    state.detach = attachCapture(state.buffer, {
      form,
      usernameInput: username,
      passwordInput: password,
    });
  };
  freshCapture();

  el<HTMLButtonElement>("preview-btn").addEventListener("click", () => {
    const input = readWizardInput();
    const result = runWizard(input, new Date().getMinutes());
    if (!result.ok) {
      setText("wizard-errors", result.errors.join("; "));
      setText("preview", "");
      return;
    }
    setText("wizard-errors", "");
    setText(
      "preview",
      result.preview
        .map((step, i) => {
          const tv = step.expectedTimeValue != null ? `  (time value ${step.expectedTimeValue})` : "";
          return `${i + 1}. ${step.expectedSecret}${tv}`;
        })
        .join("\n"),
    );
  });

  el<HTMLButtonElement>("register-btn").addEventListener("click", async () => {
    const input = readWizardInput();
    const result = runWizard(input, new Date().getMinutes());
    if (!result.ok) {
      setText("wizard-errors", result.errors.join("; "));
      return;
    }
    try {
      await state.client.register({
        username: username.value,
        secret: input.secret,
        rule: result.rule,
        decoy: result.decoy,
      });
      setText("status", `registered ${username.value}`);
    } catch (err) {
      setText("status", err instanceof ApiError ? `${err.code}: ${err.message}` : String(err));
    }
  });

  form.addEventListener("submit", async (e) => {
    e.preventDefault();
    if (!state.buffer) return;
    state.buffer.submit();
    try {
      if (!state.sessionToken) {
        state.sessionToken = await state.client.openSession(username.value);
      }
      const request = state.client.buildAttempt({
        username: username.value,
        secretCandidate: password.value,
        timeValue: timeValue.value ? Number(timeValue.value) : null,
        events: state.buffer.drain(),
        context: state.context ?? { device: {}, network: {}, geo: {}, client_time: null },
        sessionToken: state.sessionToken,
      });
      const response = await state.client.submitAttempt(request);
      state.buffer.scrub();
      password.value = "";
      setText("status", `${response.outcome} (risk ${response.risk_total.toFixed(3)})`);
      if (response.outcome === "Challenge" && response.challenge) {
        el("challenge-box").style.display = "block";
        setText("challenge-prompt", response.challenge.prompt);
      } else {
        el("challenge-box").style.display = "none";
      }
      if (response.outcome === "Allow" || response.outcome === "Lock") {
        state.sessionToken = null;
        freshCapture();
      }
    } catch (err) {
      state.buffer.scrub();
      setText("status", err instanceof ApiError ? `${err.code}: ${err.message}` : String(err));
    }
  });

  el<HTMLButtonElement>("challenge-btn").addEventListener("click", async () => {
    if (!state.sessionToken) return;
    const answer = el<HTMLInputElement>("challenge-answer").value;
    try {
      const result = await state.client.answerChallenge(state.sessionToken, answer);
      setText("status", result.passed ? `challenge passed${result.outcome ? `: ${result.outcome}` : ""}` : "wrong answer");
      if (result.outcome === "Allow") {
        state.sessionToken = null;
        freshCapture();
        el("challenge-box").style.display = "none";
      }
    } catch (err) {
      setText("status", err instanceof ApiError ? `${err.code}: ${err.message}` : String(err));
    }
  });

  function readWizardInput(): WizardInput {
    const variant = el<HTMLSelectElement>("rule-variant").value as RuleVariant;
    const positions = el<HTMLInputElement>("rule-positions").value
      .split(",")
      .map((s) => Number(s.trim()))
      .filter((n) => Number.isFinite(n) && n > 0);
    const decoys = el<HTMLInputElement>("decoy-positions").value
      .split(",")
      .map((s) => Number(s.trim()))
      .filter((n) => Number.isFinite(n) && n > 0);
    return {
      variant,
      secret: password.value,
      positions,
      delta: Number(el<HTMLInputElement>("caesar-delta").value || "-2"),
      cycleLength: Number(el<HTMLInputElement>("cycle-length").value || "4"),
      charset: (el<HTMLInputElement>("charset").value || "@&*#").split(""),
      caseSchedule: positions.length ? [positions, []] : [],
      leetSchedule: positions.length ? [positions, []] : [],
      spaceSchedule: positions.length ? positions.map((p) => [p, 1] as [number, number]) : [[1, 1]],
      offsetMinutes: Number(el<HTMLInputElement>("time-offset").value || "0"),
      decoyPositions: decoys,
    };
  }
}

declare global {
  interface Window {
    dissectauthBootstrap: typeof bootstrap;
  }
}

if (typeof window !== "undefined") {
  window.dissectauthBootstrap = bootstrap;
}
