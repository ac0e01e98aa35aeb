/**
 * Telemetry capture: turns genuine DOM interactions into wire events.
 *
 * The buffer is append-only with monotonically non-decreasing timestamps.
 * Secret-field key identities live only until the attempt response arrives;
 * scrub() then wipes the buffered events and the internal typed state.
 */

import type { WireEvent } from "./wire.js";

export const PASSWORD_FIELD = "password";

const MODIFIER_KEYS = new Set(["Shift", "CapsLock", "Tab"]);
const POINTER_MOVE_THROTTLE_MS = 60;

type NowFn = () => number;

export class CaptureBuffer {
  private events: WireEvent[] = [];
  private readonly startedAt: number;
  private lastT = 0;
  private lastMove = -Infinity;
  private readonly now: NowFn;

  constructor(now: NowFn = () => performance.now()) {
    this.now = now;
    this.startedAt = now();
  }

  private stamp(): number {
    // enforce monotonicity even if the clock is adjusted under us
    const t = Math.max(0, this.now() - this.startedAt);
    this.lastT = Math.max(this.lastT, t);
    return this.lastT;
  }

  push(event: Omit<WireEvent, "t_ms">): void {
    this.events.push({ ...event, t_ms: this.stamp() });
  }

  keyDown(key: string, field: string): void {
    if (key === "Backspace") {
      this.push({ kind: "Backspace", key, field });
      return;
    }
    this.push({ kind: "KeyDown", key, field });
  }

  keyUp(key: string, field: string): void {
    this.push({ kind: "KeyUp", key, field });
  }

  paste(text: string, field: string): void {
    this.push({ kind: "Paste", key: text, field });
  }

  focusChange(field: string): void {
    this.push({ kind: "FocusChange", field });
  }

  pointerMove(x: number, y: number): void {
    if (this.lastT - this.lastMove < POINTER_MOVE_THROTTLE_MS && this.events.length > 0) {
      const t = this.now() - this.startedAt;
      if (t - this.lastMove < POINTER_MOVE_THROTTLE_MS) return;
    }
    this.push({ kind: "PointerMove", x, y });
    this.lastMove = this.lastT;
  }

  pointerClick(x: number, y: number, field?: string): void {
    this.push({ kind: "PointerClick", x, y, ...(field ? { field } : {}) });
  }

  scroll(y: number): void {
    this.push({ kind: "Scroll", y });
  }

  submit(): void {
    this.push({ kind: "Submit", field: PASSWORD_FIELD });
  }

  captchaShown(): void {
    this.push({ kind: "CaptchaShown" });
  }

  captchaAction(): void {
    this.push({ kind: "CaptchaAction" });
  }

  captchaSolved(): void {
    this.push({ kind: "CaptchaSolved" });
  }

  /** Snapshot for an attempt payload (the buffer keeps accumulating). */
  drain(): WireEvent[] {
    return [...this.events];
  }

  /**
   * Post-response scrub: wipe every buffered event in place so no
   * secret-field key identity outlives the attempt.
   */
  scrub(): void {
    for (const ev of this.events) {
      delete ev.key;
    }
    this.events.length = 0;
  }

  size(): number {
    return this.events.length;
  }

  hasSecretKeys(): boolean {
    return this.events.some((e) => e.field === PASSWORD_FIELD && e.key !== undefined);
  }
}

export interface CaptureTargets {
  form: HTMLElement;
  usernameInput: HTMLInputElement;
  passwordInput: HTMLInputElement;
}

/** Wire DOM listeners into the buffer; returns a detach function. */
export function attachCapture(buffer: CaptureBuffer, targets: CaptureTargets): () => void {
  const { form, usernameInput, passwordInput } = targets;

  const fieldOf = (el: EventTarget | null): string => {
    if (el === passwordInput) return PASSWORD_FIELD;
    if (el === usernameInput) return "username";
    return "page";
  };

  const onKeyDown = (e: Event) => {
    const ke = e as KeyboardEvent;
    const field = fieldOf(e.target);
    if (ke.key.length === 1 || MODIFIER_KEYS.has(ke.key) || ke.key === "Backspace") {
      buffer.keyDown(ke.key, field);
    }
  };
  const onKeyUp = (e: Event) => {
    const ke = e as KeyboardEvent;
    const field = fieldOf(e.target);
    if (ke.key.length === 1 || MODIFIER_KEYS.has(ke.key) || ke.key === "Backspace") {
      buffer.keyUp(ke.key, field);
    }
  };
  const onPaste = (e: Event) => {
    const ce = e as ClipboardEvent;
    const text = ce.clipboardData?.getData("text") ?? "";
    buffer.paste(text, fieldOf(e.target));
  };
  const onFocusIn = (e: Event) => buffer.focusChange(fieldOf(e.target));
  const onClick = (e: Event) => {
    const me = e as MouseEvent;
    buffer.pointerClick(me.clientX ?? 0, me.clientY ?? 0, fieldOf(e.target));
  };
  const onMove = (e: Event) => {
    const me = e as MouseEvent;
    buffer.pointerMove(me.clientX ?? 0, me.clientY ?? 0);
  };
  const onScroll = () => buffer.scroll(typeof window !== "undefined" ? window.scrollY ?? 0 : 0);

  form.addEventListener("keydown", onKeyDown);
  form.addEventListener("keyup", onKeyUp);
  form.addEventListener("paste", onPaste);
  form.addEventListener("focusin", onFocusIn);
  form.addEventListener("click", onClick);
  form.addEventListener("mousemove", onMove);
  form.addEventListener("scroll", onScroll);

  return () => {
    form.removeEventListener("keydown", onKeyDown);
    form.removeEventListener("keyup", onKeyUp);
    form.removeEventListener("paste", onPaste);
    form.removeEventListener("focusin", onFocusIn);
    form.removeEventListener("click", onClick);
    form.removeEventListener("mousemove", onMove);
    form.removeEventListener("scroll", onScroll);
  };
}
