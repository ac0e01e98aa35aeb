/**
 * Context snapshot gathered once at page load.
 *
 * Sends digests of whatever the browser exposes; anything unobtainable stays
 * null so the server records Unknown instead of a fabrication.
 */

import type { ContextSnapshot } from "./wire.js";

async function sha256Hex(text: string): Promise<string> {
  const data = new TextEncoder().encode(text);
  const digest = await crypto.subtle.digest("SHA-256", data);
  return [...new Uint8Array(digest)].map((b) => b.toString(16).padStart(2, "0")).join("");
}

function canvasDigestSource(): string | null {
  try {
    const canvas = document.createElement("canvas");
    canvas.width = 220;
    canvas.height = 60;
    const ctx = canvas.getContext("2d");
    if (!ctx) return null;
    ctx.textBaseline = "top";
    ctx.font = "14px 'Arial'";
    ctx.fillStyle = "#f60";
    ctx.fillRect(110, 5, 80, 30);
    ctx.fillStyle = "#069";
    ctx.fillText("login-telemetry \u{1F511}", 2, 15);
    ctx.strokeStyle = "rgba(120, 20, 200, 0.6)";
    ctx.beginPath();
    ctx.arc(60, 30, 22, 0, Math.PI * 2);
    ctx.stroke();
    return canvas.toDataURL();
  } catch {
    return null;
  }
}

function audioDigestSource(): string | null {
  try {
    const AC = (window as unknown as { OfflineAudioContext?: typeof OfflineAudioContext })
      .OfflineAudioContext;
    if (!AC) return null;
    // the audio stack's mere shape is already a weak signal; rendering is async
    // and overkill here, so digest the static configuration surface instead
    const ctx = new AC(1, 44100, 44100);
    return `${ctx.length}|${ctx.sampleRate}|${ctx.destination.channelCount}`;
  } catch {
    return null;
  }
}

function detectBrowser(ua: string): { browser: string | null; version: string | null } {
  const patterns: Array<[string, RegExp]> = [
    ["Firefox", /Firefox\/([\d.]+)/],
    ["Edge", /Edg\/([\d.]+)/],
    ["Chrome", /Chrome\/([\d.]+)/],
    ["Safari", /Version\/([\d.]+).*Safari/],
  ];
  for (const [name, re] of patterns) {
    const m = ua.match(re);
    if (m) return { browser: name, version: m[1] ?? null };
  }
  return { browser: null, version: null };
}

export async function gatherContext(): Promise<ContextSnapshot> {
  if (typeof navigator === "undefined") {
    return { device: {}, network: {}, geo: {}, client_time: Date.now() / 1000 };
  }
  const ua = navigator.userAgent ?? "";
  const { browser, version } = detectBrowser(ua);
  const canvasSrc = canvasDigestSource();
  const audioSrc = audioDigestSource();
  const fontsSrc =
    typeof document !== "undefined" && "fonts" in document
      ? `fonts:${(document as Document & { fonts: { size: number } }).fonts.size}`
      : null;

  return {
    device: {
      browser,
      browser_version: version,
      os: navigator.platform ?? null,
      os_version: null,
      device_type: /Mobi|Android/i.test(ua) ? "mobile" : "desktop",
      user_agent: ua || null,
      screen_width: typeof screen !== "undefined" ? screen.width : null,
      screen_height: typeof screen !== "undefined" ? screen.height : null,
      color_depth: typeof screen !== "undefined" ? screen.colorDepth : null,
      touch_capable: typeof navigator.maxTouchPoints === "number" ? navigator.maxTouchPoints > 0 : null,
      fonts_plugins_digest: fontsSrc ? await sha256Hex(fontsSrc) : null,
      canvas_digest: canvasSrc ? await sha256Hex(canvasSrc) : null,
      audio_digest: audioSrc ? await sha256Hex(audioSrc) : null,
      locale: navigator.language ?? null,
      keyboard_language: navigator.language ?? null,
    },
    network: {},
    geo: {
      timezone_offset_min: -new Date().getTimezoneOffset(),
      clock_offset_ms: null,
    },
    client_time: Date.now() / 1000,
  };
}
