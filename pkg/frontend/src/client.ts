/**
 * Thin API client.  Submissions are idempotent: each attempt carries a nonce
 * generated once, so a network-failure retry can never double-count.
 */

import type {
  AttemptRequest,
  AttemptResponse,
  ContextSnapshot,
  CreateUserRequest,
  PreviewResponse,
  WireEvent,
} from "./wire.js";
import { AttemptRequestSchema, AttemptResponseSchema, PreviewResponseSchema } from "./wire.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function parseError(res: Response): Promise<ApiError> {
  try {
    const body = (await res.json()) as { error?: { code?: string; message?: string } };
    return new ApiError(res.status, body.error?.code ?? "UNKNOWN", body.error?.message ?? res.statusText);
  } catch {
    return new ApiError(res.status, "UNKNOWN", res.statusText);
  }
}

function nonce(): string {
  if (typeof crypto !== "undefined" && "randomUUID" in crypto) return crypto.randomUUID();
  return `a-${Date.now()}-${Math.floor(Math.random() * 1e9)}`;
}

export class AuthClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async post<T>(path: string, body: unknown): Promise<T> {
    const res = await this.fetchFn(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) throw await parseError(res);
    return (await res.json()) as T;
  }

  async register(request: CreateUserRequest): Promise<void> {
    await this.post("/users", request);
  }

  async openSession(username: string): Promise<string> {
    const doc = await this.post<{ session_token: string }>("/sessions", { username });
    return doc.session_token;
  }

  /** Build a schema-valid attempt payload from captured form state. */
  buildAttempt(input: {
    username: string;
    secretCandidate: string;
    timeValue: number | null;
    events: WireEvent[];
    context: ContextSnapshot;
    sessionToken: string;
    attemptId?: string;
  }): AttemptRequest {
    const payload: AttemptRequest = {
      username: input.username,
      secret_candidate: input.secretCandidate,
      time_value: input.timeValue,
      events: input.events,
      context: input.context,
      session_token: input.sessionToken,
      attempt_id: input.attemptId ?? nonce(),
    };
    return AttemptRequestSchema.parse(payload);
  }

  /**
   * Submit with retry on network failure.  The attempt id is fixed before the
   * first try; the server replays its recorded decision on duplicates.
   */
  async submitAttempt(request: AttemptRequest, maxTries = 3): Promise<AttemptResponse> {
    let lastError: unknown = null;
    for (let i = 0; i < maxTries; i++) {
      try {
        const doc = await this.post<unknown>(
          `/sessions/${request.session_token}/attempts`,
          request,
        );
        return AttemptResponseSchema.parse(doc);
      } catch (err) {
        if (err instanceof ApiError) throw err; // the server answered; don't re-send
        lastError = err;
      }
    }
    throw lastError instanceof Error ? lastError : new Error("network failure");
  }

  async answerChallenge(sessionToken: string, answer: string): Promise<{ passed: boolean; outcome?: string | null }> {
    return this.post(`/sessions/${sessionToken}/challenge`, {
      session_token: sessionToken,
      answer,
    });
  }

  async adminPreview(
    username: string,
    steps: number,
    adminToken: string,
    atIso?: string,
  ): Promise<PreviewResponse> {
    const q = new URLSearchParams({ steps: String(steps) });
    if (atIso) q.set("at", atIso);
    const res = await this.fetchFn(
      `${this.baseUrl}/admin/users/${encodeURIComponent(username)}/preview?${q}`,
      { headers: { authorization: `Bearer ${adminToken}` } },
    );
    if (!res.ok) throw await parseError(res);
    return PreviewResponseSchema.parse(await res.json());
  }
}
