/**
 * Typed client for the store service HTTP contract.
 *
 * Every payload is validated with zod before it reaches the UI; the UI
 * renders only what the server sent (coefficients and lights included —
 * there is no client-side scoring anywhere).
 */
import { z } from "zod";

export const Score = z.object({
  coefficient: z.number(),
  light: z.enum(["red", "yellow", "green"]),
});
export type Score = z.infer<typeof Score>;

export const StoreApp = z.object({
  app_id: z.string(),
  name: z.string(),
  description: z.string(),
  keywords: z.array(z.string()),
  practices: z.array(z.string()),
  family_id: z.string().nullable(),
  score: Score,
});
export type StoreApp = z.infer<typeof StoreApp>;

export const Storefront = z.object({
  profile_id: z.string(),
  apps: z.array(StoreApp),
});
export type Storefront = z.infer<typeof Storefront>;

export const Profile = z.object({
  profile_id: z.string(),
  display_name: z.string(),
  persona_text: z.string(),
  top_values: z.array(z.string()),
  member_count: z.number(),
});
export type Profile = z.infer<typeof Profile>;

const ProfilesDoc = z.object({ profiles: z.array(Profile) });

export const Decision = z.object({
  outcome: z.enum(["proceed", "selective", "exploratory"]),
  app_id: z.string(),
  score: Score,
  downloaded: z.boolean(),
  alternatives_available: z.boolean().nullish(),
});
export type Decision = z.infer<typeof Decision>;

export const Alternative = z.object({
  app_id: z.string(),
  name: z.string(),
  score: Score,
});
export type Alternative = z.infer<typeof Alternative>;

const AlternativesOut = z.object({
  app_id: z.string(),
  alternatives: z.array(Alternative),
});

export const SessionInfo = z.object({
  session_id: z.string(),
  profile_id: z.string().nullable(),
  exploratory_shown: z.boolean(),
  pending_notice: z.enum(["selective", "exploratory"]).nullable(),
  pending_app_id: z.string().nullable(),
  downloaded: z.array(z.string()),
});
export type SessionInfo = z.infer<typeof SessionInfo>;

export const LogEvent = z.object({
  session_id: z.string(),
  elapsed_ms: z.number(),
  wall_time: z.string(),
  kind: z.string(),
  app_id: z.string().nullish(),
  profile_id: z.string().nullish(),
  reason: z.string().nullish(),
  kept_profile: z.boolean().nullish(),
});
export type LogEvent = z.infer<typeof LogEvent>;

const SessionLog = z.object({
  session_id: z.string(),
  events: z.array(LogEvent),
});

const SessionCreated = z.object({ session_id: z.string() });

/** HTTP-level failure: the server answered, but not 2xx. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }

  /** Lost sessions and stale ids; safe to recover by starting over. */
  get notFound(): boolean {
    return this.status === 404;
  }

  /** Wrong-state calls (no profile yet, nothing pending, ...). */
  get conflict(): boolean {
    return this.status === 409;
  }
}

/** Network-level failure: no response at all. The UI blocks and retries. */
export class ServiceUnreachable extends Error {
  constructor(cause: unknown) {
    super("store service unreachable");
    this.name = "ServiceUnreachable";
    this.cause = cause;
  }
}

type FetchLike = typeof fetch;

export class MasClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = fetch,
  ) {}

  private async request<T>(
    schema: z.ZodType<T>,
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, {
        method,
        headers: body === undefined ? {} : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (cause) {
      throw new ServiceUnreachable(cause);
    }
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const payload = await response.json();
        if (typeof payload.detail === "string") detail = payload.detail;
        else if (payload.detail) detail = JSON.stringify(payload.detail);
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return schema.parse(await response.json());
  }

  async profiles(): Promise<Profile[]> {
    const doc = await this.request(ProfilesDoc, "GET", "/profiles");
    return doc.profiles;
  }

  createSession(): Promise<{ session_id: string }> {
    return this.request(SessionCreated, "POST", "/session");
  }

  sessionInfo(sessionId: string): Promise<SessionInfo> {
    return this.request(SessionInfo, "GET", `/session/${sessionId}`);
  }

  selectProfile(sessionId: string, profileId: string): Promise<SessionInfo> {
    return this.request(SessionInfo, "POST", `/session/${sessionId}/profile`, {
      profile_id: profileId,
    });
  }

  storefront(sessionId: string): Promise<Storefront> {
    return this.request(Storefront, "GET", `/session/${sessionId}/apps`);
  }

  download(sessionId: string, appId: string): Promise<Decision> {
    return this.request(Decision, "POST", `/session/${sessionId}/download/${appId}`);
  }

  ignore(sessionId: string, reason: string): Promise<Decision> {
    return this.request(Decision, "POST", `/session/${sessionId}/ignore`, { reason });
  }

  answerExploratory(
    sessionId: string,
    answer: { keep: true } | { keep: false; new_profile_id: string },
  ): Promise<Decision> {
    return this.request(Decision, "POST", `/session/${sessionId}/exploratory-answer`, answer);
  }

  remove(sessionId: string, appId: string): Promise<void> {
    return this.request(z.object({ ok: z.boolean() }), "POST",
      `/session/${sessionId}/remove/${appId}`).then(() => undefined);
  }

  async alternatives(sessionId: string, appId: string): Promise<Alternative[]> {
    const out = await this.request(
      AlternativesOut, "GET", `/session/${sessionId}/alternatives/${appId}`,
    );
    return out.alternatives;
  }

  async log(sessionId: string): Promise<LogEvent[]> {
    const doc = await this.request(SessionLog, "GET", `/session/${sessionId}/log`);
    return doc.events;
  }
}
