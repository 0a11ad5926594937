import { describe, expect, it } from "vitest";
import { ZodError } from "zod";

import { ApiError, Decision, MasClient, ServiceUnreachable } from "../src/api.js";

function respond(payload: unknown, status = 200): typeof fetch {
  return async () =>
    new Response(JSON.stringify(payload), {
      status,
      headers: { "content-type": "application/json" },
    });
}

describe("MasClient", () => {
  it("parses a good profiles document", async () => {
    const client = new MasClient(
      "http://x",
      respond({
        profiles: [
          {
            profile_id: "p-1",
            display_name: "Adventurer",
            persona_text: "Curious.",
            top_values: ["stimulation"],
            member_count: 12,
          },
        ],
      }),
    );
    const profiles = await client.profiles();
    expect(profiles).toHaveLength(1);
    expect(profiles[0]!.display_name).toBe("Adventurer");
  });

  it("surfaces HTTP errors with the server's detail", async () => {
    const client = new MasClient("http://x", respond({ detail: "no profile selected" }, 409));
    const failure = await client.storefront("s-1").catch((e) => e);
    expect(failure).toBeInstanceOf(ApiError);
    expect(failure.status).toBe(409);
    expect(failure.detail).toBe("no profile selected");
    expect(failure.conflict).toBe(true);
    expect(failure.notFound).toBe(false);
  });

  it("maps 404s distinctly", async () => {
    const client = new MasClient("http://x", respond({ detail: "unknown session" }, 404));
    const failure = await client.sessionInfo("s-gone").catch((e) => e);
    expect(failure).toBeInstanceOf(ApiError);
    expect(failure.notFound).toBe(true);
  });

  it("wraps network failures as ServiceUnreachable", async () => {
    const client = new MasClient("http://x", async () => {
      throw new TypeError("fetch failed");
    });
    const failure = await client.profiles().catch((e) => e);
    expect(failure).toBeInstanceOf(ServiceUnreachable);
  });

  it("rejects payloads that do not match the contract", async () => {
    const client = new MasClient(
      "http://x",
      respond({ profile_id: "p-1", apps: [{ app_id: "a", score: { light: "violet" } }] }),
    );
    const failure = await client.storefront("s-1").catch((e) => e);
    expect(failure).toBeInstanceOf(ZodError);
  });

  it("sends the verbatim ignore reason", async () => {
    let sent: unknown;
    const client = new MasClient("http://x", async (_url, init) => {
      sent = JSON.parse(init?.body as string);
      return new Response(
        JSON.stringify({
          outcome: "proceed",
          app_id: "red-app",
          score: { coefficient: 0.0, light: "red" },
          downloaded: true,
          alternatives_available: null,
        }),
        { status: 200 },
      );
    });
    await client.ignore("s-1", "  spaces kept  ");
    expect(sent).toEqual({ reason: "  spaces kept  " });
  });
});

describe("Decision schema", () => {
  const base = {
    outcome: "proceed",
    app_id: "a",
    score: { coefficient: 1.0, light: "green" },
    downloaded: true,
  };

  it("accepts alternatives_available missing, null, or boolean", () => {
    expect(Decision.parse(base).alternatives_available).toBeUndefined();
    expect(Decision.parse({ ...base, alternatives_available: null }).alternatives_available)
      .toBeNull();
    expect(
      Decision.parse({ ...base, outcome: "selective", alternatives_available: true })
        .alternatives_available,
    ).toBe(true);
  });

  it("rejects unknown outcomes", () => {
    expect(() => Decision.parse({ ...base, outcome: "maybe" })).toThrow(ZodError);
  });
});
