/**
 * In-memory double of the store service for DOM flow tests. It speaks the
 * same JSON contract and keeps just enough session state (profile, pending
 * notice, downloads) for the UI flows to be scripted without a backend;
 * contract fidelity itself is covered by the e2e suite against the real
 * service.
 */

interface FakeApp {
  app_id: string;
  name: string;
  description: string;
  keywords: string[];
  practices: string[];
  family_id: string | null;
  score: { coefficient: number; light: "red" | "yellow" | "green" };
}

const APPS: FakeApp[] = [
  {
    app_id: "green-notes",
    name: "Green Notes",
    description: "Inoffensive note taking.",
    keywords: ["notes"],
    practices: ["unlinked:usage_data"],
    family_id: "fam-notes",
    score: { coefficient: 0.9, light: "green" },
  },
  {
    app_id: "red-maps",
    name: "Red Maps",
    description: "Navigation with tracking.",
    keywords: ["maps"],
    practices: ["tracked:location", "linked:contact_info"],
    family_id: "fam-maps",
    score: { coefficient: 0.0, light: "red" },
  },
  {
    app_id: "clean-maps",
    name: "Clean Maps",
    description: "Navigation without tracking.",
    keywords: ["maps"],
    practices: [],
    family_id: "fam-maps",
    score: { coefficient: 1.0, light: "green" },
  },
  {
    app_id: "mild-maps",
    name: "Mild Maps",
    description: "Navigation, some analytics.",
    keywords: ["maps"],
    practices: ["linked:location"],
    family_id: "fam-maps",
    score: { coefficient: 0.3, light: "yellow" },
  },
  {
    app_id: "red-solo",
    name: "Red Solo",
    description: "The only app of its kind.",
    keywords: ["solo"],
    practices: ["tracked:contacts"],
    family_id: "fam-solo",
    score: { coefficient: 0.05, light: "red" },
  },
  {
    app_id: "red-orphan",
    name: "Red Orphan",
    description: "Family exists, nothing scores better.",
    keywords: ["orphan"],
    practices: ["tracked:browsing_history"],
    family_id: "fam-orphan",
    score: { coefficient: 0.0, light: "red" },
  },
];

const PROFILES = [
  {
    profile_id: "profile-1",
    display_name: "Adventurer",
    persona_text: "Curious, novelty-seeking, travels light.",
    top_values: ["stimulation", "self_direction", "hedonism"],
    member_count: 30,
  },
  {
    profile_id: "profile-2",
    display_name: "Goal Setter",
    persona_text: "Ambitious and organized.",
    top_values: ["achievement", "power", "hedonism"],
    member_count: 30,
  },
];

export class FakeService {
  profileId: string | null = null;
  downloaded: string[] = [];
  pending: { kind: "selective" | "exploratory"; app_id: string } | null = null;
  ignoreReasons: string[] = [];
  exploratoryAnswers: Array<{ keep: boolean; new_profile_id?: string | null }> = [];
  exploratoryShown = false;
  unreachable = false;

  /** Make the next download attempt trigger the exploratory notice. */
  private exploratoryArmed = false;
  armExploratory(): void {
    this.exploratoryArmed = true;
  }

  // Deliberately not sorted by coefficient: the UI must keep this order.
  alternativesFor: Record<string, FakeApp[]> = {
    "red-maps": [
      APPS.find((a) => a.app_id === "mild-maps")!,
      APPS.find((a) => a.app_id === "clean-maps")!,
    ],
    "red-orphan": [],
  };

  readonly fetchFn = async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
    if (this.unreachable) throw new TypeError("fetch failed");
    const url = typeof input === "string" ? input : input.toString();
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(init.body as string) : undefined;
    return this.route(method, path, body);
  };

  private json(payload: unknown, status = 200): Response {
    return new Response(JSON.stringify(payload), {
      status,
      headers: { "content-type": "application/json" },
    });
  }

  private error(status: number, detail: string): Response {
    return this.json({ detail }, status);
  }

  private decision(app: FakeApp, outcome: string, downloaded: boolean, alts?: boolean) {
    return {
      outcome,
      app_id: app.app_id,
      score: app.score,
      downloaded,
      alternatives_available: alts ?? null,
    };
  }

  private route(method: string, path: string, body: any): Response {
    const app = (id: string) => APPS.find((a) => a.app_id === id);

    if (method === "GET" && path === "/profiles") return this.json({ profiles: PROFILES });
    if (method === "POST" && path === "/session") return this.json({ session_id: "s-000001" });

    if (!path.startsWith("/session/s-000001")) return this.error(404, "unknown session");
    const rest = path.slice("/session/s-000001".length);

    if (method === "GET" && rest === "") {
      return this.json({
        session_id: "s-000001",
        profile_id: this.profileId,
        exploratory_shown: this.exploratoryShown,
        pending_notice: this.pending?.kind ?? null,
        pending_app_id: this.pending?.app_id ?? null,
        downloaded: this.downloaded,
      });
    }
    if (method === "POST" && rest === "/profile") {
      this.profileId = body.profile_id;
      return this.route("GET", "/session/s-000001", undefined);
    }
    if (this.profileId === null) return this.error(409, "no profile selected");

    if (method === "GET" && rest === "/apps") {
      return this.json({ profile_id: this.profileId, apps: APPS });
    }
    if (method === "POST" && rest.startsWith("/download/")) {
      const target = app(rest.slice("/download/".length));
      if (!target) return this.error(404, "unknown app");
      this.pending = null;
      if (this.exploratoryArmed && !this.exploratoryShown) {
        this.exploratoryArmed = false;
        this.exploratoryShown = true;
        this.pending = { kind: "exploratory", app_id: target.app_id };
        return this.json(this.decision(target, "exploratory", false));
      }
      if (target.score.light === "red") {
        this.pending = { kind: "selective", app_id: target.app_id };
        const available = (this.alternativesFor[target.app_id] ?? []).length > 0;
        return this.json(this.decision(target, "selective", false, available));
      }
      this.downloaded.push(target.app_id);
      return this.json(this.decision(target, "proceed", true));
    }
    if (method === "POST" && rest === "/ignore") {
      if (this.pending?.kind !== "selective") return this.error(409, "no pending notice");
      const target = app(this.pending.app_id)!;
      this.ignoreReasons.push(body?.reason ?? "");
      this.pending = null;
      this.downloaded.push(target.app_id);
      return this.json(this.decision(target, "proceed", true));
    }
    if (method === "POST" && rest === "/exploratory-answer") {
      if (this.pending?.kind !== "exploratory") return this.error(409, "no exploratory pending");
      const target = app(this.pending.app_id)!;
      this.exploratoryAnswers.push(body);
      if (!body.keep) this.profileId = body.new_profile_id;
      this.pending = null;
      this.downloaded.push(target.app_id);
      return this.json(this.decision(target, "proceed", true));
    }
    if (method === "POST" && rest.startsWith("/remove/")) {
      const id = rest.slice("/remove/".length);
      if (!this.downloaded.includes(id)) return this.error(409, "not downloaded");
      this.downloaded = this.downloaded.filter((d) => d !== id);
      return this.json({ ok: true });
    }
    if (method === "GET" && rest.startsWith("/alternatives/")) {
      const id = rest.slice("/alternatives/".length);
      if (!app(id)) return this.error(404, "unknown app");
      const alts = (this.alternativesFor[id] ?? []).map((a) => ({
        app_id: a.app_id,
        name: a.name,
        score: a.score,
      }));
      return this.json({ app_id: id, alternatives: alts });
    }
    return this.error(404, `unrouted: ${method} ${rest}`);
  }
}
