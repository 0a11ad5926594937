/**
 * Controller for the store UI.
 *
 * The service owns all authoritative state; this class only holds the
 * session id (persisted so a reload can reconstruct everything from the
 * service) plus caches of the last payloads it rendered. Every user action
 * maps to exactly one service call.
 */
import {
  ApiError,
  MasClient,
  ServiceUnreachable,
  type Decision,
  type Profile,
  type SessionInfo,
  type StoreApp,
  type Storefront,
} from "./api.js";
import { clear } from "./dom.js";
import * as views from "./views.js";

const SESSION_KEY = "mas.session";

export class MasApp {
  private profiles: Profile[] = [];
  private storefront: Storefront | null = null;
  private info: SessionInfo | null = null;
  private sessionId = "";

  private readonly screenHost: HTMLElement;
  private readonly dialogHost: HTMLElement;

  constructor(
    root: HTMLElement,
    private readonly client: MasClient,
    private readonly storage: Storage = window.sessionStorage,
  ) {
    this.screenHost = document.createElement("div");
    this.dialogHost = document.createElement("div");
    root.append(this.screenHost, this.dialogHost);
  }

  async boot(): Promise<void> {
    this.closeDialog();
    try {
      this.profiles = await this.client.profiles();
      await this.ensureSession();
    } catch (err) {
      if (err instanceof ServiceUnreachable) {
        this.showDialog(views.unreachableBanner(() => void this.boot()));
        return;
      }
      throw err;
    }
    if (this.info && this.info.profile_id === null) {
      this.showProfilePicker();
    } else {
      await this.run(async () => {
        await this.showStore();
        this.reopenPendingNotice();
      });
    }
  }

  /** Reuse the stored session when the service still knows it. */
  private async ensureSession(): Promise<void> {
    const stored = this.storage.getItem(SESSION_KEY);
    if (stored) {
      try {
        this.info = await this.client.sessionInfo(stored);
        this.sessionId = stored;
        return;
      } catch (err) {
        if (!(err instanceof ApiError && err.notFound)) throw err;
        // service restarted; fall through to a fresh session
      }
    }
    const created = await this.client.createSession();
    this.sessionId = created.session_id;
    this.storage.setItem(SESSION_KEY, this.sessionId);
    this.info = await this.client.sessionInfo(this.sessionId);
  }

  /** Run a service-backed action with the blanket error policy. */
  private async run(work: () => Promise<void>): Promise<void> {
    try {
      await work();
    } catch (err) {
      if (err instanceof ServiceUnreachable) {
        this.showDialog(views.unreachableBanner(() => void this.boot()));
      } else if (err instanceof ApiError && err.notFound) {
        // stale session or app: start over from the service's view
        this.storage.removeItem(SESSION_KEY);
        await this.boot();
      } else if (err instanceof ApiError) {
        // 409s and friends: tell the user, then re-sync from the service
        this.showDialog(views.recoverableDialog(err.detail, () => void this.boot()));
      } else {
        throw err;
      }
    }
  }

  private showScreen(screen: HTMLElement): void {
    clear(this.screenHost);
    this.screenHost.append(screen);
  }

  private showDialog(dialog: HTMLElement): void {
    clear(this.dialogHost);
    this.dialogHost.append(dialog);
  }

  private closeDialog(): void {
    clear(this.dialogHost);
  }

  private profileName(profileId: string): string {
    const profile = this.profiles.find((p) => p.profile_id === profileId);
    return profile ? profile.display_name : profileId;
  }

  private appRecord(appId: string): StoreApp | undefined {
    return this.storefront?.apps.find((a) => a.app_id === appId);
  }

  // ---- screens ----

  private showProfilePicker(): void {
    this.closeDialog();
    this.showScreen(
      views.profilePicker(this.profiles, (profileId) =>
        void this.run(async () => {
          this.info = await this.client.selectProfile(this.sessionId, profileId);
          await this.showStore();
        }),
      ),
    );
  }

  private async showStore(): Promise<void> {
    this.storefront = await this.client.storefront(this.sessionId);
    this.info = await this.client.sessionInfo(this.sessionId);
    this.showScreen(
      views.storeScreen(
        this.storefront,
        this.info,
        this.profileName(this.storefront.profile_id),
        {
          onDownload: (appId) => void this.run(() => this.downloadFlow(appId)),
          onRemove: (appId) =>
            void this.run(async () => {
              await this.client.remove(this.sessionId, appId);
              await this.showStore();
            }),
        },
      ),
    );
  }

  private async showAlternatives(forApp: StoreApp): Promise<void> {
    // the fetch itself is the engagement signal the study counts
    const alternatives = await this.client.alternatives(this.sessionId, forApp.app_id);
    this.closeDialog();
    this.showScreen(
      views.alternativesScreen(forApp.name, alternatives, {
        onDownload: (appId) =>
          void this.run(async () => {
            await this.showStore();
            await this.downloadFlow(appId);
          }),
        onBack: () => void this.run(() => this.showStore()),
      }),
    );
  }

  // ---- download flow ----

  private async downloadFlow(appId: string): Promise<void> {
    const decision = await this.client.download(this.sessionId, appId);
    await this.renderDecision(decision);
  }

  private async renderDecision(decision: Decision): Promise<void> {
    if (decision.outcome === "proceed") {
      this.closeDialog();
      await this.showStore();
      return;
    }
    if (decision.outcome === "selective") {
      this.openSelective(decision.app_id, decision.alternatives_available ?? false);
      return;
    }
    this.openExploratory();
  }

  private openSelective(appId: string, alternativesAvailable: boolean): void {
    const app = this.appRecord(appId);
    if (!app) return; // storefront cache is stale beyond repair; next render fixes it
    this.showDialog(
      views.selectiveDialog(app, alternativesAvailable, {
        onSeeAlternatives: () => void this.run(() => this.showAlternatives(app)),
        onIgnore: (reason) =>
          void this.run(async () => {
            const decision = await this.client.ignore(this.sessionId, reason);
            await this.renderDecision(decision);
          }),
        // cancel is client-side only: the abandoned notice shows up in the
        // log as an attempt without a download, which is the point
        onCancel: () => this.closeDialog(),
      }),
    );
  }

  private openExploratory(): void {
    const currentProfile = this.info?.profile_id ?? "";
    this.showDialog(
      views.exploratoryDialog(this.profiles, currentProfile, {
        onKeep: () =>
          void this.run(async () => {
            const decision = await this.client.answerExploratory(this.sessionId, { keep: true });
            await this.renderDecision(decision);
          }),
        onSwitch: (profileId) =>
          void this.run(async () => {
            const decision = await this.client.answerExploratory(this.sessionId, {
              keep: false,
              new_profile_id: profileId,
            });
            await this.showStore(); // profile changed: lights need re-render
            await this.renderDecision(decision);
          }),
      }),
    );
  }

  /**
   * After a reload, surface whatever notice the service still has pending.
   * Selective reopens with the alternatives button regardless: the page it
   * leads to renders the server's own (possibly empty) answer, so nothing
   * is scored client-side.
   */
  private reopenPendingNotice(): void {
    if (!this.info || !this.info.pending_notice || !this.info.pending_app_id) return;
    if (this.info.pending_notice === "selective") {
      this.openSelective(this.info.pending_app_id, true);
    } else {
      this.openExploratory();
    }
  }
}
