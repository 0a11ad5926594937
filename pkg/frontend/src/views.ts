/**
 * Screen and dialog builders. Pure DOM construction: every function takes
 * server payloads plus callbacks and returns an element; no state lives
 * here and nothing is computed from practices or coefficients — lights and
 * ordering come from the service as-is.
 */
import type { Alternative, Profile, Score, SessionInfo, StoreApp, Storefront } from "./api.js";
import { el } from "./dom.js";

// Distinct shape per light so color is never the only signal.
const LIGHT_GLYPH: Record<Score["light"], string> = {
  green: "●", // ●
  yellow: "▲", // ▲
  red: "■", // ■
};

export function lightBadge(score: Score): HTMLElement {
  return el(
    "span",
    {
      class: `light light-${score.light}`,
      role: "img",
      "aria-label": `${score.light} privacy light`,
      title: `acceptability ${score.coefficient.toFixed(2)} (${score.light})`,
    },
    LIGHT_GLYPH[score.light],
  );
}

export function profilePicker(
  profiles: Profile[],
  onPick: (profileId: string) => void,
): HTMLElement {
  const cards = profiles.map((p) =>
    el(
      "article",
      { class: "profile-card", "data-profile-id": p.profile_id },
      el("h2", {}, p.display_name),
      el("p", { class: "top-values" }, `Top values: ${p.top_values.join(", ")}`),
      el("p", { class: "persona" }, p.persona_text),
      el(
        "button",
        { class: "pick-profile", onclick: () => onPick(p.profile_id) },
        `Shop as ${p.display_name}`,
      ),
    ),
  );
  return el(
    "section",
    { class: "screen profile-screen" },
    el("h1", {}, "Choose your privacy profile"),
    el("p", {}, "Pick whichever description sounds most like you. You can reconsider later."),
    el("div", { class: "profile-cards" }, ...cards),
  );
}

export interface StoreHandlers {
  onDownload(appId: string): void;
  onRemove(appId: string): void;
}

function appCard(app: StoreApp, installed: boolean, handlers: StoreHandlers): HTMLElement {
  return el(
    "article",
    { class: "app-card", "data-app-id": app.app_id, "data-light": app.score.light },
    el("header", {}, lightBadge(app.score), el("h3", {}, app.name)),
    el("p", { class: "description" }, app.description),
    installed
      ? el("span", { class: "installed-tag" }, "On your phone")
      : el(
          "button",
          { class: "download", onclick: () => handlers.onDownload(app.app_id) },
          "Get",
        ),
  );
}

export function storeScreen(
  storefront: Storefront,
  info: SessionInfo,
  profileName: string,
  handlers: StoreHandlers,
): HTMLElement {
  const installed = new Set(info.downloaded);
  const phoneItems = info.downloaded.map((appId) => {
    const app = storefront.apps.find((a) => a.app_id === appId);
    return el(
      "li",
      { "data-app-id": appId },
      el("span", {}, app ? app.name : appId),
      el(
        "button",
        { class: "remove", onclick: () => handlers.onRemove(appId) },
        "Remove",
      ),
    );
  });
  return el(
    "section",
    { class: "screen store-screen" },
    el(
      "header",
      { class: "store-header" },
      el("h1", {}, "App store"),
      el("span", { class: "current-profile" }, `Browsing as ${profileName}`),
    ),
    el(
      "div",
      { class: "store-body" },
      el(
        "div",
        { class: "app-grid" },
        ...storefront.apps.map((app) => appCard(app, installed.has(app.app_id), handlers)),
      ),
      el(
        "aside",
        { class: "virtual-phone" },
        el("h2", {}, "Your phone"),
        info.downloaded.length
          ? el("ul", { class: "phone-apps" }, ...phoneItems)
          : el("p", { class: "phone-empty" }, "Nothing installed yet."),
      ),
    ),
  );
}

export interface SelectiveHandlers {
  onSeeAlternatives(): void;
  onIgnore(reason: string): void;
  onCancel(): void;
}

/**
 * Friction dialog for a red-lit app. Downloading anyway requires a typed
 * reason; there is no way to dismiss without choosing cancel, alternatives,
 * or download-anyway.
 */
export function selectiveDialog(
  app: StoreApp,
  alternativesAvailable: boolean,
  handlers: SelectiveHandlers,
): HTMLElement {
  const reasonBox = el("textarea", {
    class: "ignore-reason",
    placeholder: "Why do you want it anyway?",
    rows: "2",
  });
  const ignoreButton = el(
    "button",
    {
      class: "ignore-anyway",
      disabled: true,
      onclick: () => handlers.onIgnore(reasonBox.value),
    },
    "Download anyway",
  );
  reasonBox.addEventListener("input", () => {
    ignoreButton.disabled = reasonBox.value.trim() === "";
  });
  return el(
    "div",
    { class: "modal-backdrop" },
    el(
      "div",
      { class: "modal selective-notice", role: "dialog", "aria-modal": "true" },
      el("h2", {}, `Hold on — ${app.name} clashes with your profile`),
      el(
        "p",
        {},
        "People who chose your profile mostly reject what this app collects:",
      ),
      el(
        "ul",
        { class: "flagged-practices" },
        ...app.practices.map((p) => el("li", {}, p.replace(":", " "))),
      ),
      alternativesAvailable
        ? el(
            "button",
            { class: "see-alternatives", onclick: () => handlers.onSeeAlternatives() },
            "See alternatives",
          )
        : el("p", { class: "no-alternatives-hint" }, "No better-scoring alternative exists."),
      el(
        "div",
        { class: "ignore-path" },
        reasonBox,
        ignoreButton,
      ),
      el("button", { class: "cancel", onclick: () => handlers.onCancel() }, "Cancel"),
    ),
  );
}

export interface ExploratoryHandlers {
  onKeep(): void;
  onSwitch(profileId: string): void;
}

/**
 * Mid-session profile re-check. Deliberately has no cancel: the only exits
 * are keeping the current profile or switching to another one.
 */
export function exploratoryDialog(
  profiles: Profile[],
  currentProfileId: string,
  handlers: ExploratoryHandlers,
): HTMLElement {
  const current = profiles.find((p) => p.profile_id === currentProfileId);
  const others = profiles.filter((p) => p.profile_id !== currentProfileId);
  return el(
    "div",
    { class: "modal-backdrop" },
    el(
      "div",
      { class: "modal exploratory-notice", role: "dialog", "aria-modal": "true" },
      el("h2", {}, "Quick check: does your profile still fit?"),
      el(
        "p",
        {},
        `You have been shopping as ${current ? current.display_name : currentProfileId}. ` +
          "If that still sounds right, keep it; otherwise pick a better match.",
      ),
      el(
        "button",
        { class: "keep-profile", onclick: () => handlers.onKeep() },
        "Keep my profile",
      ),
      el(
        "div",
        { class: "switch-options" },
        ...others.map((p) =>
          el(
            "button",
            {
              class: "switch-profile",
              "data-profile-id": p.profile_id,
              onclick: () => handlers.onSwitch(p.profile_id),
            },
            `Switch to ${p.display_name}`,
          ),
        ),
      ),
    ),
  );
}

export interface AlternativesHandlers {
  onDownload(appId: string): void;
  onBack(): void;
}

export function alternativesScreen(
  forAppName: string,
  alternatives: Alternative[],
  handlers: AlternativesHandlers,
): HTMLElement {
  const rows = alternatives.map((alt) =>
    el(
      "li",
      { class: "alternative", "data-app-id": alt.app_id },
      lightBadge(alt.score),
      el("span", { class: "alt-name" }, alt.name),
      el(
        "button",
        { class: "download", onclick: () => handlers.onDownload(alt.app_id) },
        "Get this instead",
      ),
    ),
  );
  return el(
    "section",
    { class: "screen alternatives-screen" },
    el("h1", {}, `Alternatives to ${forAppName}`),
    alternatives.length
      ? el("ul", { class: "alternatives-list" }, ...rows)
      : el(
          "p",
          { class: "alternatives-empty" },
          "No app in this family scores better for your profile.",
        ),
    el("button", { class: "back-to-store", onclick: () => handlers.onBack() }, "Back to store"),
  );
}

/** Wrong-state answers (409s) surface here and resync on dismiss. */
export function recoverableDialog(message: string, onOk: () => void): HTMLElement {
  return el(
    "div",
    { class: "modal-backdrop" },
    el(
      "div",
      { class: "modal recoverable-error", role: "alertdialog" },
      el("p", {}, message),
      el("button", { class: "ok", onclick: () => onOk() }, "OK"),
    ),
  );
}

/** Blocking overlay for a dead service; the only action is retry. */
export function unreachableBanner(onRetry: () => void): HTMLElement {
  return el(
    "div",
    { class: "modal-backdrop" },
    el(
      "div",
      { class: "modal unreachable-banner", role: "alert" },
      el("h2", {}, "Store unavailable"),
      el("p", {}, "The store service is not answering. Nothing was lost."),
      el("button", { class: "retry", onclick: () => onRetry() }, "Retry"),
    ),
  );
}
