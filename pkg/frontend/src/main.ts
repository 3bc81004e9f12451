// Console wiring: one page, five panels, all state flowing through
// ViewState and every fact fetched from /api/v1.

import { ApiClient } from "./api.js";
import { showBanner } from "./banner.js";
import { renderChallengeList, renderPersonaList } from "./browser.js";
import { renderComposer, type ComposerContext } from "./composer.js";
import { renderDashboard } from "./dashboard.js";
import { el } from "./dom.js";
import { renderInspector } from "./inspector.js";
import { renderGapMatrix } from "./matrix.js";
import { initialState, selectGapCell } from "./state.js";
import type { GapsPayload, Offering } from "./types.js";

interface ConsoleConfig {
  apiBase: string;
  token?: string;
  creativeId?: string;
}

export function mountConsole(root: HTMLElement, config: ConsoleConfig): void {
  const api = new ApiClient({ baseUrl: config.apiBase, token: config.token });
  const state = initialState();

  const bannerHost = el("div", { class: "banners" });
  const personaHost = el("div", { class: "panel personas-panel" });
  const challengeHost = el("div", { class: "panel challenges-panel" });
  const matrixHost = el("div", { class: "panel matrix-panel" });
  const composerHost = el("div", { class: "panel composer-panel" });
  const inspectorHost = el("div", { class: "panel inspector-panel" });
  const dashboardHost = el("div", { class: "panel dashboard-panel" });
  root.append(bannerHost, personaHost, challengeHost, matrixHost,
              composerHost, inspectorHost, dashboardHost);

  const onError = (message: string, retry?: () => void) => {
    showBanner(bannerHost, message, retry);
  };

  let gapsPayload: GapsPayload | null = null;
  let offerings: Offering[] = [];

  const composerCtx: ComposerContext = {
    api,
    state,
    onError,
    personaName: (id) =>
      gapsPayload?.matrix.personas.find((p) => p.persona_id === id)?.name ?? "(pick persona)",
    challengeName: (id) =>
      gapsPayload?.matrix.challenges.find((c) => c.challenge_id === id)?.name ?? "(pick challenge)",
    offeringName: (id) =>
      offerings.find((o) => o.offering_id === id)?.name ?? "(pick offering)",
  };

  function redraw(): void {
    if (gapsPayload) {
      renderPersonaList(personaHost, gapsPayload.matrix.personas,
                        state.selectedPersonaId, (id) => {
                          state.selectedPersonaId = id;
                          redraw();
                        });
      renderChallengeList(challengeHost, gapsPayload.matrix.challenges,
                          state.selectedChallengeId, (id) => {
                            state.selectedChallengeId = id;
                            redraw();
                          });
      renderGapMatrix(matrixHost, gapsPayload.matrix, {
        onCellClick: (personaId, challengeId) => {
          selectGapCell(state, personaId, challengeId);
          redraw();
        },
      }, {
        personaId: state.selectedPersonaId,
        challengeId: state.selectedChallengeId,
      });
    }
    renderComposer(composerHost, composerCtx);
  }

  async function boot(): Promise<void> {
    try {
      gapsPayload = await api.getGaps();
      offerings = await api.listOfferings();
      if (offerings.length === 1) state.selectedOfferingId = offerings[0].offering_id;
      redraw();
    } catch (e) {
      onError(`failed to load gaps: ${e}`, () => void boot());
    }
    if (config.creativeId) {
      const inspector = renderInspector(inspectorHost, {
        api,
        creativeId: config.creativeId,
        threshold: state.heatmapThreshold,
        onThresholdChange: (value) => {
          state.heatmapThreshold = value;
        },
        onError,
      });
      void inspector.refresh();
    }
    renderDashboard(dashboardHost, {
      api,
      granularity: state.granularity,
      onGranularityChange: (g) => {
        state.granularity = g;
      },
      onError,
    });
  }

  void boot();
}

declare global {
  interface Window {
    ADINTEL_CONFIG?: ConsoleConfig;
  }
}

if (typeof document !== "undefined" && document.getElementById("console-root")) {
  mountConsole(
    document.getElementById("console-root") as HTMLElement,
    window.ADINTEL_CONFIG ?? { apiBase: "http://127.0.0.1:8000" },
  );
}
