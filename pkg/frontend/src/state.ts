// Console view state. The single invariant that matters: brief generation
// is enabled only when persona, challenge and offering are all selected.

import type { Brief, Granularity } from "./types.js";

export interface ViewState {
  selectedPersonaId: string | null;
  selectedChallengeId: string | null;
  selectedOfferingId: string | null;
  briefDraft: Brief | null;
  granularity: Granularity;
  heatmapThreshold: number;
}

export function initialState(): ViewState {
  return {
    selectedPersonaId: null,
    selectedChallengeId: null,
    selectedOfferingId: null,
    briefDraft: null,
    granularity: "weekly",
    heatmapThreshold: 0.6,
  };
}

export function canGenerateBrief(state: ViewState): boolean {
  return Boolean(
    state.selectedPersonaId && state.selectedChallengeId && state.selectedOfferingId,
  );
}

export function selectGapCell(state: ViewState, personaId: string, challengeId: string): void {
  state.selectedPersonaId = personaId;
  state.selectedChallengeId = challengeId;
}
