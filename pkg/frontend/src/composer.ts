// Brief composer: generate -> edit story/insight/idea -> re-distill ->
// export as plain text for decks.

import type { ApiClient } from "./api.js";
import { clear, el } from "./dom.js";
import { canGenerateBrief, type ViewState } from "./state.js";
import type { Brief } from "./types.js";

export interface ComposerContext {
  api: ApiClient;
  state: ViewState;
  onError(message: string, retry?: () => void): void;
  personaName(id: string | null): string;
  challengeName(id: string | null): string;
  offeringName(id: string | null): string;
}

export function exportBriefText(
  ctx: ComposerContext,
  story: string,
  insight: string,
  idea: string,
): string {
  return [
    `CAMPAIGN BRIEF`,
    `Persona:   ${ctx.personaName(ctx.state.selectedPersonaId)}`,
    `Challenge: ${ctx.challengeName(ctx.state.selectedChallengeId)}`,
    `Offering:  ${ctx.offeringName(ctx.state.selectedOfferingId)}`,
    ``,
    `STORY`,
    story,
    ``,
    `INSIGHT`,
    insight,
    ``,
    `IDEA`,
    idea,
    ``,
  ].join("\n");
}

export function renderComposer(host: HTMLElement, ctx: ComposerContext): void {
  clear(host);
  const { state } = ctx;

  const header = el("div", { class: "composer-selection" }, [
    el("span", { class: "sel-persona", text: ctx.personaName(state.selectedPersonaId) }),
    el("span", { class: "sel-challenge", text: ctx.challengeName(state.selectedChallengeId) }),
    el("span", { class: "sel-offering", text: ctx.offeringName(state.selectedOfferingId) }),
  ]);

  const generate = el("button", { class: "generate-brief", text: "Generate brief" }) as HTMLButtonElement;
  generate.disabled = !canGenerateBrief(state);

  const editor = el("div", { class: "brief-editor" });
  const story = el("textarea", { class: "edit-story" }) as HTMLTextAreaElement;
  const insight = el("textarea", { class: "edit-insight" }) as HTMLTextAreaElement;
  const idea = el("textarea", { class: "edit-idea" }) as HTMLTextAreaElement;
  const redistill = el("button", { class: "redistill", text: "Re-distill insight" }) as HTMLButtonElement;
  const exportButton = el("button", { class: "export-brief", text: "Export text" }) as HTMLButtonElement;
  const exportArea = el("pre", { class: "export-output" });

  function fill(brief: Brief): void {
    state.briefDraft = brief;
    story.value = brief.story;
    insight.value = brief.insight;
    idea.value = brief.idea;
    editor.classList.add("has-draft");
  }
  if (state.briefDraft) fill(state.briefDraft);

  generate.addEventListener("click", async () => {
    if (!canGenerateBrief(state)) return;
    try {
      const brief = await ctx.api.generateBrief(
        state.selectedPersonaId!,
        state.selectedChallengeId!,
        state.selectedOfferingId!,
      );
      fill(brief);
    } catch (e) {
      ctx.onError(`brief generation failed: ${e}`, () => generate.click());
    }
  });

  redistill.addEventListener("click", async () => {
    try {
      const result = await ctx.api.distillInsight(story.value);
      insight.value = result.insight;
    } catch (e) {
      ctx.onError(`re-distill failed: ${e}`, () => redistill.click());
    }
  });

  exportButton.addEventListener("click", () => {
    exportArea.textContent = exportBriefText(ctx, story.value, insight.value, idea.value);
  });

  editor.append(
    el("label", { text: "Story" }), story,
    el("label", { text: "Insight" }), insight, redistill,
    el("label", { text: "Idea" }), idea,
    exportButton, exportArea,
  );
  host.append(header, generate, editor);
}
