import { beforeEach, describe, expect, it, vi } from "vitest";

import { mountConsole } from "../src/main.js";
import { canGenerateBrief, initialState, selectGapCell } from "../src/state.js";
import { trendlinePolyline } from "../src/dashboard.js";
import { createMockServer, type MockServer } from "./mock_server.js";

let server: MockServer;
let root: HTMLElement;

function flush(): Promise<void> {
  // let queued promise callbacks and re-renders settle
  return new Promise((resolve) => setTimeout(resolve, 0));
}

async function mount(config: Record<string, unknown> = {}): Promise<void> {
  mountConsole(root, { apiBase: "http://mock", creativeId: "cr1", ...config });
  await flush();
  await flush();
}

beforeEach(() => {
  server = createMockServer();
  vi.stubGlobal("fetch", server.fetch);
  document.body.innerHTML = "";
  root = document.createElement("div");
  document.body.append(root);
});

describe("view state", () => {
  it("enables brief generation only with persona+challenge+offering", () => {
    const state = initialState();
    expect(canGenerateBrief(state)).toBe(false);
    state.selectedPersonaId = "persona-000";
    expect(canGenerateBrief(state)).toBe(false);
    state.selectedChallengeId = "challenge-001";
    expect(canGenerateBrief(state)).toBe(false);
    state.selectedOfferingId = "offering-0001";
    expect(canGenerateBrief(state)).toBe(true);
  });

  it("gap cell selection sets both sides", () => {
    const state = initialState();
    selectGapCell(state, "persona-001", "challenge-000");
    expect(state.selectedPersonaId).toBe("persona-001");
    expect(state.selectedChallengeId).toBe("challenge-000");
  });
});

describe("browser and matrix", () => {
  it("lists personas and challenges with sizes", async () => {
    await mount();
    const personaItems = root.querySelectorAll(".persona-list .browser-item");
    expect(personaItems.length).toBe(2);
    expect(personaItems[0].textContent).toContain("Efficiency Enthusiasts");
    expect(personaItems[0].textContent).toContain("206 ads");
    const challengeItems = root.querySelectorAll(".challenge-list .browser-item");
    expect(challengeItems.length).toBe(2);
  });

  it("renders the full count grid", async () => {
    await mount();
    const cells = [...root.querySelectorAll(".gap-cell")];
    expect(cells.length).toBe(4);
    expect(cells.map((c) => c.textContent)).toEqual(["9", "0", "4", "7"]);
  });

  it("clicking the lowest-count cell pre-fills the composer", async () => {
    await mount();
    const zeroCell = [...root.querySelectorAll(".gap-cell")].find(
      (c) => (c as HTMLElement).dataset.count === "0",
    ) as HTMLElement;
    zeroCell.click();
    await flush();
    expect(root.querySelector(".sel-persona")?.textContent).toBe("Efficiency Enthusiasts");
    expect(root.querySelector(".sel-challenge")?.textContent).toBe(
      "Streamlining Work Transport",
    );
    expect(zeroCell.isConnected).toBe(false); // matrix re-rendered
    const selected = root.querySelector(".gap-cell.selected") as HTMLElement;
    expect(selected.dataset.persona).toBe("persona-000");
    expect(selected.dataset.challenge).toBe("challenge-001");
  });
});

describe("brief composition round-trip", () => {
  async function selectPair(): Promise<void> {
    const zeroCell = [...root.querySelectorAll(".gap-cell")].find(
      (c) => (c as HTMLElement).dataset.count === "0",
    ) as HTMLElement;
    zeroCell.click();
    await flush();
  }

  it("generate -> edit -> export produces deck text with edits", async () => {
    await mount();
    await selectPair();

    const generate = root.querySelector(".generate-brief") as HTMLButtonElement;
    expect(generate.disabled).toBe(false); // offering auto-selected (only one)
    generate.click();
    await flush();

    const story = root.querySelector(".edit-story") as HTMLTextAreaElement;
    const insight = root.querySelector(".edit-insight") as HTMLTextAreaElement;
    expect(story.value).toContain("Samuel Tan");
    expect(server.briefRequests[0]).toEqual({
      persona_id: "persona-000",
      challenge_id: "challenge-001",
      offering_id: "offering-0001",
    });

    insight.value = "Edited insight line.";
    (root.querySelector(".export-brief") as HTMLButtonElement).click();
    const exported = root.querySelector(".export-output")?.textContent ?? "";
    expect(exported).toContain("CAMPAIGN BRIEF");
    expect(exported).toContain("Efficiency Enthusiasts");
    expect(exported).toContain("Edited insight line.");
    expect(exported).toContain("Samuel Tan");
  });

  it("generate is disabled without a full selection", async () => {
    await mount();
    // nothing selected yet: offering auto-picks, persona/challenge do not
    const generate = root.querySelector(".generate-brief") as HTMLButtonElement;
    expect(generate.disabled).toBe(true);
  });

  it("re-distill replaces the insight from the server", async () => {
    await mount();
    await selectPair();
    (root.querySelector(".generate-brief") as HTMLButtonElement).click();
    await flush();

    (root.querySelector(".redistill") as HTMLButtonElement).click();
    await flush();
    const insight = root.querySelector(".edit-insight") as HTMLTextAreaElement;
    expect(insight.value).toContain("Distilled:");
  });
});

describe("creative inspector", () => {
  it("renders the heatmap overlay grid", async () => {
    await mount();
    const cells = root.querySelectorAll(".heat-cell");
    expect(cells.length).toBe(16);
  });

  it("region list shrinks monotonically as the threshold rises", async () => {
    await mount();
    const slider = root.querySelector(".threshold-slider") as HTMLInputElement;

    const countAt = async (value: string): Promise<number> => {
      slider.value = value;
      slider.dispatchEvent(new Event("input"));
      await flush();
      return root.querySelectorAll(".region-item").length;
    };

    const counts = [
      await countAt("0.10"),
      await countAt("0.60"),
      await countAt("0.90"),
    ];
    expect(counts[0]).toBe(2);
    expect(counts[1]).toBe(1);
    expect(counts[2]).toBe(1);
    expect(counts[0] >= counts[1] && counts[1] >= counts[2]).toBe(true);
  });
});

describe("telemetry dashboard", () => {
  it("renders trendlines and the five-section analyze preview", async () => {
    await mount();
    (root.querySelector(".analyze") as HTMLButtonElement).click();
    await flush();

    const polylines = root.querySelectorAll(".trend-svg polyline");
    expect(polylines.length).toBe(4);
    const cprLine = root.querySelector('.trend[data-metric="cpr"] polyline');
    expect(cprLine?.getAttribute("points")?.split(" ").length).toBe(3);

    const sections = [...root.querySelectorAll(".prompt-section h3")].map(
      (h) => h.textContent,
    );
    expect(sections).toEqual(["knowledge", "role", "task", "guiding_questions", "data"]);

    const questions = root.querySelectorAll(".guiding-questions li");
    expect(questions.length).toBe(6);
    expect(questions[0].textContent).toBe("How did CPR and Spend evolve?");
    expect(questions[5].textContent).toBe("What actions should be taken?");
  });

  it("accept/dismiss persists annotations server-side", async () => {
    await mount();
    (root.querySelector(".analyze") as HTMLButtonElement).click();
    await flush();

    const items = root.querySelectorAll(".action-item");
    expect(items.length).toBe(2);
    (items[0].querySelector(".accept") as HTMLButtonElement).click();
    (items[1].querySelector(".dismiss") as HTMLButtonElement).click();
    await flush();

    expect(server.annotations).toEqual([
      { ref: "action-0-budget", status: "accept" },
      { ref: "action-1-monitoring", status: "dismiss" },
    ]);
    expect((items[0] as HTMLElement).dataset.status).toBe("accept");
    expect((items[1] as HTMLElement).dataset.status).toBe("dismiss");
  });
});

describe("failure handling", () => {
  it("shows a non-blocking banner with retry on API failure", async () => {
    server.failNext.count = 2; // gaps + offerings both fail
    await mount();
    const banner = root.querySelector(".banner");
    expect(banner).not.toBeNull();
    expect(banner?.textContent).toContain("failed to load gaps");

    (root.querySelector(".banner-retry") as HTMLButtonElement).click();
    await flush();
    await flush();
    expect(root.querySelectorAll(".gap-cell").length).toBe(4); // recovered
  });
});

describe("trendline math", () => {
  it("spans the chart and skips undefined points", () => {
    const points = trendlinePolyline([10, null, 20]);
    const coords = points.split(" ");
    expect(coords.length).toBe(2);
    expect(coords[0]).toBe("0.0,80.0");
    expect(coords[1]).toBe("420.0,0.0");
  });

  it("handles constant series", () => {
    const points = trendlinePolyline([5, 5]);
    expect(points.split(" ").length).toBe(2);
  });
});
