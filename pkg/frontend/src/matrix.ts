// Gap matrix: |P| x |C| grid colored by coverage count. Clicking a cell
// pre-selects that pairing for brief composition.

import { clear, el } from "./dom.js";
import type { MatrixPayload } from "./types.js";

export interface MatrixCallbacks {
  onCellClick(personaId: string, challengeId: string): void;
}

function cellColor(count: number, max: number): string {
  if (max <= 0) return "rgba(30, 120, 90, 0.05)";
  const intensity = count / max;
  return `rgba(30, 120, 90, ${(0.08 + 0.72 * intensity).toFixed(3)})`;
}

export function renderGapMatrix(
  host: HTMLElement,
  matrix: MatrixPayload,
  callbacks: MatrixCallbacks,
  highlight?: { personaId?: string | null; challengeId?: string | null },
): void {
  clear(host);
  const max = Math.max(0, ...matrix.counts.flat());
  const table = el("table", { class: "gap-matrix" });

  const head = el("tr", {}, [el("th", { text: "" })]);
  for (const challenge of matrix.challenges) {
    head.append(el("th", { text: challenge.name, "data-challenge": challenge.challenge_id }));
  }
  table.append(head);

  matrix.personas.forEach((persona, p) => {
    const row = el("tr", {}, [el("th", { text: persona.name })]);
    matrix.challenges.forEach((challenge, c) => {
      const count = matrix.counts[p][c];
      const selected =
        highlight?.personaId === persona.persona_id &&
        highlight?.challengeId === challenge.challenge_id;
      const cell = el("td", {
        class: `gap-cell${selected ? " selected" : ""}`,
        text: String(count),
        "data-persona": persona.persona_id,
        "data-challenge": challenge.challenge_id,
        "data-count": String(count),
        style: `background:${cellColor(count, max)}`,
      });
      cell.addEventListener("click", () =>
        callbacks.onCellClick(persona.persona_id, challenge.challenge_id),
      );
      row.append(cell);
    });
    table.append(row);
  });
  host.append(table);
}
