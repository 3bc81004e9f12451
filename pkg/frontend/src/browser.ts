// Persona / challenge browser lists: name, size, exemplar ads.

import { clear, el } from "./dom.js";
import type { Challenge, Persona } from "./types.js";

interface Item {
  id: string;
  name: string;
  description: string;
  size: number;
  exemplars: string[];
}

function toItem(p: Persona | Challenge): Item {
  return {
    id: "persona_id" in p ? p.persona_id : p.challenge_id,
    name: p.name,
    description: p.description,
    size: p.size,
    exemplars: p.exemplar_ad_ids,
  };
}

function renderList(
  host: HTMLElement,
  items: Item[],
  kind: "persona" | "challenge",
  selectedId: string | null,
  onSelect: (id: string) => void,
): void {
  clear(host);
  const list = el("ul", { class: `${kind}-list browser-list` });
  for (const item of items) {
    const entry = el(
      "li",
      {
        class: `browser-item${item.id === selectedId ? " selected" : ""}`,
        "data-id": item.id,
      },
      [
        el("span", { class: "item-name", text: item.name }),
        el("span", { class: "item-size", text: `${item.size} ads` }),
        el("span", { class: "item-description", text: item.description }),
        el("span", {
          class: "item-exemplars",
          text: item.exemplars.length ? `e.g. ${item.exemplars.join(", ")}` : "",
        }),
      ],
    );
    entry.addEventListener("click", () => onSelect(item.id));
    list.append(entry);
  }
  host.append(list);
}

export function renderPersonaList(
  host: HTMLElement,
  personas: Persona[],
  selectedId: string | null,
  onSelect: (id: string) => void,
): void {
  renderList(host, personas.map(toItem), "persona", selectedId, onSelect);
}

export function renderChallengeList(
  host: HTMLElement,
  challenges: Challenge[],
  selectedId: string | null,
  onSelect: (id: string) => void,
): void {
  renderList(host, challenges.map(toItem), "challenge", selectedId, onSelect);
}
