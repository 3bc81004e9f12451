// Creative inspector: heatmap overlay grid, threshold slider, server-
// ranked region list, and the ablation report table.

import type { ApiClient } from "./api.js";
import { clear, el } from "./dom.js";
import type { AblationReport, Heatmap, Region } from "./types.js";

export interface InspectorContext {
  api: ApiClient;
  creativeId: string;
  threshold: number;
  onThresholdChange(value: number): void;
  onError(message: string, retry?: () => void): void;
}

export function renderHeatmapOverlay(host: HTMLElement, heatmap: Heatmap): void {
  clear(host);
  const grid = el("div", {
    class: "heatmap-overlay",
    style: `display:grid;grid-template-columns:repeat(${heatmap.width},1fr);`,
  });
  heatmap.weights.forEach((w, i) => {
    grid.append(
      el("div", {
        class: "heat-cell",
        "data-index": String(i),
        "data-weight": w.toFixed(4),
        style: `background:rgba(220,60,40,${(0.75 * w).toFixed(3)})`,
      }),
    );
  });
  host.append(grid);
}

export function renderRegionList(host: HTMLElement, regions: Region[]): void {
  clear(host);
  const list = el("ol", { class: "region-list" });
  for (const region of regions) {
    list.append(
      el("li", { class: "region-item", "data-region": region.region_id }, [
        el("span", { text: `${region.region_id} ` }),
        el("span", { class: "region-bbox", text: `bbox ${region.bbox.join(",")}` }),
        el("span", { class: "region-mass", text: ` mass ${region.mass.toFixed(3)}` }),
      ]),
    );
  }
  host.append(list);
}

export function renderAblationTable(host: HTMLElement, report: AblationReport): void {
  clear(host);
  const table = el("table", { class: "ablation-table" });
  table.append(
    el("tr", {}, [
      el("th", { text: "layout" }),
      el("th", { text: "lpv" }),
      el("th", { text: "ctr-lpv" }),
      el("th", { text: "ctr" }),
      el("th", { text: "f1" }),
    ]),
  );
  for (const row of [...report.rows, report.overall]) {
    table.append(
      el("tr", { class: row.label === "overall" ? "overall-row" : "variant-row" }, [
        el("td", { text: row.label }),
        el("td", { text: row.lpv_ratio.toFixed(3) }),
        el("td", { text: row.ctr_lpv_ratio.toFixed(3) }),
        el("td", { text: row.ctr_ratio.toFixed(3) }),
        el("td", { text: row.f1.toFixed(3) }),
      ]),
    );
  }
  host.append(table);
}

export function renderInspector(host: HTMLElement, ctx: InspectorContext): {
  refresh: () => Promise<void>;
} {
  clear(host);
  const overlayHost = el("div", { class: "overlay-host" });
  const regionHost = el("div", { class: "region-host" });
  const slider = el("input", {
    type: "range",
    min: "0.05",
    max: "0.95",
    step: "0.05",
    value: String(ctx.threshold),
    class: "threshold-slider",
  }) as HTMLInputElement;
  const sliderLabel = el("span", {
    class: "threshold-value",
    text: ctx.threshold.toFixed(2),
  });

  async function refresh(): Promise<void> {
    try {
      const heatmap = await ctx.api.getHeatmap(ctx.creativeId);
      renderHeatmapOverlay(overlayHost, heatmap);
      const regions = await ctx.api.getRegions(ctx.creativeId, ctx.threshold);
      renderRegionList(regionHost, regions);
    } catch (e) {
      ctx.onError(`creative inspector failed: ${e}`, () => void refresh());
    }
  }

  slider.addEventListener("input", () => {
    ctx.threshold = Number(slider.value);
    sliderLabel.textContent = ctx.threshold.toFixed(2);
    ctx.onThresholdChange(ctx.threshold);
    void refresh();
  });

  host.append(slider, sliderLabel, overlayHost, regionHost);
  return { refresh };
}
