// Telemetry dashboard: SVG trendlines per metric plus the analyze
// preview (prompt sections, guiding questions, recommended actions with
// accept/dismiss persisted server-side).

import type { ApiClient } from "./api.js";
import { clear, el, svgEl } from "./dom.js";
import type { AnalyzePayload, Granularity, MetricPoint, TrendSeries } from "./types.js";

const TREND_METRICS = ["cpr", "spend", "cpm", "ctr"] as const;

const CHART_WIDTH = 420;
const CHART_HEIGHT = 80;

function metricValues(points: MetricPoint[], metric: string): (number | null)[] {
  return points.map((p) => p[metric as keyof MetricPoint] as number | null);
}

export function trendlinePolyline(values: (number | null)[]): string {
  const defined = values.filter((v): v is number => v !== null);
  if (defined.length === 0) return "";
  const lo = Math.min(...defined);
  const hi = Math.max(...defined);
  const span = hi - lo || 1;
  const step = values.length > 1 ? CHART_WIDTH / (values.length - 1) : 0;
  return values
    .map((v, i) => {
      if (v === null) return null;
      const x = i * step;
      const y = CHART_HEIGHT - ((v - lo) / span) * CHART_HEIGHT;
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    })
    .filter((p): p is string => p !== null)
    .join(" ");
}

export function renderTrendlines(host: HTMLElement, series: TrendSeries): void {
  clear(host);
  for (const metric of TREND_METRICS) {
    const values = metricValues(series.points, metric);
    const figure = el("figure", { class: "trend", "data-metric": metric }, [
      el("figcaption", { text: metric }),
    ]);
    const svg = svgEl("svg", {
      viewBox: `0 0 ${CHART_WIDTH} ${CHART_HEIGHT}`,
      class: "trend-svg",
    });
    const line = svgEl("polyline", {
      points: trendlinePolyline(values),
      fill: "none",
      stroke: "currentColor",
      "stroke-width": "2",
    });
    svg.append(line);
    figure.append(svg);
    host.append(figure);
  }
}

export interface DashboardContext {
  api: ApiClient;
  granularity: Granularity;
  onGranularityChange(g: Granularity): void;
  onError(message: string, retry?: () => void): void;
}

export function renderAnalyzePreview(host: HTMLElement, payload: AnalyzePayload,
                                     ctx: DashboardContext): void {
  clear(host);
  const sections = el("div", { class: "prompt-sections" });
  for (const [name, content] of Object.entries(payload.prompt.sections)) {
    sections.append(
      el("section", { class: `prompt-section section-${name}` }, [
        el("h3", { text: name }),
        el("pre", { text: content }),
      ]),
    );
  }
  const questions = el("ol", { class: "guiding-questions" });
  for (const q of payload.prompt.guiding_questions) {
    questions.append(el("li", { text: q }));
  }

  const actions = el("ul", { class: "actions" });
  payload.actions.forEach((action, i) => {
    const ref = `action-${i}-${action.kind}`;
    const accept = el("button", { class: "accept", text: "Accept" });
    const dismiss = el("button", { class: "dismiss", text: "Dismiss" });
    const item = el("li", { class: "action-item", "data-ref": ref }, [
      el("span", { class: "action-kind", text: `[${action.kind}/${action.confidence}] ` }),
      el("span", { class: "action-description", text: action.description }),
      accept,
      dismiss,
    ]);
    const mark = (status: "accept" | "dismiss") => async () => {
      try {
        await ctx.api.annotate(ref, status);
        item.dataset.status = status;
      } catch (e) {
        ctx.onError(`annotation failed: ${e}`);
      }
    };
    accept.addEventListener("click", mark("accept"));
    dismiss.addEventListener("click", mark("dismiss"));
    actions.append(item);
  });

  host.append(sections, questions, actions);
}

export function renderDashboard(host: HTMLElement, ctx: DashboardContext): {
  refresh: () => Promise<void>;
} {
  clear(host);
  const trends = el("div", { class: "trends" });
  const preview = el("div", { class: "analyze-preview" });
  const select = el("select", { class: "granularity" }) as HTMLSelectElement;
  for (const g of ["weekly", "daily", "creative"]) {
    select.append(el("option", { value: g, text: g }));
  }
  select.value = ctx.granularity;
  const analyze = el("button", { class: "analyze", text: "Analyze" });

  async function refresh(): Promise<void> {
    try {
      const payload = await ctx.api.analyze(select.value as Granularity);
      renderTrendlines(trends, payload.series);
      renderAnalyzePreview(preview, payload, ctx);
    } catch (e) {
      ctx.onError(`analysis failed: ${e}`, () => void refresh());
    }
  }

  select.addEventListener("change", () => {
    ctx.onGranularityChange(select.value as Granularity);
  });
  analyze.addEventListener("click", () => void refresh());

  host.append(select, analyze, trends, preview);
  return { refresh };
}
