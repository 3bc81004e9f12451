// Thin typed client over fetch; the console holds no business logic of
// its own, everything is server-computed.

import type {
  AblationReport,
  AnalyzePayload,
  Brief,
  GapsPayload,
  Granularity,
  Heatmap,
  Offering,
  Region,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public errors: string[],
  ) {
    super(errors.join("; ") || `HTTP ${status}`);
  }
}

export interface ApiConfig {
  baseUrl: string; // e.g. http://localhost:8000
  token?: string;
}

export class ApiClient {
  constructor(private config: ApiConfig) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (this.config.token) headers["Authorization"] = `Bearer ${this.config.token}`;
    const resp = await fetch(`${this.config.baseUrl}/api/v1${path}`, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!resp.ok) {
      let errors: string[] = [];
      try {
        const payload = await resp.json();
        errors = Array.isArray(payload?.errors) ? payload.errors : [];
      } catch {
        // non-JSON error body
      }
      throw new ApiError(resp.status, errors);
    }
    return (await resp.json()) as T;
  }

  getGaps(topN = 10): Promise<GapsPayload> {
    return this.request("GET", `/gaps?top_n=${topN}`);
  }

  listOfferings(): Promise<Offering[]> {
    return this.request("GET", "/offerings");
  }

  generateBrief(personaId: string, challengeId: string, offeringId: string): Promise<Brief> {
    return this.request("POST", "/briefs", {
      persona_id: personaId,
      challenge_id: challengeId,
      offering_id: offeringId,
    });
  }

  distillInsight(story: string): Promise<{ insight: string }> {
    return this.request("POST", "/briefs/distill", { story });
  }

  getHeatmap(creativeId: string): Promise<Heatmap> {
    return this.request("GET", `/creatives/${creativeId}/heatmap`);
  }

  getRegions(creativeId: string, threshold: number): Promise<Region[]> {
    return this.request("GET", `/creatives/${creativeId}/regions?threshold=${threshold}`);
  }

  ablationReport(creativeId: string, csv: string): Promise<AblationReport> {
    return this.requestRaw(`/creatives/${creativeId}/ablation-report`, csv);
  }

  private async requestRaw<T>(path: string, body: string): Promise<T> {
    const headers: Record<string, string> = { "Content-Type": "text/csv" };
    if (this.config.token) headers["Authorization"] = `Bearer ${this.config.token}`;
    const resp = await fetch(`${this.config.baseUrl}/api/v1${path}`, {
      method: "POST",
      headers,
      body,
    });
    if (!resp.ok) throw new ApiError(resp.status, []);
    return (await resp.json()) as T;
  }

  analyze(granularity: Granularity): Promise<AnalyzePayload> {
    return this.request("POST", "/telemetry/analyze", { granularity });
  }

  annotate(ref: string, status: "accept" | "dismiss"): Promise<{ ref: string; status: string }> {
    return this.request("POST", "/annotations", { ref, status });
  }

  listAnnotations(): Promise<{ ref: string; status: string }[]> {
    return this.request("GET", "/annotations");
  }
}
