import { describe, expect, it } from "vitest";

import { ApiClient, ScriptParseError, type FetchLike } from "../src/api.js";
import { renderBanner, renderMetricsPanel, renderSubmissionLog } from "../src/render.js";

function fakeFetch(routes: Record<string, { status: number; body: unknown }>): FetchLike {
  return async (input: string) => {
    const path = new URL(input, "http://x").pathname;
    const route = routes[path];
    if (route === undefined) {
      throw new TypeError("fetch failed");
    }
    return new Response(JSON.stringify(route.body), {
      status: route.status,
      headers: { "Content-Type": "application/json" },
    });
  };
}

describe("ApiClient", () => {
  it("fetches and types the topology", async () => {
    const api = new ApiClient(
      "http://node",
      fakeFetch({
        "/api/topology": { status: 200, body: { containers: [], connections: [] } },
      }),
    );
    const topo = await api.topology();
    expect(topo.containers).toEqual([]);
  });

  it("turns a 400 script response into ScriptParseError with location", async () => {
    const api = new ApiClient(
      "http://node",
      fakeFetch({
        "/api/script": { status: 400, body: { error: "unbalanced parentheses", line: 2, column: 5 } },
      }),
    );
    await expect(api.submitScript("(((")).rejects.toThrowError(ScriptParseError);
    try {
      await api.submitScript("(((");
    } catch (err) {
      const parseErr = err as ScriptParseError;
      expect(parseErr.line).toBe(2);
      expect(parseErr.column).toBe(5);
    }
  });

  it("returns per-form results for a 200 script response", async () => {
    const api = new ApiClient(
      "http://node",
      fakeFetch({
        "/api/script": {
          status: 200,
          body: { results: [{ index: 0, ok: "unit" }, { index: 1, error: "boom" }] },
        },
      }),
    );
    const response = await api.submitScript("(define x 1) (boom)");
    expect(response.results).toHaveLength(2);
  });

  it("propagates network failures", async () => {
    const api = new ApiClient("http://node", fakeFetch({}));
    await expect(api.topology()).rejects.toThrow();
  });
});

describe("render fragments", () => {
  it("banner reflects the connection state", () => {
    expect(renderBanner(true, "http://node")).toContain("connected");
    expect(renderBanner(false, "http://node")).toContain("unreachable");
  });

  it("metrics panel shows the empty state without monitoring", () => {
    expect(renderMetricsPanel(null, new Map())).toContain("no metrics");
    expect(renderMetricsPanel({ installed: false, metrics: [] }, new Map())).toContain(
      "monitoring is not installed",
    );
  });

  it("metrics panel renders counts and temporal summaries", () => {
    const html = renderMetricsPanel(
      {
        installed: true,
        metrics: [
          { id: 1, kind: "count_method", impl: "Echo", operation: "echo", count: 100 },
          {
            id: 2,
            kind: "temporal",
            impl: "Echo",
            operation: "echo",
            count: 100,
            min_us: 5000,
            mean_us: 6000,
            max_us: 9000,
            total_us: 600000,
          },
        ],
      },
      new Map(),
    );
    expect(html).toContain('data-metric="1">100<');
    expect(html).toContain("mean 6.0ms");
  });

  it("submission log renders parse errors inline", () => {
    const html = renderSubmissionLog([], new ScriptParseError("unbalanced", 1, 3));
    expect(html).toContain("line 1, column 3");
  });
});
