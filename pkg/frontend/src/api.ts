// Typed client for the node gateway. The shapes mirror docs/api.md exactly;
// the console holds no node state beyond what these endpoints return.

export interface TopologyComponent {
  id: number;
  impl: string;
  facets: string[];
  receptacles: string[];
}

export interface TopologyContainer {
  id: number;
  components: TopologyComponent[];
}

export interface TopologyConnection {
  source: { component: number; receptacle: string };
  target: { component: number; facet: string };
}

export interface Topology {
  containers: TopologyContainer[];
  connections: TopologyConnection[];
}

export interface Metric {
  id: number;
  kind: "count_method" | "count_component" | "temporal" | "debug_trace";
  count: number;
  impl?: string;
  operation?: string;
  logfile?: string;
  min_us?: number | null;
  max_us?: number | null;
  mean_us?: number | null;
  total_us?: number | null;
}

export interface MetricsBody {
  installed: boolean;
  metrics: Metric[];
}

export type FormOutcome = { index: number; ok: string } | { index: number; error: string };

export interface ScriptResponse {
  results: FormOutcome[];
}

export class ScriptParseError extends Error {
  constructor(message: string, readonly line: number, readonly column: number) {
    super(message);
    this.name = "ScriptParseError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`);
    if (!resp.ok) {
      throw new Error(`GET ${path} failed: ${resp.status}`);
    }
    return (await resp.json()) as T;
  }

  topology(): Promise<Topology> {
    return this.getJson<Topology>("/api/topology");
  }

  metrics(): Promise<MetricsBody> {
    return this.getJson<MetricsBody>("/api/metrics");
  }

  symbols(): Promise<string[]> {
    return this.getJson<string[]>("/api/symbols");
  }

  async submitScript(source: string): Promise<ScriptResponse> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/script`, {
      method: "POST",
      headers: { "Content-Type": "text/plain" },
      body: source,
    });
    if (resp.status === 400) {
      const body = (await resp.json()) as { error: string; line: number; column: number };
      throw new ScriptParseError(body.error, body.line, body.column);
    }
    if (!resp.ok) {
      throw new Error(`POST /api/script failed: ${resp.status}`);
    }
    return (await resp.json()) as ScriptResponse;
  }
}
