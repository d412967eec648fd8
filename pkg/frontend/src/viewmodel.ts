// Console state and its transitions. Everything here is synchronous and
// framework-free so it can be tested headlessly; a full reload rebuilds an
// identical view from the GET endpoints alone.

import type { FormOutcome, Metric, MetricsBody, ScriptResponse, Topology } from "./api.js";
import { ScriptParseError } from "./api.js";

export interface LogEntry {
  index: number;
  ok: boolean;
  text: string;
}

export interface MetricSample {
  count: number;
  at: number; // ms epoch
}

export class ConsoleViewModel {
  connected = false;
  topology: Topology | null = null;
  metrics: MetricsBody | null = null;
  symbols: string[] = [];
  scriptBuffer = "";
  submissionLog: LogEntry[] = [];
  parseError: ScriptParseError | null = null;
  submitting = false;
  metricHistory = new Map<number, MetricSample[]>();

  setConnected(up: boolean): void {
    this.connected = up;
  }

  applyTopology(topology: Topology): void {
    this.topology = topology;
  }

  applySymbols(symbols: string[]): void {
    this.symbols = symbols;
  }

  applyMetrics(body: MetricsBody, at: number = Date.now()): void {
    this.metrics = body;
    for (const metric of body.metrics) {
      const series = this.metricHistory.get(metric.id) ?? [];
      const last = series[series.length - 1];
      if (last === undefined || last.count !== metric.count) {
        series.push({ count: metric.count, at });
      }
      if (series.length > 300) {
        series.splice(0, series.length - 300);
      }
      this.metricHistory.set(metric.id, series);
    }
  }

  applySubmission(response: ScriptResponse): void {
    this.parseError = null;
    this.submissionLog = response.results.map((r: FormOutcome) =>
      "ok" in r
        ? { index: r.index, ok: true, text: r.ok }
        : { index: r.index, ok: false, text: r.error },
    );
  }

  applyParseError(error: ScriptParseError): void {
    this.parseError = error;
    this.submissionLog = [];
  }

  allFormsSucceeded(): boolean {
    return this.submissionLog.length > 0 && this.submissionLog.every((e) => e.ok);
  }

  componentByImpl(impl: string): number | null {
    if (this.topology === null) {
      return null;
    }
    for (const container of this.topology.containers) {
      for (const component of container.components) {
        if (component.impl === impl) {
          return component.id;
        }
      }
    }
    return null;
  }

  metricByKind(kind: Metric["kind"], impl?: string, operation?: string): Metric | null {
    if (this.metrics === null) {
      return null;
    }
    for (const metric of this.metrics.metrics) {
      if (metric.kind !== kind) continue;
      if (impl !== undefined && metric.impl !== impl) continue;
      if (operation !== undefined && metric.operation !== operation) continue;
      return metric;
    }
    return null;
  }
}
