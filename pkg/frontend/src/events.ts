// Gateway event feed: server-sent events when available, interval polling
// otherwise (and automatically while the stream is down).

export type NodeEventKind = "topology-changed" | "metrics-updated";

export interface EventSourceLike {
  addEventListener(type: string, listener: (ev: unknown) => void): void;
  close(): void;
}

export type EventSourceFactory = (url: string) => EventSourceLike;

export interface NodeEventHandlers {
  onEvent(kind: NodeEventKind): void;
  onStreamState(up: boolean): void;
}

export class NodeEventFeed {
  private source: EventSourceLike | null = null;
  private pollTimer: ReturnType<typeof setInterval> | null = null;
  private stopped = false;

  constructor(
    private readonly baseUrl: string,
    private readonly handlers: NodeEventHandlers,
    private readonly options: {
      eventSourceFactory?: EventSourceFactory;
      pollIntervalMs?: number;
    } = {},
  ) {}

  start(): void {
    this.stopped = false;
    const factory =
      this.options.eventSourceFactory ??
      (typeof EventSource !== "undefined" ? (url: string) => new EventSource(url) : null);
    if (factory === null) {
      this.startPolling();
      return;
    }
    const source = factory(`${this.baseUrl}/api/events`);
    this.source = source;
    source.addEventListener("topology-changed", () => this.handlers.onEvent("topology-changed"));
    source.addEventListener("metrics-updated", () => this.handlers.onEvent("metrics-updated"));
    source.addEventListener("open", () => {
      this.handlers.onStreamState(true);
      this.stopPolling();
    });
    // While the stream is down the browser retries on its own; poll so the
    // view keeps moving and the banner state stays honest.
    source.addEventListener("error", () => {
      this.handlers.onStreamState(false);
      this.startPolling();
    });
  }

  stop(): void {
    this.stopped = true;
    if (this.source !== null) {
      this.source.close();
      this.source = null;
    }
    this.stopPolling();
  }

  private startPolling(): void {
    if (this.pollTimer !== null || this.stopped) {
      return;
    }
    const interval = this.options.pollIntervalMs ?? 2000;
    this.pollTimer = setInterval(() => {
      this.handlers.onEvent("topology-changed");
      this.handlers.onEvent("metrics-updated");
    }, interval);
  }

  private stopPolling(): void {
    if (this.pollTimer !== null) {
      clearInterval(this.pollTimer);
      this.pollTimer = null;
    }
  }
}
