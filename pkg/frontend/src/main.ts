// Page wiring: fetch state into the view model, render, react to events.

import { ApiClient, ScriptParseError } from "./api.js";
import { NodeEventFeed } from "./events.js";
import { layoutTopology } from "./layout.js";
import {
  renderBanner,
  renderMetricsPanel,
  renderSubmissionLog,
  renderSymbols,
  renderTopologySvg,
} from "./render.js";
import { ConsoleViewModel } from "./viewmodel.js";

const baseUrl = window.location.origin;
const api = new ApiClient(baseUrl);
const vm = new ConsoleViewModel();

const el = (id: string): HTMLElement => {
  const node = document.getElementById(id);
  if (node === null) {
    throw new Error(`missing element #${id}`);
  }
  return node;
};

const banner = el("banner");
const topologyPanel = el("topology");
const metricsPanel = el("metrics");
const symbolsPanel = el("symbols");
const logPanel = el("submission-log");
const editor = el("editor") as HTMLTextAreaElement;
const submitButton = el("submit") as HTMLButtonElement;

function paintBanner(): void {
  banner.innerHTML = renderBanner(vm.connected, baseUrl);
  banner.className = vm.connected ? "banner up" : "banner down";
}

function paintTopology(): void {
  topologyPanel.innerHTML =
    vm.topology === null || vm.topology.containers.length === 0
      ? `<p class="empty">nothing deployed</p>`
      : renderTopologySvg(layoutTopology(vm.topology));
}

function paintMetrics(): void {
  metricsPanel.innerHTML = renderMetricsPanel(vm.metrics, vm.metricHistory);
  symbolsPanel.innerHTML = renderSymbols(vm.symbols);
}

function paintLog(): void {
  logPanel.innerHTML = renderSubmissionLog(vm.submissionLog, vm.parseError);
  submitButton.disabled = vm.submitting;
}

async function refreshTopology(): Promise<void> {
  try {
    vm.applyTopology(await api.topology());
    vm.setConnected(true);
  } catch {
    vm.setConnected(false);
  }
  paintBanner();
  paintTopology();
}

async function refreshMetrics(): Promise<void> {
  try {
    vm.applyMetrics(await api.metrics());
    vm.applySymbols(await api.symbols());
    vm.setConnected(true);
  } catch {
    vm.setConnected(false);
  }
  paintBanner();
  paintMetrics();
}

async function submitScript(): Promise<void> {
  if (vm.submitting) {
    return;
  }
  vm.scriptBuffer = editor.value;
  vm.submitting = true;
  paintLog();
  try {
    const response = await api.submitScript(vm.scriptBuffer);
    vm.applySubmission(response);
    vm.setConnected(true);
    await refreshTopology();
    await refreshMetrics();
  } catch (err) {
    if (err instanceof ScriptParseError) {
      vm.applyParseError(err);
    } else {
      vm.setConnected(false); // network failure: keep the buffer, show the banner
    }
  } finally {
    vm.submitting = false;
    paintBanner();
    paintLog();
  }
}

submitButton.addEventListener("click", () => {
  void submitScript();
});
editor.addEventListener("keydown", (ev) => {
  if ((ev.ctrlKey || ev.metaKey) && ev.key === "Enter") {
    void submitScript();
  }
});

const feed = new NodeEventFeed(baseUrl, {
  onEvent: (kind) => {
    if (kind === "topology-changed") {
      void refreshTopology();
    } else {
      void refreshMetrics();
    }
  },
  onStreamState: (up) => {
    if (!up) {
      vm.setConnected(false);
      paintBanner();
    }
  },
});

feed.start();
void refreshTopology();
void refreshMetrics();
