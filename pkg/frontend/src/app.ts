/** Single-page wiring: a hash router over the dashboard, the per-job view,
 * the trace viewer with its mark editor, and job comparison. */

import { BridgeClient } from "./api.js";
import { renderCoverage } from "./coverage.js";
import { DashboardHandle, renderDashboard, renderDiff } from "./dashboard.js";
import { renderMarkEditor } from "./marks.js";
import { decodeTraceState, encodeTraceState } from "./state.js";
import { renderSourcePane, renderTraceView } from "./trace.js";

export function startApp(root: HTMLElement, client = new BridgeClient()): () => void {
  let dashboard: DashboardHandle | null = null;

  async function route(): Promise<void> {
    dashboard?.stop();
    dashboard = null;
    root.textContent = "";
    const [path, query] = (location.hash.slice(1) || "/jobs").split("?");
    const parts = path.split("/").filter(Boolean);

    if (parts[0] === "jobs" && parts.length === 1) {
      dashboard = renderDashboard(root, client);
      return;
    }
    if (parts[0] === "jobs" && parts.length === 2) {
      await renderJobPage(root, client, parts[1]);
      return;
    }
    if (parts[0] === "jobs" && parts[2] === "diff" && parts.length === 4) {
      const diff = await client.diff(parts[1], parts[3]);
      renderDiff(root, diff);
      return;
    }
    if (parts[0] === "tasks" && parts[parts.length - 1] === "trace") {
      const taskId = decodeURIComponent(parts.slice(1, -1).join("/"));
      await renderTracePage(root, client, taskId, query ?? "");
      return;
    }
    const missing = document.createElement("div");
    missing.className = "error-banner";
    missing.textContent = `No such view: ${path}`;
    root.append(missing);
  }

  async function renderJobPage(
    container: HTMLElement,
    api: BridgeClient,
    jobId: string,
  ): Promise<void> {
    const heading = document.createElement("h2");
    const job = await api.getJob(jobId);
    heading.textContent = `${job.name} (${job.state})`;
    container.append(heading);

    const results = await api.results(jobId);
    const list = document.createElement("ul");
    list.className = "results";
    for (const entry of results.results) {
      const item = document.createElement("li");
      item.className = `result verdict-${entry.verdict.toLowerCase()}`;
      const label = document.createElement("span");
      label.textContent = `${entry.task}: ${entry.verdict}`;
      item.append(label);
      if (entry.has_trace) {
        const link = document.createElement("a");
        link.href = `#/tasks/${encodeURIComponent(entry.task)}/trace`;
        link.textContent = " view trace";
        item.append(link);
      }
      list.append(item);
    }
    container.append(list);

    const coveragePane = document.createElement("div");
    container.append(coveragePane);
    const coverage = (await api.coverage(jobId)) as never;
    renderCoverage(coveragePane, coverage);
  }

  async function renderTracePage(
    container: HTMLElement,
    api: BridgeClient,
    taskId: string,
    query: string,
  ): Promise<void> {
    const state = decodeTraceState(query);
    const layout = document.createElement("div");
    layout.className = "trace-layout";
    const tracePane = document.createElement("div");
    tracePane.className = "trace-pane";
    const sourcePane = document.createElement("div");
    sourcePane.className = "source-pane-host";
    const markPane = document.createElement("div");
    markPane.className = "mark-pane";
    layout.append(tracePane, sourcePane, markPane);
    container.append(layout);

    const jobId = taskId.split(":", 1)[0];
    await renderTraceView(tracePane, api, taskId, state, {
      onSelect: (event) => {
        void renderSourcePane(sourcePane, api, jobId, `build/${event.file}`, event.line);
      },
      onStateChange: (next) => {
        const encoded = encodeTraceState(next);
        history.replaceState(null, "", `#/tasks/${encodeURIComponent(taskId)}/trace?${encoded}`);
      },
    });
    renderMarkEditor(markPane, api, taskId);
  }

  const onHashChange = () => void route();
  window.addEventListener("hashchange", onHashChange);
  void route();
  return () => {
    window.removeEventListener("hashchange", onHashChange);
    dashboard?.stop();
  };
}
