/** Job dashboard: live progress, verdict statistics and job comparison.
 *
 * Numbers are rendered exactly as the bridge reports them; the dashboard
 * never recomputes counts or percentages on the client.
 */

import {
  BridgeClient,
  DiffReport,
  JobRecord,
  Progress,
  Statistics,
  StatisticsSection,
} from "./api.js";

function formatSeconds(seconds: number | null): string {
  if (seconds === null) return "unknown";
  if (seconds < 60) return `${seconds.toFixed(0)}s`;
  return `${Math.floor(seconds / 60)}m${Math.floor(seconds % 60)}s`;
}

export function renderJobRow(job: JobRecord, progress: Progress | null): HTMLElement {
  const row = document.createElement("tr");
  row.className = `job-row state-${job.state}`;
  row.dataset.job = job.id;
  const cells = [
    job.name,
    job.state,
    progress ? `${progress.solved}/${progress.total}` : `${job.solved}/${job.total}`,
    progress ? formatSeconds(progress.elapsed) : "",
    progress ? formatSeconds(progress.remaining_estimate) : "",
  ];
  for (const text of cells) {
    const cell = document.createElement("td");
    cell.textContent = String(text);
    row.append(cell);
  }
  return row;
}

const KIND_ORDER = ["Unsafe", "Safe", "Unknown"];

/** Statistics table in the published layout: verdict, count, percent. */
export function renderStatisticsTable(stats: Statistics): HTMLElement {
  const table = document.createElement("table");
  table.className = "verdict-statistics";
  const head = document.createElement("tr");
  for (const title of ["Verdict", "Count", "Share"]) {
    const cell = document.createElement("th");
    cell.textContent = title;
    head.append(cell);
  }
  table.append(head);
  const section: StatisticsSection | undefined = stats.kinds;
  if (!section) return table;
  const kinds = [
    ...KIND_ORDER.filter((k) => k in section.counts),
    ...Object.keys(section.counts).filter((k) => !KIND_ORDER.includes(k)).sort(),
  ];
  for (const kind of kinds) {
    const row = document.createElement("tr");
    row.dataset.kind = kind;
    const name = document.createElement("td");
    name.textContent = kind;
    const count = document.createElement("td");
    count.textContent = String(section.counts[kind]);
    const percent = document.createElement("td");
    percent.textContent = `${section.percentages[kind]}%`;
    row.append(name, count, percent);
    table.append(row);
  }
  return table;
}

export interface DashboardHandle {
  stop(): void;
  refresh(): Promise<void>;
}

export function renderDashboard(
  container: HTMLElement,
  client: BridgeClient,
  pollMs = 1000,
): DashboardHandle {
  container.textContent = "";
  const table = document.createElement("table");
  table.className = "jobs";
  const head = document.createElement("tr");
  for (const title of ["Job", "State", "Solved", "Elapsed", "Remaining"]) {
    const cell = document.createElement("th");
    cell.textContent = title;
    head.append(cell);
  }
  table.append(head);
  container.append(table);
  const statsPane = document.createElement("div");
  statsPane.className = "stats-pane";
  container.append(statsPane);

  let timer: ReturnType<typeof setTimeout> | null = null;
  let stopped = false;

  async function refresh(): Promise<void> {
    const jobs = await client.listJobs();
    const rows: HTMLElement[] = [];
    for (const job of jobs) {
      let progress: Progress | null = null;
      try {
        progress = await client.progress(job.id);
      } catch {
        /* job may have vanished between calls */
      }
      rows.push(renderJobRow(job, progress));
    }
    table.querySelectorAll("tr.job-row").forEach((row) => row.remove());
    for (const row of rows) table.append(row);

    statsPane.textContent = "";
    for (const job of jobs) {
      if (job.state !== "done") continue;
      const stats = await client.statistics(job.id);
      if (!stats.kinds) continue;
      const caption = document.createElement("h3");
      caption.textContent = `Verdicts of ${job.name}`;
      statsPane.append(caption, renderStatisticsTable(stats));
    }
  }

  async function loop(): Promise<void> {
    if (stopped) return;
    await refresh();
    timer = setTimeout(() => void loop(), pollMs);
  }
  void loop();

  return {
    stop() {
      stopped = true;
      if (timer !== null) clearTimeout(timer);
    },
    refresh,
  };
}

export function renderDiff(container: HTMLElement, diff: DiffReport): void {
  container.textContent = "";
  const files = document.createElement("section");
  files.className = "diff-files";
  const fileHeading = document.createElement("h3");
  fileHeading.textContent = "File changes";
  files.append(fileHeading);
  const fileList = document.createElement("ul");
  const entries: [string, string[]][] = [
    ["added", diff.files.added],
    ["removed", diff.files.removed],
    ["changed", diff.files.changed],
  ];
  for (const [label, names] of entries) {
    for (const name of names) {
      const item = document.createElement("li");
      item.className = `file-${label}`;
      item.textContent = `${label}: ${name}`;
      fileList.append(item);
    }
  }
  if (!fileList.children.length) {
    const item = document.createElement("li");
    item.className = "empty";
    item.textContent = "identical file sets";
    fileList.append(item);
  }
  files.append(fileList);

  const verdicts = document.createElement("section");
  verdicts.className = "diff-verdicts";
  const verdictHeading = document.createElement("h3");
  verdictHeading.textContent = "Verdict changes";
  verdicts.append(verdictHeading);
  const verdictList = document.createElement("ul");
  const changed = Object.entries(diff.verdicts.changed);
  for (const [task, [before, after]] of changed) {
    const item = document.createElement("li");
    item.className = "verdict-changed";
    item.textContent = `${task}: ${before} → ${after}`;
    verdictList.append(item);
  }
  if (!changed.length) {
    const item = document.createElement("li");
    item.className = "empty";
    item.textContent = "no verdict changes";
    verdictList.append(item);
  }
  verdicts.append(verdictList);
  container.append(files, verdicts);
}
