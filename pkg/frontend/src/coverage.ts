/** Coverage browser: per-file and per-directory statistics with line
 * highlighting over the original sources. */

import { BridgeClient } from "./api.js";

interface CoverageEntry {
  lines_total: number;
  lines_covered: number;
  functions_total: number;
  functions_covered: number;
  covered_lines?: number[];
  line_percent?: number;
}

interface RequirementCoverage {
  files: Record<string, CoverageEntry>;
  directories: Record<string, CoverageEntry>;
}

export function renderCoverage(
  container: HTMLElement,
  coverage: Record<string, RequirementCoverage>,
  onOpenFile?: (file: string, covered: number[]) => void,
): void {
  container.textContent = "";
  for (const [requirement, report] of Object.entries(coverage)) {
    const section = document.createElement("section");
    section.className = "coverage-requirement";
    const heading = document.createElement("h3");
    heading.textContent = requirement;
    section.append(heading);

    const table = document.createElement("table");
    table.className = "coverage";
    const head = document.createElement("tr");
    for (const title of ["Path", "Lines", "Functions"]) {
      const cell = document.createElement("th");
      cell.textContent = title;
      head.append(cell);
    }
    table.append(head);

    const directories = Object.entries(report.directories ?? {}).sort();
    for (const [path, entry] of directories) {
      table.append(coverageRow(`${path}/`, entry, "directory"));
    }
    for (const [path, entry] of Object.entries(report.files ?? {}).sort()) {
      const row = coverageRow(path, entry, "file");
      if (onOpenFile) {
        row.classList.add("openable");
        row.addEventListener("click", () =>
          onOpenFile(path, entry.covered_lines ?? []),
        );
      }
      table.append(row);
    }
    section.append(table);
    container.append(section);
  }
}

function coverageRow(path: string, entry: CoverageEntry, kind: string): HTMLElement {
  const row = document.createElement("tr");
  row.className = `coverage-row ${kind}`;
  row.dataset.path = path;
  const name = document.createElement("td");
  name.textContent = path;
  const lines = document.createElement("td");
  const percent =
    entry.line_percent ??
    (entry.lines_total ? Math.floor((100 * entry.lines_covered) / entry.lines_total) : 0);
  lines.textContent = `${entry.lines_covered}/${entry.lines_total} (${percent}%)`;
  const functions = document.createElement("td");
  functions.textContent = `${entry.functions_covered}/${entry.functions_total}`;
  row.append(name, lines, functions);
  return row;
}

export async function renderCoveredSource(
  container: HTMLElement,
  client: BridgeClient,
  jobId: string,
  file: string,
  covered: number[],
): Promise<void> {
  container.textContent = "";
  let text: string;
  try {
    text = await client.jobFile(jobId, `build/${file}`);
  } catch {
    try {
      text = await client.jobFile(jobId, `specs/${file}`);
    } catch {
      const banner = document.createElement("div");
      banner.className = "error-banner";
      banner.textContent = `No source for ${file}`;
      container.append(banner);
      return;
    }
  }
  const coveredSet = new Set(covered);
  const pre = document.createElement("pre");
  pre.className = "covered-source";
  text.split("\n").forEach((content, index) => {
    const row = document.createElement("div");
    row.className = coveredSet.has(index + 1) ? "line covered" : "line";
    row.textContent = content;
    pre.append(row);
  });
  container.append(pre);
}
