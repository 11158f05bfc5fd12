/** Interactive error-trace view with relevance collapsing.
 *
 * Every event gets a DOM node whether or not it is visible, so the fully
 * expanded view always shows exactly as many event rows as the trace has
 * events. Irrelevant runs collapse behind a placeholder row by default.
 */

import { BridgeClient, TraceDoc, TraceEventDoc } from "./api.js";
import { TraceViewState, ensureVisible } from "./state.js";

export interface TraceCallbacks {
  onSelect?: (event: TraceEventDoc, index: number) => void;
  onStateChange?: (state: TraceViewState) => void;
}

interface HiddenGroup {
  id: number;
  start: number; // first event index in the group
  length: number;
}

/** Consecutive irrelevant events form one collapsible group. */
export function hiddenGroups(events: TraceEventDoc[]): HiddenGroup[] {
  const groups: HiddenGroup[] = [];
  let current: HiddenGroup | null = null;
  events.forEach((event, index) => {
    if (!event.relevant) {
      if (current === null) {
        current = { id: groups.length, start: index, length: 0 };
        groups.push(current);
      }
      current.length += 1;
    } else {
      current = null;
    }
  });
  return groups;
}

export function groupOfEvent(groups: HiddenGroup[]): Map<number, number> {
  const map = new Map<number, number>();
  for (const group of groups) {
    for (let k = group.start; k < group.start + group.length; k++) {
      map.set(k, group.id);
    }
  }
  return map;
}

function eventLabel(event: TraceEventDoc): string {
  if (event.assert_desc) return event.assert_desc;
  if (event.note) return event.note;
  return event.text || event.kind;
}

export function renderTrace(
  container: HTMLElement,
  trace: TraceDoc,
  state: TraceViewState,
  callbacks: TraceCallbacks = {},
): void {
  container.textContent = "";
  const groups = hiddenGroups(trace.events);
  const membership = groupOfEvent(groups);
  const list = document.createElement("ol");
  list.className = "trace";

  const toggle = document.createElement("label");
  toggle.className = "trace-filter";
  const box = document.createElement("input");
  box.type = "checkbox";
  box.checked = state.showIrrelevant;
  box.addEventListener("change", () => {
    state.showIrrelevant = box.checked;
    renderTrace(container, trace, state, callbacks);
    callbacks.onStateChange?.(state);
  });
  toggle.append(box, document.createTextNode(" show irrelevant events"));
  container.append(toggle);

  const placeholderDone = new Set<number>();
  trace.events.forEach((event, index) => {
    const group = membership.get(index);
    const hidden =
      group !== undefined && !state.showIrrelevant && !state.expanded.has(group);
    if (hidden && !placeholderDone.has(group!)) {
      placeholderDone.add(group!);
      const placeholder = document.createElement("li");
      placeholder.className = "trace-hidden-group";
      const groupLength = groups[group!].length;
      placeholder.textContent = `… ${groupLength} environment event${
        groupLength === 1 ? "" : "s"
      } hidden`;
      placeholder.addEventListener("click", () => {
        state.expanded.add(group!);
        renderTrace(container, trace, state, callbacks);
        callbacks.onStateChange?.(state);
      });
      list.append(placeholder);
    }

    const item = document.createElement("li");
    item.className = `trace-event kind-${event.kind}`;
    item.dataset.index = String(index);
    if (!event.relevant) item.classList.add("irrelevant");
    if (hidden) item.classList.add("hidden");
    if (state.selected === index) item.classList.add("selected");

    const where = document.createElement("span");
    where.className = "trace-location";
    where.textContent = `${event.file}:${event.line}`;
    const what = document.createElement("span");
    what.className = "trace-text";
    what.textContent = eventLabel(event);
    if (event.assert_desc) what.classList.add("assert");
    else if (event.note) what.classList.add("note");
    item.append(where, document.createTextNode(" "), what);

    item.addEventListener("click", () => {
      ensureVisible(state, index, membership);
      state.sourcePosition = { file: event.file, line: event.line };
      renderTrace(container, trace, state, callbacks);
      callbacks.onSelect?.(event, index);
      callbacks.onStateChange?.(state);
    });
    list.append(item);
  });
  container.append(list);
}

/** Fetch a trace and render it; failures become an inline banner. */
export async function renderTraceView(
  container: HTMLElement,
  client: BridgeClient,
  taskId: string,
  state: TraceViewState,
  callbacks: TraceCallbacks = {},
): Promise<void> {
  try {
    const trace = await client.trace(taskId);
    renderTrace(container, trace, state, callbacks);
  } catch (error) {
    container.textContent = "";
    const banner = document.createElement("div");
    banner.className = "error-banner";
    banner.textContent = `Cannot load the trace for ${taskId}: ${
      error instanceof Error ? error.message : String(error)
    }`;
    container.append(banner);
  }
}

/** Source pane: original file text with one line highlighted. */
export async function renderSourcePane(
  container: HTMLElement,
  client: BridgeClient,
  jobId: string,
  file: string,
  line: number,
): Promise<void> {
  container.textContent = "";
  let text: string;
  try {
    text = await client.jobFile(jobId, file);
  } catch {
    const banner = document.createElement("div");
    banner.className = "error-banner";
    banner.textContent = `No source available for ${file}`;
    container.append(banner);
    return;
  }
  const pre = document.createElement("pre");
  pre.className = "source-pane";
  text.split("\n").forEach((content, index) => {
    const row = document.createElement("div");
    row.className = "source-line";
    row.dataset.line = String(index + 1);
    if (index + 1 === line) row.classList.add("highlight");
    row.textContent = `${String(index + 1).padStart(4)} ${content}`;
    pre.append(row);
  });
  container.append(pre);
  const target = pre.querySelector<HTMLElement>(".highlight");
  target?.scrollIntoView?.({ block: "center" });
}
