/** Trace-viewer state, kept in the URL hash so positions are shareable. */

export interface TraceViewState {
  showIrrelevant: boolean;
  expanded: Set<number>; // indices of expanded hidden groups
  selected: number | null; // selected event index
  sourcePosition: { file: string; line: number } | null;
}

export function initialTraceState(): TraceViewState {
  return {
    showIrrelevant: false,
    expanded: new Set(),
    selected: null,
    sourcePosition: null,
  };
}

export function encodeTraceState(state: TraceViewState): string {
  const params = new URLSearchParams();
  if (state.showIrrelevant) params.set("all", "1");
  if (state.selected !== null) params.set("ev", String(state.selected));
  if (state.expanded.size) params.set("x", [...state.expanded].join("."));
  return params.toString();
}

export function decodeTraceState(query: string): TraceViewState {
  const params = new URLSearchParams(query);
  const state = initialTraceState();
  state.showIrrelevant = params.get("all") === "1";
  const selected = params.get("ev");
  if (selected !== null && selected !== "") state.selected = Number(selected);
  const expanded = params.get("x");
  if (expanded) {
    for (const part of expanded.split(".")) state.expanded.add(Number(part));
  }
  return state;
}

/** Selecting an event must leave it visible: expand its hidden group. */
export function ensureVisible(
  state: TraceViewState,
  eventIndex: number,
  groupOf: Map<number, number>,
): void {
  state.selected = eventIndex;
  const group = groupOf.get(eventIndex);
  if (group !== undefined) state.expanded.add(group);
}
