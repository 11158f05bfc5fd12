import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { BridgeClient } from "../src/api.js";
import { renderDashboard, renderDiff, renderStatisticsTable } from "../src/dashboard.js";
import { FakeBridge } from "./fake_bridge.js";

let bridge: FakeBridge;
let container: HTMLElement;

beforeEach(() => {
  bridge = new FakeBridge();
  bridge.install();
  container = document.createElement("div");
  document.body.append(container);
});

afterEach(() => {
  bridge.uninstall();
  container.remove();
});

describe("statistics table", () => {
  it("renders the published memory-safety row verbatim from the bridge", () => {
    // counts and percentages come from the service; nothing is recomputed here
    const table = renderStatisticsTable({
      kinds: {
        counts: { Unsafe: 280, Safe: 910, Unknown: 869 },
        total: 2059,
        percentages: { Unsafe: 14, Safe: 44, Unknown: 42 },
      },
    });
    const rows = [...table.querySelectorAll("tr[data-kind]")].map((row) =>
      [...row.children].map((cell) => cell.textContent),
    );
    expect(rows).toEqual([
      ["Unsafe", "280", "14%"],
      ["Safe", "910", "44%"],
      ["Unknown", "869", "42%"],
    ]);
  });
});

describe("dashboard", () => {
  it("shows counts increasing monotonically for a running job", async () => {
    bridge.addJob({
      id: "run1",
      name: "running fixture",
      state: "running",
      solved: 0,
      total: 4,
      progressScript: [
        { state: "running", solved: 1, total: 4, elapsed: 1, remaining_estimate: 3 },
        { state: "running", solved: 2, total: 4, elapsed: 2, remaining_estimate: 2 },
        { state: "running", solved: 4, total: 4, elapsed: 4, remaining_estimate: 0 },
      ],
    });
    const handle = renderDashboard(container, new BridgeClient(), 5);
    const seen: number[] = [];
    for (let i = 0; i < 3; i++) {
      await handle.refresh();
      const cell = container.querySelector('[data-job="run1"]')!.children[2];
      seen.push(Number(cell.textContent!.split("/")[0]));
    }
    handle.stop();
    for (let i = 1; i < seen.length; i++) {
      expect(seen[i]).toBeGreaterThanOrEqual(seen[i - 1]);
    }
    expect(seen[seen.length - 1]).toBeGreaterThan(seen[0]);
  });

  it("shows remaining 0 for a finished job", async () => {
    bridge.addJob({ id: "done1", name: "finished", state: "done", solved: 2, total: 2 });
    const handle = renderDashboard(container, new BridgeClient(), 1000);
    await handle.refresh();
    handle.stop();
    const row = container.querySelector('[data-job="done1"]')!;
    expect(row.children[4].textContent).toBe("0s");
  });

  it("lists statistics tables for finished jobs", async () => {
    bridge.addJob({
      id: "statjob",
      name: "stats",
      state: "done",
      statistics: {
        kinds: {
          counts: { Unsafe: 1, Safe: 1 },
          total: 2,
          percentages: { Unsafe: 50, Safe: 50 },
        },
      },
    });
    const handle = renderDashboard(container, new BridgeClient(), 1000);
    await handle.refresh();
    handle.stop();
    expect(container.querySelector(".verdict-statistics")).not.toBeNull();
  });
});

describe("diff view", () => {
  it("renders an empty delta for identical jobs", async () => {
    bridge.addJob({ id: "a", files: { "x.c": "int x;" } });
    const diff = await new BridgeClient().diff("a", "a");
    renderDiff(container, diff);
    expect(container.querySelectorAll(".diff-files .empty").length).toBe(1);
    expect(container.querySelectorAll(".diff-verdicts .empty").length).toBe(1);
  });

  it("renders file and verdict deltas", async () => {
    bridge.addJob({
      id: "left",
      files: { "x.c": "old" },
      results: [
        {
          seq: 0, task: "x:req", fragment: "x", requirement: "req",
          verdict: "Unsafe", reason: "", has_trace: true,
        },
      ],
    });
    bridge.addJob({
      id: "right",
      files: { "x.c": "new" },
      results: [
        {
          seq: 0, task: "x:req", fragment: "x", requirement: "req",
          verdict: "Safe", reason: "", has_trace: false,
        },
      ],
    });
    const diff = await new BridgeClient().diff("left", "right");
    renderDiff(container, diff);
    expect(container.querySelector(".file-changed")!.textContent).toContain("x.c");
    expect(container.querySelector(".verdict-changed")!.textContent).toContain(
      "Unsafe → Safe",
    );
  });
});
