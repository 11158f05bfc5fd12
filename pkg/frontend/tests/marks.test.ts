import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { BridgeClient, MarkRecord } from "../src/api.js";
import { renderMarkEditor, renderMarkHistory } from "../src/marks.js";
import { FakeBridge, refcountTrace } from "./fake_bridge.js";

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

function fill(selector: string, value: string): void {
  const field = container.querySelector<HTMLTextAreaElement>(selector)!;
  field.value = value;
}

async function submitForm(): Promise<void> {
  container
    .querySelector("form")!
    .dispatchEvent(new Event("submit", { cancelable: true }));
  await new Promise((resolve) => setTimeout(resolve, 0));
}

describe("mark editor", () => {
  it("auto-assesses the line-shifted twin and highlights it", async () => {
    bridge.addTrace("bad_leak:kernel:module", refcountTrace());
    bridge.addTrace("twin_leak:kernel:module", refcountTrace(17));

    let saved: MarkRecord | null = null;
    renderMarkEditor(container, new BridgeClient(), "bad_leak:kernel:module", {
      onSaved: (mark) => {
        saved = mark;
      },
    });
    fill("textarea", "unbalanced put in the transfer path");
    await submitForm();

    expect(saved).not.toBeNull();
    const rows = [...container.querySelectorAll(".association")];
    const tasks = rows.map((r) => r.textContent);
    expect(tasks.some((t) => t!.includes("bad_leak:kernel:module"))).toBe(true);
    expect(tasks.some((t) => t!.includes("twin_leak:kernel:module"))).toBe(true);
    const fresh = container.querySelectorAll(".association.fresh");
    expect(fresh.length).toBe(1);
    expect(fresh[0].textContent).toContain("twin_leak:kernel:module");
  });

  it("blocks saving with an empty description", async () => {
    bridge.addTrace("bad_leak:kernel:module", refcountTrace());
    renderMarkEditor(container, new BridgeClient(), "bad_leak:kernel:module");
    await submitForm();
    expect(container.querySelector(".field-error")!.textContent).toContain(
      "description",
    );
    expect(bridge.marks.size).toBe(0);
  });

  it("surfaces server-side validation per field", async () => {
    renderMarkEditor(container, new BridgeClient(), "missing:task");
    fill("textarea", "there is no trace behind this task");
    await submitForm();
    expect(container.querySelector(".field-error")!.textContent).toContain(
      "missing:task",
    );
  });
});

describe("mark history", () => {
  it("shows past revisions and the current one", async () => {
    bridge.addTrace("bad_leak:kernel:module", refcountTrace());
    const client = new BridgeClient();
    const mark = await client.createMark({
      task_id: "bad_leak:kernel:module",
      verdict_class: "fault",
      description: "first take",
    });
    const edited = await client.editMark(mark.id, { description: "second take" });

    renderMarkHistory(container, edited);
    const entries = [...container.querySelectorAll(".mark-history li")];
    expect(entries.length).toBe(2);
    expect(entries[0].textContent).toContain("first take");
    expect(entries[1].textContent).toContain("second take");
    expect(entries[1].classList.contains("current")).toBe(true);
  });
});
