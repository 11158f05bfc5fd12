/** Mark creation and editing: the feedback loop of expert triage.
 *
 * Saving a mark refreshes the associations view; results assessed
 * automatically by the new mark come back highlighted so the expert sees
 * what their classification just resolved.
 */

import { AssessmentRecord, BridgeClient, MarkRecord } from "./api.js";

export const VERDICT_CLASSES = [
  "fault",
  "false_alarm:environment",
  "false_alarm:requirement_spec",
  "false_alarm:verifier",
  "false_alarm:other",
];

export interface MarkEditorCallbacks {
  onSaved?: (mark: MarkRecord, assessed: AssessmentRecord[]) => void;
}

export function renderMarkEditor(
  container: HTMLElement,
  client: BridgeClient,
  taskId: string,
  callbacks: MarkEditorCallbacks = {},
): void {
  container.textContent = "";
  const form = document.createElement("form");
  form.className = "mark-editor";

  const classSelect = document.createElement("select");
  classSelect.name = "verdict_class";
  for (const value of VERDICT_CLASSES) {
    const option = document.createElement("option");
    option.value = value;
    option.textContent = value;
    classSelect.append(option);
  }

  const description = document.createElement("textarea");
  description.name = "description";
  description.placeholder = "what this result means and why";

  const tags = document.createElement("input");
  tags.name = "tags";
  tags.placeholder = "comma,separated,tags";

  const save = document.createElement("button");
  save.type = "submit";
  save.textContent = "Create mark";

  const problem = document.createElement("div");
  problem.className = "field-error";

  const associations = document.createElement("div");
  associations.className = "associations";

  form.append(classSelect, description, tags, problem, save);
  container.append(form, associations);

  form.addEventListener("submit", (submitEvent) => {
    submitEvent.preventDefault();
    void submit();
  });

  async function submit(): Promise<void> {
    problem.textContent = "";
    if (!description.value.trim()) {
      problem.textContent = "a description is required";
      return;
    }
    let mark: MarkRecord;
    try {
      mark = await client.createMark({
        task_id: taskId,
        verdict_class: classSelect.value,
        description: description.value.trim(),
        tags: tags.value
          .split(",")
          .map((t) => t.trim())
          .filter(Boolean),
      });
    } catch (error) {
      problem.textContent = error instanceof Error ? error.message : String(error);
      return;
    }
    const assessed = await client.associations(mark.id);
    renderAssociations(associations, mark, assessed, taskId);
    callbacks.onSaved?.(mark, assessed);
  }
}

export function renderAssociations(
  container: HTMLElement,
  mark: MarkRecord,
  assessments: AssessmentRecord[],
  originTask: string,
): void {
  container.textContent = "";
  const heading = document.createElement("h3");
  heading.textContent = `Mark ${mark.id}: ${assessments.length} associated result${
    assessments.length === 1 ? "" : "s"
  }`;
  const list = document.createElement("ul");
  for (const assessment of assessments) {
    const item = document.createElement("li");
    item.className = `association mode-${assessment.mode}`;
    // results the new mark just auto-assessed light up for the expert
    if (assessment.mode === "automatic" && assessment.task !== originTask) {
      item.classList.add("fresh");
    }
    item.textContent = `${assessment.task} (${assessment.mode})`;
    list.append(item);
  }
  container.append(heading, list);
}

export function renderMarkHistory(container: HTMLElement, mark: MarkRecord): void {
  container.textContent = "";
  const heading = document.createElement("h3");
  heading.textContent = `History of ${mark.id}`;
  const list = document.createElement("ol");
  list.className = "mark-history";
  for (const revision of mark.history) {
    const item = document.createElement("li");
    item.textContent = `${revision.verdict_class}: ${revision.description}`;
    list.append(item);
  }
  const current = document.createElement("li");
  current.className = "current";
  current.textContent = `${mark.verdict_class}: ${mark.description} (current)`;
  list.append(current);
  container.append(heading, list);
}
