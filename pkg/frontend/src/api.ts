/** Typed client for the bridge HTTP API. Every number shown in the UI comes
 * from one of these endpoints; the client never recomputes statistics. */

export interface TraceEventDoc {
  file: string;
  line: number;
  kind: "call" | "return" | "statement" | "assumption" | "error";
  text: string;
  function: string;
  relevant: boolean;
  note: string | null;
  assert_desc: string | null;
}

export interface TraceDoc {
  events: TraceEventDoc[];
}

export interface JobRecord {
  id: string;
  name: string;
  state: "pending" | "running" | "done" | "cancelled" | "failed";
  created_at: number;
  solved: number;
  total: number;
  author?: string;
  access?: string;
  error?: string;
}

export interface Progress {
  state: string;
  solved: number;
  total: number;
  elapsed: number;
  remaining_estimate: number | null;
}

export interface ResultEntry {
  seq: number;
  task: string;
  fragment: string;
  requirement: string;
  verdict: "Safe" | "Unsafe" | "Unknown";
  reason: string;
  has_trace: boolean;
}

export interface ResultsPage {
  results: ResultEntry[];
  next: number;
  state: string;
}

export interface StatisticsSection {
  counts: Record<string, number>;
  total: number;
  percentages: Record<string, number>;
}

export interface Statistics {
  kinds?: StatisticsSection;
  unknown_reasons?: StatisticsSection;
  false_alarms?: StatisticsSection;
}

export interface MarkRecord {
  id: string;
  verdict_class: string;
  description: string;
  tags: string[];
  signature: unknown;
  history: { verdict_class: string; description: string; tags: string[] }[];
}

export interface AssessmentRecord {
  task: string;
  mark: string;
  mode: "manual" | "automatic";
}

export interface DiffReport {
  files: { added: string[]; removed: string[]; changed: string[] };
  verdicts: {
    changed: Record<string, [string, string]>;
    only_left: string[];
    only_right: string[];
  };
}

export class BridgeError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, init);
  if (!response.ok) {
    let message = response.statusText;
    try {
      const body = (await response.json()) as { message?: string };
      if (body.message) message = body.message;
    } catch {
      /* non-JSON error body */
    }
    throw new BridgeError(response.status, message);
  }
  return (await response.json()) as T;
}

export class BridgeClient {
  constructor(private base: string = "") {}

  private url(path: string): string {
    return this.base + path;
  }

  listJobs(): Promise<JobRecord[]> {
    return request(this.url("/jobs"));
  }

  getJob(id: string): Promise<JobRecord & { files: Record<string, string> }> {
    return request(this.url(`/jobs/${id}`));
  }

  createJob(body: Record<string, unknown>): Promise<JobRecord> {
    return request(this.url("/jobs"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  startJob(id: string): Promise<JobRecord> {
    return request(this.url(`/jobs/${id}/start`), { method: "POST" });
  }

  cancelJob(id: string): Promise<JobRecord> {
    return request(this.url(`/jobs/${id}/cancel`), { method: "POST" });
  }

  progress(id: string): Promise<Progress> {
    return request(this.url(`/jobs/${id}/progress`));
  }

  results(id: string, since = 0, wait = 0): Promise<ResultsPage> {
    return request(this.url(`/jobs/${id}/results?since=${since}&wait=${wait}`));
  }

  statistics(id: string): Promise<Statistics> {
    return request(this.url(`/jobs/${id}/statistics`));
  }

  trace(taskId: string): Promise<TraceDoc> {
    return request(this.url(`/tasks/${encodeURIComponent(taskId)}/trace`));
  }

  coverage(id: string): Promise<Record<string, unknown>> {
    return request(this.url(`/jobs/${id}/coverage`));
  }

  diff(a: string, b: string): Promise<DiffReport> {
    return request(this.url(`/jobs/${a}/diff/${b}`));
  }

  async jobFile(id: string, path: string): Promise<string> {
    const response = await fetch(this.url(`/jobs/${id}/files/${path}`));
    if (!response.ok) throw new BridgeError(response.status, response.statusText);
    return response.text();
  }

  createMark(body: Record<string, unknown>): Promise<MarkRecord> {
    return request(this.url("/marks"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  listMarks(): Promise<MarkRecord[]> {
    return request(this.url("/marks"));
  }

  editMark(id: string, body: Record<string, unknown>): Promise<MarkRecord> {
    return request(this.url(`/marks/${id}`), {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  associations(markId: string): Promise<AssessmentRecord[]> {
    return request(this.url(`/marks/${markId}/associations`));
  }
}
