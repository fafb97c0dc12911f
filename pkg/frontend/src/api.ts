/** Typed client for the engine's labeling API. */

export interface SessionInfo {
  loop: number;
  asked: number;
  resolved: number;
  remaining: number;
  budget: number | null;
}

export interface AttributeRow {
  attr1: string;
  attr2: string;
  values1: string[];
  values2: string[];
}

export interface Question {
  question_id: string;
  u1: string;
  u2: string;
  attributes: AttributeRow[];
  neighborhood: { side1: string[]; side2: string[] };
}

export type Answer = "match" | "non_match" | "unsure";

/** Metrics snapshot from GET /api/progress (subset the UI shows). */
export interface Progress {
  loops: number;
  questions_asked: number;
  n_matches: number;
  f1: number | null;
  [key: string]: number | null;
}

/**
 * Terminal outcomes of a label submission.  "stored" advances normally,
 * "duplicate" (409) and "closed" (404: batch already completed) advance
 * by skipping — the server already has everything it needs.
 */
export type SubmitOutcome = "stored" | "duplicate" | "closed";

export class SubmitFailed extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SubmitFailed";
  }
}

const sleepMs = (ms: number) =>
  new Promise<void>((resolve) => setTimeout(resolve, ms));

export interface ApiOptions {
  /** Backoff schedule for transient submit failures. */
  retryDelays?: number[];
  /** Injection point for tests; defaults to setTimeout. */
  sleep?: (ms: number) => Promise<void>;
  /** Injection point for tests; defaults to global fetch. */
  fetchFn?: typeof fetch;
}

export class ApiClient {
  private readonly base: string;
  private readonly retryDelays: number[];
  private readonly sleep: (ms: number) => Promise<void>;
  private readonly fetchFn: typeof fetch;

  constructor(base = "", options: ApiOptions = {}) {
    this.base = base.replace(/\/$/, "");
    this.retryDelays = options.retryDelays ?? [250, 500, 1000];
    this.sleep = options.sleep ?? sleepMs;
    this.fetchFn = options.fetchFn ?? fetch.bind(globalThis);
  }

  private async getJson<T>(path: string): Promise<T> {
    const resp = await this.fetchFn(`${this.base}${path}`);
    if (!resp.ok) {
      throw new Error(`GET ${path} -> ${resp.status}`);
    }
    return (await resp.json()) as T;
  }

  session(): Promise<SessionInfo> {
    return this.getJson<SessionInfo>("/api/session");
  }

  questions(workerId: string): Promise<Question[]> {
    const q = encodeURIComponent(workerId);
    return this.getJson<Question[]>(`/api/questions?worker_id=${q}`);
  }

  progress(): Promise<Progress> {
    return this.getJson<Progress>("/api/progress");
  }

  /**
   * Submit one label.  200 stores it; 409 means this (worker, question)
   * already has an answer and 404 means the question closed under us —
   * both are skips, never re-sends.  Transient trouble (network error or
   * 5xx) retries with backoff; when the schedule is exhausted the card
   * must stay blocked, so the error propagates.
   */
  async submitLabel(workerId: string, questionId: string,
                    answer: Answer): Promise<SubmitOutcome> {
    const body = JSON.stringify({
      worker_id: workerId,
      question_id: questionId,
      answer,
    });
    for (let attempt = 0; ; attempt++) {
      let status: number | null = null;
      try {
        const resp = await this.fetchFn(`${this.base}/api/labels`, {
          method: "POST",
          headers: { "Content-Type": "application/json" },
          body,
        });
        status = resp.status;
      } catch {
        status = null; // network failure
      }
      if (status === 200) return "stored";
      if (status === 409) return "duplicate";
      if (status === 404) return "closed";
      if (status !== null && status < 500) {
        throw new SubmitFailed(`label rejected with status ${status}`);
      }
      const delay = this.retryDelays[attempt];
      if (delay === undefined) {
        throw new SubmitFailed("label submission kept failing; giving up");
      }
      await this.sleep(delay);
    }
  }
}
