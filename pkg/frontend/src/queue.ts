/** Question queue with dedupe and a single-submission-in-flight guard. */

import { Answer, ApiClient, Question, SubmitOutcome } from "./api.js";

export interface SessionController {
  /** Pull new questions from the server into the local queue. */
  refill(): Promise<number>;
  /** The question the worker should see now, if any. */
  current(): Question | null;
  /** Submit an answer for the current question and advance past it. */
  answer(answer: Answer): Promise<SubmitOutcome>;
  /** True while a submission is in flight. */
  busy(): boolean;
  answeredCount(): number;
}

export function createSession(api: ApiClient,
                              workerId: string): SessionController {
  const queue: Question[] = [];
  const seen = new Set<string>();
  const answered = new Set<string>();
  let inFlight = false;

  return {
    async refill(): Promise<number> {
      const fresh = await api.questions(workerId);
      let added = 0;
      for (const q of fresh) {
        if (seen.has(q.question_id)) continue;
        seen.add(q.question_id);
        queue.push(q);
        added++;
      }
      return added;
    },

    current(): Question | null {
      return queue.length > 0 ? queue[0]! : null;
    },

    async answer(answer: Answer): Promise<SubmitOutcome> {
      const q = queue[0];
      if (q === undefined) throw new Error("no question to answer");
      if (inFlight) throw new Error("submission already in flight");
      inFlight = true;
      try {
        // Any terminal outcome — stored, duplicate, closed — means the
        // server needs nothing more from us for this card; a thrown
        // SubmitFailed keeps it at the head of the queue for a retry.
        const outcome = await api.submitLabel(workerId, q.question_id,
                                              answer);
        queue.shift();
        answered.add(q.question_id);
        return outcome;
      } finally {
        inFlight = false;
      }
    },

    busy(): boolean {
      return inFlight;
    },

    answeredCount(): number {
      return answered.size;
    },
  };
}
