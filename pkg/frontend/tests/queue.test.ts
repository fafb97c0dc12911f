import { describe, expect, it } from "vitest";

import { Answer, ApiClient, Question, SubmitFailed, SubmitOutcome }
  from "../src/api.js";
import { createSession } from "../src/queue.js";

function q(id: string): Question {
  return {
    question_id: id,
    u1: `left:${id}`,
    u2: `right:${id}`,
    attributes: [],
    neighborhood: { side1: [], side2: [] },
  };
}

interface FakeApi {
  batches: Question[][];
  submitted: Array<{ question: string; answer: Answer }>;
  outcomes: Array<SubmitOutcome | "fail">;
  client: ApiClient;
}

function fakeApi(batches: Question[][]): FakeApi {
  const fake: FakeApi = {
    batches,
    submitted: [],
    outcomes: [],
    client: null as unknown as ApiClient,
  };
  fake.client = {
    questions: async () => fake.batches.shift() ?? [],
    submitLabel: async (_w: string, questionId: string, answer: Answer) => {
      const outcome = fake.outcomes.shift() ?? "stored";
      if (outcome === "fail") throw new SubmitFailed("down");
      fake.submitted.push({ question: questionId, answer });
      return outcome;
    },
  } as unknown as ApiClient;
  return fake;
}

describe("createSession", () => {
  it("replays user actions to the server in order", async () => {
    const fake = fakeApi([[q("q1"), q("q2"), q("q3")]]);
    const session = createSession(fake.client, "w1");
    await session.refill();

    const actions: Answer[] = ["match", "non_match", "unsure"];
    for (const a of actions) {
      expect(session.current()).not.toBeNull();
      await session.answer(a);
    }
    expect(fake.submitted).toEqual([
      { question: "q1", answer: "match" },
      { question: "q2", answer: "non_match" },
      { question: "q3", answer: "unsure" },
    ]);
    expect(session.current()).toBeNull();
    expect(session.answeredCount()).toBe(3);
  });

  it("dedupes questions that reappear across polls", async () => {
    const fake = fakeApi([[q("q1"), q("q2")], [q("q2"), q("q3")]]);
    const session = createSession(fake.client, "w1");
    expect(await session.refill()).toBe(2);
    expect(await session.refill()).toBe(1); // only q3 is new
    await session.answer("match");
    await session.answer("match");
    await session.answer("match");
    expect(fake.submitted.map((s) => s.question)).toEqual(["q1", "q2", "q3"]);
  });

  it("advances past duplicate and closed outcomes without re-sending",
     async () => {
    const fake = fakeApi([[q("q1"), q("q2")]]);
    fake.outcomes = ["duplicate", "closed"];
    const session = createSession(fake.client, "w1");
    await session.refill();
    expect(await session.answer("match")).toBe("duplicate");
    expect(await session.answer("match")).toBe("closed");
    expect(session.current()).toBeNull();
  });

  it("keeps the question current when the submission fails", async () => {
    const fake = fakeApi([[q("q1")]]);
    fake.outcomes = ["fail", "stored"];
    const session = createSession(fake.client, "w1");
    await session.refill();

    await expect(session.answer("match")).rejects.toBeInstanceOf(SubmitFailed);
    expect(session.current()?.question_id).toBe("q1");
    expect(session.answeredCount()).toBe(0);
    expect(session.busy()).toBe(false);

    expect(await session.answer("match")).toBe("stored");
    expect(session.answeredCount()).toBe(1);
  });

  it("refuses a second submission while one is in flight", async () => {
    const fake = fakeApi([[q("q1")]]);
    let release: (o: SubmitOutcome) => void = () => {};
    fake.client.submitLabel = () =>
      new Promise<SubmitOutcome>((resolve) => { release = resolve; });
    const session = createSession(fake.client, "w1");
    await session.refill();

    const first = session.answer("match");
    expect(session.busy()).toBe(true);
    await expect(session.answer("unsure")).rejects.toThrow("in flight");

    release("stored");
    expect(await first).toBe("stored");
    expect(session.busy()).toBe(false);
    expect(session.current()).toBeNull();
  });

  it("throws when there is nothing to answer", async () => {
    const session = createSession(fakeApi([]).client, "w1");
    await expect(session.answer("match"))
      .rejects.toThrow("no question to answer");
  });
});
