import { describe, expect, it } from "vitest";

import type { ApiClient } from "../src/api.js";
import { ApiError } from "../src/api.js";
import { loadDraft } from "../src/draft.js";
import type { AnnotationJson, StorageLike, TaskJson } from "../src/types.js";
import { tokenSpans, WorkbenchSession } from "../src/wizard.js";

const TEXT = "Who is Barack Obama's spouse?";

function baseTask(overrides: Partial<TaskJson> = {}): TaskJson {
  return {
    task_id: "t1",
    kind: "fresh",
    status: "open",
    quorum: 3,
    alpha_threshold: 0.667,
    qualification_threshold: 0.9,
    queries: [{ query_id: "q1", text: TEXT }],
    assigned_annotators: [],
    submissions: [],
    golds: [],
    agreement: null,
    answer_key_size: 0,
    results: [],
    ...overrides,
  };
}

function memoryStorage(): StorageLike {
  const map = new Map<string, string>();
  return {
    getItem: (key) => map.get(key) ?? null,
    setItem: (key, value) => void map.set(key, value),
    removeItem: (key) => void map.delete(key),
  };
}

interface FakeApi {
  client: ApiClient;
  submitted: AnnotationJson[][];
}

function fakeApi(submitBehavior: (records: AnnotationJson[]) => TaskJson): FakeApi {
  const submitted: AnnotationJson[][] = [];
  const client = {
    kgSearch: async (q: string) =>
      q.toLowerCase().includes("obama")
        ? [
            {
              entity_id: "Q1",
              canonical_name: "Barack Obama",
              ontology_type: "person",
              aliases: ["Barack Obama"],
              matched_alias: "Barack Obama",
              exact: true,
            },
          ]
        : [],
    submit: async (_taskId: string, records: AnnotationJson[]) => {
      submitted.push(records);
      return submitBehavior(records);
    },
  } as unknown as ApiClient;
  return { client, submitted };
}

function completeDraft(session: WorkbenchSession): void {
  session.setKnowledgeSeeking(true);
  session.next();
  session.clickToken(2);
  session.clickToken(3);
  session.chooseEntity("Q1");
  session.next();
  session.setRelation("spouse");
  session.next();
  session.setAnswerType("Entity");
  session.setAnswer({ kind: "entity", value: "Q2" });
}

describe("tokenSpans", () => {
  it("yields character offsets per whitespace-separated word", () => {
    expect(tokenSpans(TEXT)).toEqual([
      { start: 0, end: 3, word: "Who" },
      { start: 4, end: 6, word: "is" },
      { start: 7, end: 13, word: "Barack" },
      { start: 14, end: 21, word: "Obama's" },
      { start: 22, end: 29, word: "spouse?" },
    ]);
  });

  it("handles leading and repeated whitespace", () => {
    expect(tokenSpans("  a  bc ")).toEqual([
      { start: 2, end: 3, word: "a" },
      { start: 5, end: 7, word: "bc" },
    ]);
  });
});

describe("span click selection", () => {
  it("selects one word, extends to a second, then starts over", () => {
    const session = new WorkbenchSession(
      baseTask(),
      0,
      "grader-1",
      fakeApi(() => baseTask()).client,
      memoryStorage(),
    );
    session.clickToken(2);
    expect(session.draft.span).toEqual({ start: 7, end: 13, surface: "Barack" });

    session.clickToken(3);
    expect(session.draft.span).toEqual({ start: 7, end: 21, surface: "Barack Obama's" });

    session.clickToken(1);
    expect(session.draft.span).toEqual({ start: 4, end: 6, surface: "is" });
  });

  it("extends backwards when the second click is earlier", () => {
    const session = new WorkbenchSession(
      baseTask(),
      0,
      "grader-1",
      fakeApi(() => baseTask()).client,
      memoryStorage(),
    );
    session.clickToken(3);
    session.clickToken(2);
    expect(session.draft.span).toEqual({ start: 7, end: 21, surface: "Barack Obama's" });
  });

  it("clearing the span also unlinks the entity", () => {
    const session = new WorkbenchSession(
      baseTask(),
      0,
      "grader-1",
      fakeApi(() => baseTask()).client,
      memoryStorage(),
    );
    session.clickToken(2);
    session.chooseEntity("Q1");
    session.clearSpan();
    expect(session.draft.span).toBeNull();
    expect(session.draft.entityId).toBeNull();
  });
});

describe("step flow", () => {
  it("blocks the first step until knowledge-seeking is decided", () => {
    const session = new WorkbenchSession(
      baseTask(),
      0,
      "grader-1",
      fakeApi(() => baseTask()).client,
      memoryStorage(),
    );
    expect(session.step).toBe("properties");
    expect(session.next()).toBe(false);
    session.setKnowledgeSeeking(true);
    expect(session.next()).toBe(true);
    expect(session.step).toBe("entity");
  });

  it("allows skipping the entity step entirely but not half-done", () => {
    const session = new WorkbenchSession(
      baseTask(),
      0,
      "grader-1",
      fakeApi(() => baseTask()).client,
      memoryStorage(),
    );
    session.setKnowledgeSeeking(true);
    session.next();
    expect(session.next()).toBe(true);

    session.back();
    session.clickToken(2);
    expect(session.next()).toBe(false);
    session.chooseEntity("Q1");
    expect(session.next()).toBe(true);
  });

  it("disables the answer field for Unanswerable and drops any value", () => {
    const session = new WorkbenchSession(
      baseTask(),
      0,
      "grader-1",
      fakeApi(() => baseTask()).client,
      memoryStorage(),
    );
    session.setAnswerType("Entity");
    session.setAnswer({ kind: "entity", value: "Q2" });
    session.setAnswerType("Unanswerable");
    expect(session.draft.answer).toBeNull();
    expect(session.answerFieldEnabled).toBe(false);
    session.setAnswer({ kind: "text", value: "nope" });
    expect(session.draft.answer).toBeNull();
  });

  it("enables submit only on the answer step with a clean draft", () => {
    const session = new WorkbenchSession(
      baseTask(),
      0,
      "grader-1",
      fakeApi(() => baseTask()).client,
      memoryStorage(),
    );
    expect(session.canSubmit).toBe(false);
    completeDraft(session);
    expect(session.step).toBe("answer");
    expect(session.problems()).toEqual([]);
    expect(session.canSubmit).toBe(true);
  });
});

describe("draft persistence across sessions", () => {
  it("restores in-progress work after a reload", () => {
    const storage = memoryStorage();
    const api = fakeApi(() => baseTask()).client;
    const first = new WorkbenchSession(baseTask(), 0, "grader-1", api, storage);
    first.setKnowledgeSeeking(true);
    first.clickToken(2);
    first.clickToken(3);
    first.chooseEntity("Q1");

    const second = new WorkbenchSession(baseTask(), 0, "grader-1", api, storage);
    expect(second.draft.knowledgeSeeking).toBe(true);
    expect(second.draft.span).toEqual({ start: 7, end: 21, surface: "Barack Obama's" });
    expect(second.draft.entityId).toBe("Q1");
  });

  it("keeps drafts separate per annotator", () => {
    const storage = memoryStorage();
    const api = fakeApi(() => baseTask()).client;
    const mine = new WorkbenchSession(baseTask(), 0, "grader-1", api, storage);
    mine.setKnowledgeSeeking(true);

    const theirs = new WorkbenchSession(baseTask(), 0, "grader-2", api, storage);
    expect(theirs.draft.knowledgeSeeking).toBeNull();
  });
});

describe("submission", () => {
  it("posts the record, stores the response task, and clears the draft", async () => {
    const storage = memoryStorage();
    const closed = baseTask({ status: "closed" });
    const { client, submitted } = fakeApi(() => closed);
    const session = new WorkbenchSession(baseTask(), 0, "grader-1", client, storage);
    completeDraft(session);

    expect(await session.submit()).toBe(true);
    expect(submitted).toHaveLength(1);
    expect(submitted[0]).toHaveLength(1);
    expect(submitted[0]![0]).toMatchObject({
      query_id: "q1",
      annotator_id: "grader-1",
      relation: "spouse",
      answer: { kind: "entity", value: "Q2" },
    });
    expect(session.submittedTask).toBe(closed);
    expect(loadDraft(storage, "t1", "q1", "grader-1")).toBeNull();
  });

  it("refuses to post an incomplete draft", async () => {
    const { client, submitted } = fakeApi(() => baseTask());
    const session = new WorkbenchSession(baseTask(), 0, "grader-1", client, memoryStorage());
    expect(await session.submit()).toBe(false);
    expect(submitted).toHaveLength(0);
    expect(session.lastError).not.toBeNull();
  });

  it("surfaces a 422 inline and keeps the draft", async () => {
    const storage = memoryStorage();
    const client = {
      submit: async () => {
        throw new ApiError(422, "records[0]: span does not match query text");
      },
    } as unknown as ApiClient;
    const session = new WorkbenchSession(baseTask(), 0, "grader-1", client, storage);
    completeDraft(session);

    expect(await session.submit()).toBe(false);
    expect(session.lastError).toBe("records[0]: span does not match query text");
    expect(session.retryAvailable).toBe(false);
    expect(loadDraft(storage, "t1", "q1", "grader-1")).not.toBeNull();
  });

  it("offers a retry on network failure with the draft retained", async () => {
    const storage = memoryStorage();
    let calls = 0;
    const client = {
      submit: async (_taskId: string, records: AnnotationJson[]) => {
        calls += 1;
        if (calls === 1) throw new ApiError(0, "connection refused");
        return baseTask({ submissions: records });
      },
    } as unknown as ApiClient;
    const session = new WorkbenchSession(baseTask(), 0, "grader-1", client, storage);
    completeDraft(session);

    expect(await session.submit()).toBe(false);
    expect(session.retryAvailable).toBe(true);
    expect(loadDraft(storage, "t1", "q1", "grader-1")).not.toBeNull();

    expect(await session.submit()).toBe(true);
    expect(session.retryAvailable).toBe(false);
    expect(loadDraft(storage, "t1", "q1", "grader-1")).toBeNull();
  });
});

describe("qualification outcome", () => {
  it("reads this grader's latest result row from the response", async () => {
    const result = {
      annotator_id: "grader-1",
      score: 0.7,
      passed: false,
      items: [
        ["k1", true],
        ["k2", false],
      ] as [string, boolean][],
    };
    const response = baseTask({
      kind: "qualification",
      status: "closed",
      results: [{ annotator_id: "grader-9", score: 1, passed: true, items: [] }, result],
    });
    const session = new WorkbenchSession(
      baseTask({ kind: "qualification" }),
      0,
      "grader-1",
      fakeApi(() => response).client,
      memoryStorage(),
    );
    expect(session.isQualification).toBe(true);
    expect(session.qualificationOutcome()).toBeNull();
    completeDraft(session);
    await session.submit();
    expect(session.qualificationOutcome()).toEqual(result);
  });
});
