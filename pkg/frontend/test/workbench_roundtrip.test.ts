/** Drives the real service end to end through the wizard: three graders
 * label the same fixture query and the closed task must carry a unanimous
 * gold (support 3/3) and agreement alpha of exactly 1. */

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import type { StorageLike, TaskJson } from "../src/types.js";
import { WorkbenchSession } from "../src/wizard.js";
import { startServer, TestServer } from "./server.js";

const QUERY_TEXT = "Who is Barack Obama's spouse?";

function memoryStorage(): StorageLike {
  const map = new Map<string, string>();
  return {
    getItem: (key) => map.get(key) ?? null,
    setItem: (key, value) => void map.set(key, value),
    removeItem: (key) => void map.delete(key),
  };
}

let server: TestServer;
let api: ApiClient;

beforeAll(async () => {
  server = await startServer();
  api = new ApiClient(server.baseUrl);
});

afterAll(async () => {
  await server.stop();
});

/** Walks all four wizard steps the way the UI does, including the KG
 * search round trip, and submits. */
async function labelSpouseQuery(session: WorkbenchSession): Promise<boolean> {
  expect(session.step).toBe("properties");
  session.setKnowledgeSeeking(true);
  expect(session.next()).toBe(true);

  expect(session.step).toBe("entity");
  session.clickToken(2);
  session.clickToken(3);
  expect(session.draft.span).toEqual({ start: 7, end: 21, surface: "Barack Obama's" });
  const matches = await session.searchEntities("Barack Obama");
  expect(matches.length).toBeGreaterThan(0);
  expect(matches[0]!.entity_id).toBe("Q1");
  expect(matches[0]!.exact).toBe(true);
  session.chooseEntity(matches[0]!.entity_id);
  expect(session.next()).toBe(true);

  expect(session.step).toBe("relation");
  session.setRelation("spouse");
  expect(session.next()).toBe(true);

  expect(session.step).toBe("answer");
  session.setAnswerType("Entity");
  session.setAnswer({ kind: "entity", value: "Q2" });
  expect(session.canSubmit).toBe(true);
  return session.submit();
}

describe("workbench round-trip", () => {
  it("three wizard completions close the task with a 3/3 gold and alpha 1", async () => {
    const task = await api.createTask({
      kind: "fresh",
      queries: [{ query_id: "q1", text: QUERY_TEXT }],
      quorum: 3,
      assigned_annotators: ["grader-1", "grader-2", "grader-3"],
    });
    expect(task.status).toBe("open");

    let last: WorkbenchSession | null = null;
    for (const grader of ["grader-1", "grader-2", "grader-3"]) {
      const session = new WorkbenchSession(task, 0, grader, api, memoryStorage());
      expect(await labelSpouseQuery(session)).toBe(true);
      last = session;
    }

    // The accepting response already reflects the close.
    expect(last!.submittedTask!.status).toBe("closed");

    // Server state, fetched fresh rather than trusted from the response.
    const closed: TaskJson = await api.taskDetail(task.task_id);
    expect(closed.status).toBe("closed");
    expect(closed.submissions).toHaveLength(3);

    expect(closed.golds).toHaveLength(1);
    const gold = closed.golds[0]!;
    expect(gold.query_id).toBe("q1");
    expect(gold.support_count).toBe(3);
    expect(gold.total_annotators).toBe(3);
    expect(gold.knowledge_seeking).toBe(true);
    expect(gold.relation).toBe("spouse");
    expect(gold.answer_type).toBe("Entity");
    expect(gold.entity).toEqual({
      span: { start: 7, end: 21, surface: "Barack Obama's" },
      entity_id: "Q1",
    });
    expect(gold.answer).toEqual({ kind: "entity", value: "Q2" });

    expect(closed.agreement).not.toBeNull();
    expect(closed.agreement!.alpha).toBe(1);
    expect(closed.agreement!.flagged).toBe(false);
  });

  it("rejects a fourth submission to the closed task with a 409", async () => {
    const task = await api.createTask({
      kind: "fresh",
      queries: [{ query_id: "q1", text: QUERY_TEXT }],
      quorum: 1,
      task_id: "roundtrip-conflict",
    });
    const first = new WorkbenchSession(task, 0, "grader-1", api, memoryStorage());
    expect(await labelSpouseQuery(first)).toBe(true);
    expect(first.submittedTask!.status).toBe("closed");

    const late = new WorkbenchSession(task, 0, "grader-2", api, memoryStorage());
    expect(await labelSpouseQuery(late)).toBe(false);
    expect(late.retryAvailable).toBe(false);
    expect(late.lastError).toContain("closed");

    await expect(
      api.submit(task.task_id, [
        {
          query_id: "q1",
          annotator_id: "grader-9",
          knowledge_seeking: true,
          properties: [],
          answer_type: "Unanswerable",
          annotated_at: new Date().toISOString(),
        },
      ]),
    ).rejects.toMatchObject({ status: 409 });
  });

  it("server-side validation backs up the client mirror with a 422", async () => {
    const task = await api.createTask({
      kind: "fresh",
      queries: [{ query_id: "q1", text: QUERY_TEXT }],
      quorum: 3,
      task_id: "roundtrip-invalid",
    });
    await expect(
      api.submit(task.task_id, [
        {
          query_id: "q1",
          annotator_id: "grader-1",
          knowledge_seeking: true,
          properties: [],
          answer_type: "NoSuchType",
          annotated_at: new Date().toISOString(),
        },
      ]),
    ).rejects.toMatchObject({ status: 422 });
  });

  it("qualification mode grades each attempt and blocks retakes after a pass", async () => {
    const answerKey = [
      {
        query_id: "q1",
        knowledge_seeking: true,
        properties: [],
        answer_type: "Entity",
        support_count: 3,
        total_annotators: 3,
        dominant: true,
        entity: {
          span: { start: 7, end: 19, surface: "Barack Obama" },
          entity_id: "Q1",
        },
        relation: "spouse",
        answer: { kind: "entity" as const, value: "Q2" },
      },
    ];
    const task = await api.createTask({
      kind: "qualification",
      queries: [{ query_id: "q1", text: QUERY_TEXT }],
      quorum: 2,
      answer_key: answerKey,
      task_id: "roundtrip-exam",
    });
    expect(task.answer_key_size).toBe(1);

    // Exams are graded per submission; the outcome is available at once.
    const passing = new WorkbenchSession(task, 0, "grader-pass", api, memoryStorage());
    expect(await labelSpouseQuery(passing)).toBe(true);
    const passOutcome = passing.qualificationOutcome();
    expect(passOutcome).not.toBeNull();
    expect(passOutcome!.passed).toBe(true);
    expect(passOutcome!.score).toBe(1);
    expect(passOutcome!.items).toEqual([["q1", true]]);

    // A wrong relation fails the exam with a per-item diff.
    const failing = new WorkbenchSession(task, 0, "grader-fail", api, memoryStorage());
    failing.setKnowledgeSeeking(true);
    failing.next();
    failing.clickToken(2);
    failing.clickToken(3);
    const matches = await failing.searchEntities("Barack Obama");
    failing.chooseEntity(matches[0]!.entity_id);
    failing.next();
    failing.setRelation("children");
    failing.next();
    failing.setAnswerType("Entity");
    failing.setAnswer({ kind: "entity", value: "Q2" });
    expect(await failing.submit()).toBe(true);

    const failOutcome = failing.qualificationOutcome();
    expect(failOutcome).not.toBeNull();
    expect(failOutcome!.passed).toBe(false);
    expect(failOutcome!.score).toBe(0);
    expect(failOutcome!.items).toEqual([["q1", false]]);

    // A failed grader retakes; the new attempt replaces the old result.
    const retake = new WorkbenchSession(task, 0, "grader-fail", api, memoryStorage());
    expect(await labelSpouseQuery(retake)).toBe(true);
    expect(retake.qualificationOutcome()!.passed).toBe(true);

    const latest = await api.taskDetail(task.task_id);
    expect(latest.status).toBe("open");
    expect(latest.results).toHaveLength(2);
    const byGrader = new Map(latest.results.map((r) => [r.annotator_id, r]));
    expect(byGrader.get("grader-pass")!.passed).toBe(true);
    expect(byGrader.get("grader-fail")!.passed).toBe(true);

    // The key itself never leaves the server.
    expect("answer_key" in (latest as unknown as Record<string, unknown>)).toBe(false);
    expect(latest.answer_key_size).toBe(1);

    // Once passed, another attempt is refused.
    const again = new WorkbenchSession(task, 0, "grader-pass", api, memoryStorage());
    expect(await labelSpouseQuery(again)).toBe(false);
    expect(again.retryAvailable).toBe(false);
    expect(again.lastError).toContain("already passed");
  });
});
