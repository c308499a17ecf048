/** Four-step annotation wizard state: query properties, entity span and
 * link, relation, answer. Submission stays disabled until the draft passes
 * the same checks the server applies, and every edit is persisted so a
 * reloaded page resumes where the grader left off. */

import { ApiClient, ApiError } from "./api.js";
import {
  clearDraft,
  Draft,
  draftProblems,
  emptyDraft,
  loadDraft,
  saveDraft,
  toAnnotationJson,
} from "./draft.js";
import type {
  AnswerJson,
  KgMatchJson,
  QualificationResultJson,
  StorageLike,
  TaskJson,
  TaskQueryJson,
} from "./types.js";

export const STEPS = ["properties", "entity", "relation", "answer"] as const;
export type StepName = (typeof STEPS)[number];

export interface TokenSpan {
  start: number;
  end: number;
  word: string;
}

export function tokenSpans(text: string): TokenSpan[] {
  const spans: TokenSpan[] = [];
  const re = /\S+/g;
  let match: RegExpExecArray | null;
  while ((match = re.exec(text)) !== null) {
    spans.push({ start: match.index, end: match.index + match[0].length, word: match[0] });
  }
  return spans;
}

export class WorkbenchSession {
  stepIndex = 0;
  draft: Draft;
  /** Inline message from the last failed submit, if any. */
  lastError: string | null = null;
  /** Set when a submit never reached the server; the draft is retained. */
  retryAvailable = false;
  /** Server task snapshot returned by the accepted submission. */
  submittedTask: TaskJson | null = null;
  private anchorToken: number | null = null;

  constructor(
    readonly task: TaskJson,
    readonly queryIndex: number,
    readonly annotatorId: string,
    private readonly api: ApiClient,
    private readonly storage: StorageLike,
    private readonly now: () => string = () => new Date().toISOString(),
  ) {
    const query = this.query;
    this.draft =
      loadDraft(storage, task.task_id, query.query_id, annotatorId) ??
      emptyDraft(query.query_id, annotatorId);
  }

  get query(): TaskQueryJson {
    const query = this.task.queries[this.queryIndex];
    if (!query) throw new Error(`no query at index ${this.queryIndex}`);
    return query;
  }

  get step(): StepName {
    return STEPS[this.stepIndex] as StepName;
  }

  get isQualification(): boolean {
    return this.task.kind === "qualification";
  }

  private persist(): void {
    saveDraft(this.storage, this.task.task_id, this.draft);
  }

  // step 1: query properties

  setKnowledgeSeeking(value: boolean): void {
    this.draft.knowledgeSeeking = value;
    this.persist();
  }

  toggleProperty(flag: string): void {
    const set = new Set(this.draft.properties);
    if (set.has(flag)) set.delete(flag);
    else set.add(flag);
    this.draft.properties = [...set].sort();
    this.persist();
  }

  // step 2: span selection and entity link

  get tokens(): TokenSpan[] {
    return tokenSpans(this.query.text);
  }

  /** Click-to-select: first click picks one word, a second click on another
   * word extends the span across both, a third starts over. */
  clickToken(index: number): void {
    const tokens = this.tokens;
    const token = tokens[index];
    if (!token) return;
    if (this.anchorToken === null || this.draft.span === null) {
      this.anchorToken = index;
      this.setSpan(token.start, token.end);
      return;
    }
    const lo = Math.min(this.anchorToken, index);
    const hi = Math.max(this.anchorToken, index);
    const first = tokens[lo];
    const last = tokens[hi];
    if (!first || !last) return;
    this.setSpan(first.start, last.end);
    this.anchorToken = null;
  }

  setSpan(start: number, end: number): void {
    this.draft.span = { start, end, surface: this.query.text.slice(start, end) };
    this.persist();
  }

  clearSpan(): void {
    this.draft.span = null;
    this.draft.entityId = null;
    this.anchorToken = null;
    this.persist();
  }

  searchEntities(q: string): Promise<KgMatchJson[]> {
    return this.api.kgSearch(q);
  }

  chooseEntity(entityId: string): void {
    this.draft.entityId = entityId;
    this.persist();
  }

  // step 3: relation

  setRelation(relation: string | null): void {
    this.draft.relation = relation;
    this.persist();
  }

  // step 4: answer

  setAnswerType(answerType: string): void {
    this.draft.answerType = answerType;
    if (answerType === "Unanswerable") this.draft.answer = null;
    this.persist();
  }

  /** The answer entry field is inert for Unanswerable drafts. */
  get answerFieldEnabled(): boolean {
    return this.draft.answerType !== null && this.draft.answerType !== "Unanswerable";
  }

  setAnswer(answer: AnswerJson | null): void {
    if (!this.answerFieldEnabled && answer !== null) return;
    this.draft.answer = answer;
    this.persist();
  }

  // navigation and submission

  problems(): string[] {
    return draftProblems(this.draft, this.query.text);
  }

  /** Problems that block leaving the current step. */
  stepProblems(): string[] {
    const all = this.problems();
    switch (this.step) {
      case "properties":
        return all.filter((p) => p.includes("knowledge-seeking") || p.includes("property"));
      case "entity":
        return all.filter((p) => p.includes("span") || p.includes("entity"));
      case "relation":
        return [];
      case "answer":
        return all;
    }
  }

  next(): boolean {
    if (this.stepIndex >= STEPS.length - 1) return false;
    if (this.stepProblems().length > 0) return false;
    this.stepIndex += 1;
    return true;
  }

  back(): boolean {
    if (this.stepIndex === 0) return false;
    this.stepIndex -= 1;
    return true;
  }

  get canSubmit(): boolean {
    return this.step === "answer" && this.problems().length === 0;
  }

  async submit(): Promise<boolean> {
    if (!this.canSubmit) {
      this.lastError = this.problems().join("; ");
      return false;
    }
    const record = toAnnotationJson(this.draft, this.now());
    try {
      const task = await this.api.submit(this.task.task_id, [record]);
      this.submittedTask = task;
      this.lastError = null;
      this.retryAvailable = false;
      clearDraft(this.storage, this.task.task_id, this.draft.queryId, this.annotatorId);
      return true;
    } catch (err) {
      if (err instanceof ApiError && err.isNetwork) {
        // The draft stays in storage; the grader can retry.
        this.retryAvailable = true;
        this.lastError = "could not reach the server; your draft is saved";
        return false;
      }
      if (err instanceof ApiError) {
        this.retryAvailable = false;
        this.lastError = err.detail;
        return false;
      }
      throw err;
    }
  }

  /** Exam outcome for this grader, available once a qualification
   * submission was accepted. */
  qualificationOutcome(): QualificationResultJson | null {
    if (this.submittedTask === null) return null;
    const mine = this.submittedTask.results.filter((r) => r.annotator_id === this.annotatorId);
    return mine.length > 0 ? (mine[mine.length - 1] as QualificationResultJson) : null;
  }
}
