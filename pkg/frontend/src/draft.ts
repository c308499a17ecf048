/** In-progress annotation draft: the client-side mirror of the server's
 * record invariants, plus persistence so a page reload restores work. */

import type { AnnotationJson, AnswerJson, AnswerKind, StorageLike } from "./types.js";

export const ANSWER_TYPES = [
  "Entity",
  "LongAnswer",
  "Unanswerable",
  "Date",
  "Number",
  "NumberWithUnit",
  "ShortPhrase",
  "Binary",
] as const;

export const PROPERTY_FLAGS = ["geo_sensitive", "time_sensitive", "ambiguous", "complex"] as const;

/** The answer value kind each answer type carries on the wire. */
export const KIND_FOR_TYPE: Record<string, AnswerKind> = {
  Entity: "entity",
  LongAnswer: "text",
  Date: "date",
  Number: "number",
  NumberWithUnit: "number_unit",
  ShortPhrase: "text",
  Binary: "boolean",
};

export interface DraftSpan {
  start: number;
  end: number;
  surface: string;
}

export interface Draft {
  queryId: string;
  annotatorId: string;
  knowledgeSeeking: boolean | null;
  properties: string[];
  span: DraftSpan | null;
  entityId: string | null;
  relation: string | null;
  answerType: string | null;
  answer: AnswerJson | null;
}

export function emptyDraft(queryId: string, annotatorId: string): Draft {
  return {
    queryId,
    annotatorId,
    knowledgeSeeking: null,
    properties: [],
    span: null,
    entityId: null,
    relation: null,
    answerType: null,
    answer: null,
  };
}

/** Everything stopping this draft from being a valid submission. An empty
 * list means the server-side record constructor would accept it. */
export function draftProblems(draft: Draft, queryText: string): string[] {
  const problems: string[] = [];
  if (draft.knowledgeSeeking === null) {
    problems.push("decide whether the query is knowledge-seeking");
  }
  for (const flag of draft.properties) {
    if (!(PROPERTY_FLAGS as readonly string[]).includes(flag)) {
      problems.push(`unknown property ${flag}`);
    }
  }
  if (draft.span !== null) {
    if (draft.span.end <= draft.span.start) {
      problems.push("span is empty");
    } else if (queryText.slice(draft.span.start, draft.span.end) !== draft.span.surface) {
      problems.push("span does not match the query text");
    }
    if (draft.entityId === null) {
      problems.push("pick a KG entity for the selected span");
    }
  } else if (draft.entityId !== null) {
    problems.push("select the mention span for the chosen entity");
  }
  if (draft.answerType === null) {
    problems.push("choose an answer type");
    return problems;
  }
  if (!(ANSWER_TYPES as readonly string[]).includes(draft.answerType)) {
    problems.push(`unknown answer type ${draft.answerType}`);
    return problems;
  }
  if (draft.answerType === "Unanswerable") {
    if (draft.answer !== null) problems.push("Unanswerable queries carry no answer value");
    return problems;
  }
  if (draft.answer === null) {
    problems.push("enter an answer value");
    return problems;
  }
  const expectedKind = KIND_FOR_TYPE[draft.answerType];
  if (draft.answer.kind !== expectedKind) {
    problems.push(`${draft.answerType} answers use the ${expectedKind} value kind`);
  }
  if (draft.answerType === "NumberWithUnit" && !draft.answer.unit) {
    problems.push("NumberWithUnit answers need a unit");
  }
  return problems;
}

export function toAnnotationJson(draft: Draft, annotatedAt: string): AnnotationJson {
  const row: AnnotationJson = {
    query_id: draft.queryId,
    annotator_id: draft.annotatorId,
    knowledge_seeking: draft.knowledgeSeeking === true,
    properties: [...draft.properties].sort(),
    answer_type: draft.answerType ?? "Unanswerable",
    annotated_at: annotatedAt,
  };
  if (draft.span !== null && draft.entityId !== null) {
    row.entity = {
      span: { start: draft.span.start, end: draft.span.end, surface: draft.span.surface },
      entity_id: draft.entityId,
    };
  }
  if (draft.relation !== null) row.relation = draft.relation;
  if (draft.answer !== null) row.answer = draft.answer;
  return row;
}

function draftKey(taskId: string, queryId: string, annotatorId: string): string {
  return `workbench.draft.${taskId}.${queryId}.${annotatorId}`;
}

export function saveDraft(storage: StorageLike, taskId: string, draft: Draft): void {
  storage.setItem(draftKey(taskId, draft.queryId, draft.annotatorId), JSON.stringify(draft));
}

export function loadDraft(
  storage: StorageLike,
  taskId: string,
  queryId: string,
  annotatorId: string,
): Draft | null {
  const raw = storage.getItem(draftKey(taskId, queryId, annotatorId));
  if (raw === null) return null;
  try {
    const parsed = JSON.parse(raw) as Draft;
    if (parsed.queryId !== queryId || parsed.annotatorId !== annotatorId) return null;
    return parsed;
  } catch {
    return null;
  }
}

export function clearDraft(
  storage: StorageLike,
  taskId: string,
  queryId: string,
  annotatorId: string,
): void {
  storage.removeItem(draftKey(taskId, queryId, annotatorId));
}
