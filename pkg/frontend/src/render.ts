/** DOM construction for the dashboard and the annotation wizard.
 *
 * Display rule: visible numbers are formatted copies of single API fields.
 * Each numeric element also carries the exact payload value in a data-*
 * attribute so fidelity is checkable without parsing labels. The only
 * client-side sums are the sankey node throughputs, which are integer
 * sums of payload edge weights (flow bookkeeping, not metric math). */

import type { DashboardView } from "./dashboard.js";
import { TREND_METRICS } from "./dashboard.js";
import { ANSWER_TYPES, KIND_FOR_TYPE, PROPERTY_FLAGS } from "./draft.js";
import { layoutSankey, linkPath, nodeTotals } from "./sankey.js";
import type {
  KgMatchJson,
  MetricValueJson,
  MetricsResponseJson,
  ReportJson,
  SankeyJson,
  TopRelationJson,
  TrendsResponseJson,
} from "./types.js";
import type { WorkbenchSession } from "./wizard.js";

const SVG_NS = "http://www.w3.org/2000/svg";

type Child = Node | string | null | undefined;

export function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  attrs: Record<string, string | boolean> = {},
  ...children: Child[]
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (typeof value === "boolean") {
      if (value) node.setAttribute(key, "");
    } else {
      node.setAttribute(key, value);
    }
  }
  for (const child of children) {
    if (child === null || child === undefined) continue;
    node.append(typeof child === "string" ? doc.createTextNode(child) : child);
  }
  return node;
}

function svg(doc: Document, tag: string, attrs: Record<string, string> = {}): SVGElement {
  const node = doc.createElementNS(SVG_NS, tag) as SVGElement;
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  return node;
}

/** Two-decimal display form; the exact value stays in a data attribute. */
export function fmt(value: number | null): string {
  return value === null ? "n/a" : value.toFixed(2);
}

function pctCell(doc: Document, value: MetricValueJson): HTMLTableCellElement {
  return el(
    doc,
    "td",
    {
      class: "num",
      "data-pct": value.pct === null ? "" : String(value.pct),
      title: `${value.numerator}/${value.denominator}`,
    },
    fmt(value.pct),
  );
}

// ---------------------------------------------------------------- dashboard

export interface DashboardActions {
  selectRun(runId: string): void;
  setSlice(slice: string): void;
  setTrendMetric(metric: string): void;
}

export function renderDashboard(
  doc: Document,
  view: DashboardView,
  actions: DashboardActions,
): HTMLElement {
  const root = el(doc, "section", { class: "dashboard" });
  if (view.error !== null) {
    root.append(el(doc, "p", { class: "error", role: "alert" }, view.error));
  }
  if (view.runs.length === 0) {
    root.append(
      el(doc, "p", { class: "empty" }, "No runs in the ledger yet. Evaluate something first."),
    );
    return root;
  }
  root.append(renderControls(doc, view, actions));
  if (view.metrics !== null) root.append(renderMetricsTables(doc, view.metrics));
  root.append(
    el(
      doc,
      "div",
      { class: "charts" },
      view.trends !== null ? renderTrendChart(doc, view.trends) : null,
      view.sankey !== null ? renderSankeyView(doc, view.sankey) : null,
      renderTopRelations(doc, view.topRelations),
    ),
  );
  return root;
}

function renderControls(
  doc: Document,
  view: DashboardView,
  actions: DashboardActions,
): HTMLElement {
  const runSelect = el(doc, "select", { id: "run-select" });
  for (const run of [...view.runs].reverse()) {
    const option = el(doc, "option", { value: run.run_id }, `${run.run_id} (${run.system_id})`);
    if (run.run_id === view.selectedRunId) option.selected = true;
    runSelect.append(option);
  }
  runSelect.addEventListener("change", () => actions.selectRun(runSelect.value));

  const sliceSelect = el(doc, "select", { id: "slice-select" });
  for (const slice of view.slices) {
    const option = el(doc, "option", { value: slice }, slice);
    if (slice === view.slice) option.selected = true;
    sliceSelect.append(option);
  }
  sliceSelect.addEventListener("change", () => actions.setSlice(sliceSelect.value));

  const metricSelect = el(doc, "select", { id: "trend-metric-select" });
  for (const metric of TREND_METRICS) {
    const option = el(doc, "option", { value: metric }, metric);
    if (metric === view.trendMetric) option.selected = true;
    metricSelect.append(option);
  }
  metricSelect.addEventListener("change", () => actions.setTrendMetric(metricSelect.value));

  return el(
    doc,
    "div",
    { class: "controls" },
    el(doc, "label", { for: "run-select" }, "Run"),
    runSelect,
    el(doc, "label", { for: "slice-select" }, "Slice"),
    sliceSelect,
    el(doc, "label", { for: "trend-metric-select" }, "Trend metric"),
    metricSelect,
  );
}

function componentCells(doc: Document, report: ReportJson): HTMLTableCellElement[] {
  const cells: HTMLTableCellElement[] = [];
  for (const component of ["relation", "entity", "answer"]) {
    for (const mode of ["headroom", "cascaded"]) {
      const pair = report.components[component]?.[mode];
      if (!pair) continue;
      cells.push(pctCell(doc, pair.coverage), pctCell(doc, pair.precision));
    }
  }
  return cells;
}

export function renderMetricsTables(doc: Document, metrics: MetricsResponseJson): HTMLElement {
  const wrap = el(doc, "div", { class: "metrics" });
  if (metrics.reports.length === 0) {
    wrap.append(el(doc, "p", { class: "empty" }, "No rows for this slice."));
    return wrap;
  }

  const main = el(doc, "table", { class: "metric-table", id: "e2e-table" });
  main.append(
    el(
      doc,
      "thead",
      {},
      el(
        doc,
        "tr",
        {},
        el(doc, "th", {}, "Dataset"),
        el(doc, "th", {}, "Slice"),
        el(doc, "th", {}, "E2E coverage"),
        el(doc, "th", {}, "E2E precision"),
        el(doc, "th", {}, "KG accuracy"),
        el(doc, "th", {}, "KG freshness"),
        el(doc, "th", {}, "KG coverage"),
      ),
    ),
  );
  const mainBody = el(doc, "tbody");
  for (const report of metrics.reports) {
    mainBody.append(
      el(
        doc,
        "tr",
        { "data-dataset": report.dataset_id, "data-slice": report.slice_key },
        el(doc, "td", {}, report.dataset_id),
        el(doc, "td", {}, report.slice_key),
        pctCell(doc, report.e2e.coverage),
        pctCell(doc, report.e2e.precision),
        pctCell(doc, report.kg_quality.accuracy),
        pctCell(doc, report.kg_quality.freshness),
        pctCell(doc, report.kg_quality.coverage),
      ),
    );
  }
  main.append(mainBody);

  const comp = el(doc, "table", { class: "metric-table", id: "component-table" });
  const groupRow = el(
    doc,
    "tr",
    {},
    el(doc, "th", { rowspan: "2" }, "Dataset"),
    el(doc, "th", { rowspan: "2" }, "Slice"),
  );
  const ratioRow = el(doc, "tr");
  for (const component of ["relation", "entity", "answer"]) {
    for (const mode of ["headroom", "cascaded"]) {
      groupRow.append(el(doc, "th", { colspan: "2" }, `${component} ${mode}`));
      ratioRow.append(el(doc, "th", {}, "cov"), el(doc, "th", {}, "prec"));
    }
  }
  comp.append(el(doc, "thead", {}, groupRow, ratioRow));
  const compBody = el(doc, "tbody");
  for (const report of metrics.reports) {
    compBody.append(
      el(
        doc,
        "tr",
        { "data-dataset": report.dataset_id, "data-slice": report.slice_key },
        el(doc, "td", {}, report.dataset_id),
        el(doc, "td", {}, report.slice_key),
        ...componentCells(doc, report),
      ),
    );
  }
  comp.append(compBody);

  wrap.append(
    el(doc, "h2", {}, "End-to-end and KG quality"),
    el(doc, "div", { class: "scroll-x" }, main),
    el(doc, "h2", {}, "Component coverage and precision"),
    el(doc, "div", { class: "scroll-x" }, comp),
  );
  return wrap;
}

export function renderTrendChart(doc: Document, trends: TrendsResponseJson): HTMLElement {
  const section = el(doc, "section", { class: "trend", id: "trend-chart" });
  section.append(el(doc, "h2", {}, `Trend: ${trends.metric} (${trends.slice})`));
  const points = trends.points;
  if (points.length === 0) {
    section.append(el(doc, "p", { class: "empty" }, "No runs recorded for this metric yet."));
    return section;
  }

  const width = 560;
  const height = 200;
  const pad = 24;
  const chart = svg(doc, "svg", {
    viewBox: `0 0 ${width} ${height}`,
    width: String(width),
    height: String(height),
    role: "img",
  });
  const known = points.filter((p) => p.value !== null) as { value: number }[];
  const lo = known.length > 0 ? Math.min(0, ...known.map((p) => p.value)) : 0;
  const hi = known.length > 0 ? Math.max(100, ...known.map((p) => p.value)) : 100;
  const x = (i: number) =>
    points.length > 1 ? pad + (i * (width - 2 * pad)) / (points.length - 1) : width / 2;
  const y = (v: number) => height - pad - ((v - lo) * (height - 2 * pad)) / (hi - lo || 1);

  let prev: { px: number; py: number } | null = null;
  points.forEach((point, i) => {
    if (point.value === null) {
      prev = null;
      return;
    }
    const px = x(i);
    const py = y(point.value);
    if (prev !== null) {
      chart.append(
        svg(doc, "line", {
          x1: String(prev.px),
          y1: String(prev.py),
          x2: String(px),
          y2: String(py),
          class: "trend-line",
        }),
      );
    }
    const dot = svg(doc, "circle", {
      cx: String(px),
      cy: String(py),
      r: "4",
      class: "trend-point",
      "data-run-id": point.run_id,
      "data-value": String(point.value),
    });
    dot.append(svg(doc, "title"));
    dot.querySelector("title")!.textContent = `${point.run_id}: ${fmt(point.value)}`;
    chart.append(dot);
    prev = { px, py };
  });
  section.append(chart);

  const list = el(doc, "table", { class: "trend-table" });
  const body = el(doc, "tbody");
  for (const point of points) {
    body.append(
      el(
        doc,
        "tr",
        {},
        el(doc, "td", {}, point.run_id),
        el(doc, "td", {}, point.created_at),
        el(
          doc,
          "td",
          {
            class: "num trend-value",
            "data-run-id": point.run_id,
            "data-value": point.value === null ? "" : String(point.value),
          },
          fmt(point.value),
        ),
      ),
    );
  }
  list.append(body);
  section.append(el(doc, "div", { class: "scroll-x" }, list));
  return section;
}

export function renderSankeyView(doc: Document, data: SankeyJson): HTMLElement {
  const section = el(doc, "section", { class: "sankey", id: "sankey-chart" });
  section.append(el(doc, "h2", {}, "Where queries end up"));
  const totals = nodeTotals(data);
  const width = 640;
  const height = 340;
  const layout = layoutSankey(data, width, height - 20, { nodeWidth: 14, gap: 12 });
  const chart = svg(doc, "svg", {
    viewBox: `0 0 ${width} ${height}`,
    width: String(width),
    height: String(height),
    role: "img",
  });
  for (const link of layout.links) {
    if (link.width <= 0) continue;
    chart.append(
      svg(doc, "path", {
        d: linkPath(link),
        class: "sankey-link",
        fill: "none",
        "stroke-width": String(Math.max(1, link.width)),
        "data-from": link.from,
        "data-to": link.to,
        "data-weight": String(link.weight),
      }),
    );
  }
  for (const node of layout.nodes) {
    chart.append(
      svg(doc, "rect", {
        x: String(node.x0),
        y: String(node.y0),
        width: String(node.x1 - node.x0),
        height: String(Math.max(1, node.y1 - node.y0)),
        class: `sankey-node depth-${node.depth}`,
        "data-node": node.name,
      }),
    );
    const anchor = node.depth === 0 ? "start" : "end";
    const tx = node.depth === 0 ? node.x1 + 4 : node.x0 - 4;
    const label = svg(doc, "text", {
      x: String(tx),
      y: String((node.y0 + node.y1) / 2 + 4),
      "text-anchor": anchor === "start" ? "start" : "end",
      class: "sankey-label",
      "data-node": node.name,
      "data-total": String(totals.get(node.name) ?? 0),
    });
    label.textContent = `${node.name} ${totals.get(node.name) ?? 0}`;
    chart.append(label);
  }
  section.append(el(doc, "div", { class: "scroll-x" }, chart));
  return section;
}

export function renderTopRelations(doc: Document, rows: TopRelationJson[]): HTMLElement {
  const section = el(doc, "section", { class: "top-relations", id: "top-relations" });
  section.append(el(doc, "h2", {}, "Top relations among incorrect answers"));
  if (rows.length === 0) {
    section.append(el(doc, "p", { class: "empty" }, "Nothing incorrect in this run."));
    return section;
  }
  const max = Math.max(...rows.map((r) => r.count));
  const table = el(doc, "table", { class: "relation-table" });
  const body = el(doc, "tbody");
  rows.forEach((row, i) => {
    const bar = el(doc, "div", { class: "bar" });
    bar.style.width = `${max > 0 ? (100 * row.count) / max : 0}%`;
    body.append(
      el(
        doc,
        "tr",
        { "data-relation": row.relation },
        el(doc, "td", { class: "num" }, String(i + 1)),
        el(doc, "td", {}, row.relation),
        el(doc, "td", { class: "num", "data-count": String(row.count) }, String(row.count)),
        el(doc, "td", { class: "bar-cell" }, bar),
      ),
    );
  });
  table.append(body);
  section.append(el(doc, "div", { class: "scroll-x" }, table));
  return section;
}

// ------------------------------------------------------------------ wizard

export interface WizardActions {
  rerender(): void;
  search(q: string): Promise<KgMatchJson[]>;
}

export function renderWizard(
  doc: Document,
  session: WorkbenchSession,
  actions: WizardActions,
): HTMLElement {
  const root = el(doc, "section", { class: "wizard" });
  const query = session.query;

  if (session.isQualification) {
    root.append(el(doc, "p", { class: "badge exam" }, "Qualification exam"));
  }
  root.append(
    el(doc, "h2", {}, `Query ${query.query_id}`),
    el(doc, "p", { class: "query-text" }, query.text),
  );

  const nav = el(doc, "ol", { class: "steps" });
  ["Query properties", "Entity", "Relation", "Answer"].forEach((label, i) => {
    nav.append(
      el(doc, "li", { class: i === session.stepIndex ? "step current" : "step" }, label),
    );
  });
  root.append(nav);

  if (session.submittedTask !== null) {
    root.append(renderSubmitted(doc, session));
    return root;
  }

  switch (session.step) {
    case "properties":
      root.append(renderPropertiesStep(doc, session, actions));
      break;
    case "entity":
      root.append(renderEntityStep(doc, session, actions));
      break;
    case "relation":
      root.append(renderRelationStep(doc, session, actions));
      break;
    case "answer":
      root.append(renderAnswerStep(doc, session, actions));
      break;
  }

  const problems = session.step === "answer" ? session.problems() : session.stepProblems();
  if (problems.length > 0) {
    const list = el(doc, "ul", { class: "problems" });
    for (const problem of problems) list.append(el(doc, "li", {}, problem));
    root.append(list);
  }
  if (session.lastError !== null) {
    root.append(el(doc, "p", { class: "error", role: "alert" }, session.lastError));
  }

  const controls = el(doc, "div", { class: "wizard-nav" });
  const back = el(doc, "button", { type: "button", id: "wizard-back" }, "Back");
  back.disabled = session.stepIndex === 0;
  back.addEventListener("click", () => {
    session.back();
    actions.rerender();
  });
  controls.append(back);
  if (session.step !== "answer") {
    const next = el(doc, "button", { type: "button", id: "wizard-next" }, "Next");
    next.disabled = session.stepProblems().length > 0;
    next.addEventListener("click", () => {
      session.next();
      actions.rerender();
    });
    controls.append(next);
  } else {
    const submit = el(doc, "button", { type: "button", id: "wizard-submit" }, "Submit");
    submit.disabled = !session.canSubmit;
    submit.addEventListener("click", () => {
      void session.submit().then(() => actions.rerender());
    });
    controls.append(submit);
    if (session.retryAvailable) {
      const retry = el(doc, "button", { type: "button", id: "wizard-retry" }, "Retry");
      retry.addEventListener("click", () => {
        void session.submit().then(() => actions.rerender());
      });
      controls.append(retry);
    }
  }
  root.append(controls);
  return root;
}

function renderPropertiesStep(
  doc: Document,
  session: WorkbenchSession,
  actions: WizardActions,
): HTMLElement {
  const panel = el(doc, "div", { class: "panel", id: "step-properties" });
  panel.append(el(doc, "h3", {}, "Is this query knowledge-seeking?"));
  for (const [label, value] of [
    ["Yes, it asks for a fact", true],
    ["No, it is not knowledge-seeking", false],
  ] as const) {
    const input = el(doc, "input", {
      type: "radio",
      name: "knowledge-seeking",
      id: `ks-${value}`,
    });
    input.checked = session.draft.knowledgeSeeking === value;
    input.addEventListener("change", () => {
      session.setKnowledgeSeeking(value);
      actions.rerender();
    });
    panel.append(el(doc, "label", { class: "choice", for: `ks-${value}` }, input, label));
  }
  panel.append(el(doc, "h3", {}, "Properties that apply"));
  for (const flag of PROPERTY_FLAGS) {
    const input = el(doc, "input", { type: "checkbox", id: `prop-${flag}` });
    input.checked = session.draft.properties.includes(flag);
    input.addEventListener("change", () => {
      session.toggleProperty(flag);
      actions.rerender();
    });
    panel.append(el(doc, "label", { class: "choice", for: `prop-${flag}` }, input, flag));
  }
  return panel;
}

function renderEntityStep(
  doc: Document,
  session: WorkbenchSession,
  actions: WizardActions,
): HTMLElement {
  const panel = el(doc, "div", { class: "panel", id: "step-entity" });
  panel.append(
    el(doc, "h3", {}, "Click the words naming the entity"),
    el(doc, "p", { class: "hint" }, "Click one word, then another to extend the selection."),
  );

  const text = el(doc, "p", { class: "tokens", id: "token-row" });
  const span = session.draft.span;
  session.tokens.forEach((token, i) => {
    const inSpan = span !== null && token.start >= span.start && token.end <= span.end;
    const piece = el(
      doc,
      "button",
      {
        type: "button",
        class: inSpan ? "token selected" : "token",
        "data-index": String(i),
      },
      token.word,
    );
    piece.addEventListener("click", () => {
      session.clickToken(i);
      actions.rerender();
    });
    text.append(piece, " ");
  });
  panel.append(text);

  if (span !== null) {
    const clear = el(doc, "button", { type: "button", id: "clear-span" }, "Clear selection");
    clear.addEventListener("click", () => {
      session.clearSpan();
      actions.rerender();
    });
    panel.append(
      el(
        doc,
        "p",
        { class: "selection", "data-start": String(span.start), "data-end": String(span.end) },
        `Selected: "${span.surface}" `,
        clear,
      ),
    );
  }

  panel.append(el(doc, "h3", {}, "Link the entity"));
  const search = el(doc, "input", {
    type: "search",
    id: "kg-search",
    placeholder: "Search the knowledge graph",
  });
  search.value = span?.surface ?? "";
  const results = el(doc, "ul", { class: "kg-results", id: "kg-results" });
  const go = el(doc, "button", { type: "button", id: "kg-search-go" }, "Search");
  go.addEventListener("click", () => {
    void actions.search(search.value).then((matches) => {
      results.replaceChildren();
      if (matches.length === 0) {
        results.append(el(doc, "li", { class: "empty" }, "No matches."));
      }
      for (const match of matches) {
        const pick = el(
          doc,
          "button",
          { type: "button", class: "kg-pick", "data-entity-id": match.entity_id },
          `${match.canonical_name} (${match.entity_id})`,
        );
        pick.addEventListener("click", () => {
          session.chooseEntity(match.entity_id);
          actions.rerender();
        });
        results.append(el(doc, "li", {}, pick));
      }
    });
  });
  panel.append(el(doc, "div", { class: "search-row" }, search, go), results);
  if (session.draft.entityId !== null) {
    panel.append(
      el(
        doc,
        "p",
        { class: "chosen", "data-entity-id": session.draft.entityId },
        `Linked entity: ${session.draft.entityId}`,
      ),
    );
  }
  return panel;
}

function renderRelationStep(
  doc: Document,
  session: WorkbenchSession,
  actions: WizardActions,
): HTMLElement {
  const panel = el(doc, "div", { class: "panel", id: "step-relation" });
  panel.append(
    el(doc, "h3", {}, "Relation asked about"),
    el(doc, "p", { class: "hint" }, "Leave blank if no catalog relation fits."),
  );
  const input = el(doc, "input", { type: "text", id: "relation-input" });
  input.value = session.draft.relation ?? "";
  input.addEventListener("change", () => {
    const trimmed = input.value.trim();
    session.setRelation(trimmed === "" ? null : trimmed);
    actions.rerender();
  });
  panel.append(input);
  return panel;
}

function renderAnswerStep(
  doc: Document,
  session: WorkbenchSession,
  actions: WizardActions,
): HTMLElement {
  const panel = el(doc, "div", { class: "panel", id: "step-answer" });
  panel.append(el(doc, "h3", {}, "Answer type"));
  const select = el(doc, "select", { id: "answer-type" });
  select.append(el(doc, "option", { value: "" }, "Choose a type"));
  for (const answerType of ANSWER_TYPES) {
    const option = el(doc, "option", { value: answerType }, answerType);
    if (session.draft.answerType === answerType) option.selected = true;
    select.append(option);
  }
  select.addEventListener("change", () => {
    if (select.value !== "") session.setAnswerType(select.value);
    actions.rerender();
  });
  panel.append(select);

  const answerType = session.draft.answerType;
  if (answerType === "Unanswerable") {
    panel.append(
      el(doc, "p", { class: "hint", id: "answer-disabled" }, "No answer for unanswerable queries."),
    );
    return panel;
  }
  if (answerType === null) return panel;

  const kind = KIND_FOR_TYPE[answerType];
  panel.append(el(doc, "h3", {}, "Answer"));
  const current = session.draft.answer;
  const setFromInputs = (value: string, unit?: string) => {
    const trimmed = value.trim();
    if (trimmed === "") {
      session.setAnswer(null);
    } else if (kind === "number" || kind === "number_unit") {
      const num = Number(trimmed);
      if (Number.isNaN(num)) session.setAnswer(null);
      else if (kind === "number_unit")
        session.setAnswer({ kind, value: num, unit: (unit ?? "").trim() });
      else session.setAnswer({ kind, value: num });
    } else if (kind === "boolean") {
      session.setAnswer({ kind, value: trimmed === "yes" });
    } else {
      session.setAnswer({ kind, value: trimmed });
    }
    actions.rerender();
  };

  if (kind === "boolean") {
    for (const option of ["yes", "no"] as const) {
      const input = el(doc, "input", { type: "radio", name: "bool-answer", id: `bool-${option}` });
      input.checked =
        current !== null && current.kind === "boolean" && current.value === (option === "yes");
      input.addEventListener("change", () => setFromInputs(option));
      panel.append(el(doc, "label", { class: "choice", for: `bool-${option}` }, input, option));
    }
    return panel;
  }

  const value = el(doc, "input", {
    type: kind === "number" || kind === "number_unit" ? "number" : "text",
    id: "answer-value",
    placeholder:
      kind === "entity" ? "Entity id, e.g. Q42" : kind === "date" ? "YYYY-MM-DD" : "Answer",
  });
  value.value = current === null ? "" : String(current.value);
  let unit: HTMLInputElement | null = null;
  if (kind === "number_unit") {
    unit = el(doc, "input", { type: "text", id: "answer-unit", placeholder: "Unit" });
    unit.value = current !== null && current.unit !== undefined ? current.unit : "";
  }
  const apply = () => setFromInputs(value.value, unit?.value);
  value.addEventListener("change", apply);
  unit?.addEventListener("change", apply);
  panel.append(value);
  if (unit !== null) panel.append(unit);
  return panel;
}

function renderSubmitted(doc: Document, session: WorkbenchSession): HTMLElement {
  const panel = el(doc, "div", { class: "panel", id: "submitted" });
  panel.append(el(doc, "p", { class: "ok" }, "Submission accepted."));
  const outcome = session.qualificationOutcome();
  if (outcome !== null) {
    panel.append(
      el(doc, "h3", {}, "Exam result"),
      el(
        doc,
        "p",
        {
          class: outcome.passed ? "badge pass" : "badge fail",
          id: "qualification-outcome",
          "data-score": String(outcome.score),
        },
        `${outcome.passed ? "Passed" : "Failed"} with score ${outcome.score.toFixed(2)}`,
      ),
    );
    if (outcome.items.length > 0) {
      const list = el(doc, "ul", { class: "item-verdicts" });
      for (const [queryId, ok] of outcome.items) {
        list.append(
          el(
            doc,
            "li",
            { "data-query-id": queryId, "data-ok": String(ok) },
            `${queryId}: ${ok ? "correct" : "incorrect"}`,
          ),
        );
      }
      panel.append(list);
    }
  }
  return panel;
}
