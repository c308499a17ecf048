/** Browser entry point: a tab bar over the two faces of the app. State
 * lives in plain objects; each action mutates and re-renders. */

import { ApiClient, ApiError } from "./api.js";
import { DashboardView } from "./dashboard.js";
import { el, renderDashboard, renderWizard } from "./render.js";
import type { TaskJson, TaskRowJson } from "./types.js";
import { WorkbenchSession } from "./wizard.js";

const ANNOTATOR_KEY = "workbench.annotator";

interface AppState {
  tab: "dashboard" | "workbench";
  dashboardLoaded: boolean;
  tasks: TaskRowJson[];
  tasksLoaded: boolean;
  taskError: string | null;
  openTask: TaskJson | null;
  session: WorkbenchSession | null;
  annotatorId: string;
}

export function startApp(doc: Document, root: HTMLElement, api: ApiClient): void {
  const storage = window.localStorage;
  const dashboard = new DashboardView(api);
  const state: AppState = {
    tab: "dashboard",
    dashboardLoaded: false,
    tasks: [],
    tasksLoaded: false,
    taskError: null,
    openTask: null,
    session: null,
    annotatorId: storage.getItem(ANNOTATOR_KEY) ?? "grader-1",
  };

  const rerender = () => {
    root.replaceChildren(renderShell());
  };

  const openDashboard = () => {
    state.tab = "dashboard";
    if (!state.dashboardLoaded) {
      state.dashboardLoaded = true;
      void dashboard.init().then(rerender);
    }
    rerender();
  };

  const loadTasks = () => {
    void api
      .listTasks()
      .then((tasks) => {
        state.tasks = tasks;
        state.taskError = null;
      })
      .catch((err) => {
        state.tasks = [];
        state.taskError =
          err instanceof ApiError && err.status === 404
            ? "Annotation tasks are not enabled on this server."
            : String(err instanceof ApiError ? err.detail : err);
      })
      .then(rerender);
  };

  const openWorkbench = () => {
    state.tab = "workbench";
    state.openTask = null;
    state.session = null;
    if (!state.tasksLoaded) {
      state.tasksLoaded = true;
      loadTasks();
    }
    rerender();
  };

  const openTask = (taskId: string) => {
    void api
      .taskDetail(taskId)
      .then((task) => {
        state.openTask = task;
        state.session = null;
        state.taskError = null;
      })
      .catch((err) => {
        state.taskError = String(err instanceof ApiError ? err.detail : err);
      })
      .then(rerender);
  };

  const openQuery = (index: number) => {
    if (state.openTask === null) return;
    state.session = new WorkbenchSession(
      state.openTask,
      index,
      state.annotatorId,
      api,
      storage,
    );
    rerender();
  };

  function renderShell(): HTMLElement {
    const shell = el(doc, "div", { class: "shell" });
    const tabs = el(doc, "nav", { class: "tabs" });
    for (const [tab, label] of [
      ["dashboard", "Dashboard"],
      ["workbench", "Workbench"],
    ] as const) {
      const button = el(
        doc,
        "button",
        { type: "button", class: state.tab === tab ? "tab current" : "tab" },
        label,
      );
      button.addEventListener("click", tab === "dashboard" ? openDashboard : openWorkbench);
      tabs.append(button);
    }
    shell.append(el(doc, "header", {}, el(doc, "h1", {}, "Grader Workbench"), tabs));
    shell.append(
      state.tab === "dashboard"
        ? renderDashboard(doc, dashboard, {
            selectRun: (runId) => void dashboard.selectRun(runId).then(rerender),
            setSlice: (slice) => void dashboard.setSlice(slice).then(rerender),
            setTrendMetric: (metric) => void dashboard.setTrendMetric(metric).then(rerender),
          })
        : renderWorkbenchPane(),
    );
    return shell;
  }

  function renderWorkbenchPane(): HTMLElement {
    const pane = el(doc, "section", { class: "workbench" });
    if (state.session !== null) {
      const back = el(doc, "button", { type: "button", class: "back" }, "Back to task");
      back.addEventListener("click", () => {
        const taskId = state.openTask?.task_id;
        state.session = null;
        if (taskId !== undefined) openTask(taskId);
        else rerender();
      });
      pane.append(
        back,
        renderWizard(doc, state.session, {
          rerender,
          search: (q) => state.session!.searchEntities(q),
        }),
      );
      return pane;
    }
    if (state.openTask !== null) {
      pane.append(renderTaskDetail(state.openTask));
      return pane;
    }
    pane.append(renderTaskList());
    return pane;
  }

  function renderTaskList(): HTMLElement {
    const wrap = el(doc, "div", { class: "task-list" });
    const idInput = el(doc, "input", { type: "text", id: "annotator-id" });
    idInput.value = state.annotatorId;
    idInput.addEventListener("change", () => {
      state.annotatorId = idInput.value.trim() || "grader-1";
      storage.setItem(ANNOTATOR_KEY, state.annotatorId);
    });
    wrap.append(
      el(doc, "div", { class: "controls" }, el(doc, "label", { for: "annotator-id" }, "You are"), idInput),
      el(doc, "h2", {}, "Annotation tasks"),
    );
    if (state.taskError !== null) {
      wrap.append(el(doc, "p", { class: "error", role: "alert" }, state.taskError));
      return wrap;
    }
    if (state.tasks.length === 0) {
      wrap.append(el(doc, "p", { class: "empty" }, "No tasks yet."));
      return wrap;
    }
    const table = el(doc, "table", { class: "task-table" });
    const body = el(doc, "tbody");
    for (const task of state.tasks) {
      const open = el(doc, "button", { type: "button", class: "open-task" }, task.task_id);
      open.addEventListener("click", () => openTask(task.task_id));
      body.append(
        el(
          doc,
          "tr",
          { "data-task-id": task.task_id },
          el(doc, "td", {}, open),
          el(doc, "td", {}, task.kind),
          el(doc, "td", {}, task.status),
          el(doc, "td", { class: "num" }, `${task.query_count} queries`),
          el(doc, "td", { class: "num" }, `quorum ${task.quorum}`),
        ),
      );
    }
    table.append(body);
    wrap.append(el(doc, "div", { class: "scroll-x" }, table));
    return wrap;
  }

  function renderTaskDetail(task: TaskJson): HTMLElement {
    const wrap = el(doc, "div", { class: "task-detail" });
    const back = el(doc, "button", { type: "button", class: "back" }, "All tasks");
    back.addEventListener("click", () => {
      state.openTask = null;
      loadTasks();
    });
    wrap.append(
      back,
      el(doc, "h2", {}, `Task ${task.task_id}`),
      el(doc, "p", {}, `${task.kind}, ${task.status}, quorum ${task.quorum}`),
    );
    const list = el(doc, "ol", { class: "query-list" });
    task.queries.forEach((query, i) => {
      const mine = task.submissions.some(
        (s) => s.query_id === query.query_id && s.annotator_id === state.annotatorId,
      );
      const label = el(
        doc,
        "button",
        { type: "button", class: "open-query", "data-query-id": query.query_id },
        query.text,
      );
      label.disabled = task.status === "closed" || mine;
      label.addEventListener("click", () => openQuery(i));
      list.append(el(doc, "li", {}, label, mine ? " (submitted)" : ""));
    });
    wrap.append(list);
    if (task.status === "closed" && task.agreement !== null) {
      wrap.append(
        el(
          doc,
          "p",
          {
            class: "agreement",
            "data-alpha": task.agreement.alpha === null ? "" : String(task.agreement.alpha),
          },
          `Closed. Agreement alpha: ${
            task.agreement.alpha === null ? "n/a" : task.agreement.alpha.toFixed(2)
          }${task.agreement.flagged ? " (flagged)" : ""}`,
        ),
      );
    }
    return wrap;
  }

  openDashboard();
}

declare global {
  interface Window {
    __workbenchStarted?: boolean;
  }
}

if (typeof document !== "undefined" && !window.__workbenchStarted) {
  const mount = document.getElementById("app");
  if (mount !== null) {
    window.__workbenchStarted = true;
    startApp(document, mount, new ApiClient(""));
  }
}
