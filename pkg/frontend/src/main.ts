import { ApiClient, ApiError } from "./api.js";
import { renderCaseView, renderEvalDashboard } from "./view.js";

const params = new URLSearchParams(window.location.search);
const api = new ApiClient(params.get("api") ?? "");

const caseRoot = document.getElementById("case-root")!;
const evalRoot = document.getElementById("eval-root")!;
const uploadInput = document.getElementById("upload") as HTMLInputElement;
const evalForm = document.getElementById("eval-form") as HTMLFormElement;

let currentCaseId: string | null = null;

async function refresh(): Promise<void> {
  if (!currentCaseId) return;
  const report = await api.getReport(currentCaseId);
  caseRoot.innerHTML = renderCaseView(report, api.imageUrl(currentCaseId));
}

uploadInput.addEventListener("change", async () => {
  const file = uploadInput.files?.[0];
  if (!file) return;
  try {
    const created = await api.createCase(await file.arrayBuffer());
    currentCaseId = created.id;
    await refresh();
  } catch (err) {
    caseRoot.innerHTML = `<div class="error" role="alert">${err instanceof ApiError ? err.message : "Upload failed"}</div>`;
  }
});

// Every transition goes through the documented endpoints; the buttons exist
// only when the server listed the action as legal, so a 409 here means the
// view is stale — refresh either way.
caseRoot.addEventListener("click", async (event) => {
  const target = event.target as HTMLElement;
  const action = target.dataset.action;
  if (target.dataset.retry) {
    await refresh();
    return;
  }
  if (!action || !currentCaseId) return;
  try {
    await api.performAction(currentCaseId, action);
  } catch (err) {
    if (!(err instanceof ApiError && err.status === 409)) throw err;
  }
  await refresh();
});

evalForm.addEventListener("submit", async (event) => {
  event.preventDefault();
  const corpus = (document.getElementById("corpus") as HTMLInputElement).value;
  const reviews = (document.getElementById("reviews") as HTMLInputElement).value;
  const run = await api.startEvalRun(corpus, reviews || undefined);
  const poll = async (): Promise<void> => {
    const state = await api.getEvalRun(run.run_id);
    evalRoot.innerHTML = renderEvalDashboard(state);
    if (state.status === "running") setTimeout(poll, 500);
  };
  await poll();
});
