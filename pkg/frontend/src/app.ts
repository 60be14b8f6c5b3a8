/** Browser wiring: token chips, candidate panel, undo, and export. */

import { ApiClient, ApiError } from "./api.js";
import { CandidateController } from "./controller.js";
import { AnnotationSession, DEFAULT_K } from "./session.js";

const serviceUrl =
  new URLSearchParams(window.location.search).get("service") ?? "http://127.0.0.1:8750";

const el = {
  sentence: document.getElementById("sentence-input") as HTMLTextAreaElement,
  load: document.getElementById("load-button") as HTMLButtonElement,
  tokens: document.getElementById("token-row") as HTMLDivElement,
  panel: document.getElementById("candidate-panel") as HTMLDivElement,
  banner: document.getElementById("error-banner") as HTMLDivElement,
  undo: document.getElementById("undo-button") as HTMLButtonElement,
  exportBtn: document.getElementById("export-button") as HTMLButtonElement,
  replace: document.getElementById("replace-mode") as HTMLInputElement,
  kInput: document.getElementById("k-input") as HTMLInputElement,
  status: document.getElementById("status-line") as HTMLDivElement,
};

let client = new ApiClient(serviceUrl);
let session: AnnotationSession | null = null;
let controller: CandidateController | null = null;
let anchor: number | null = null; // shift-click extent anchor
let selected: { start: number; end: number } | null = null;

function showBanner(message: string): void {
  el.banner.textContent = message;
  el.banner.style.display = "block";
}

function clearBanner(): void {
  el.banner.style.display = "none";
}

function describeError(error: unknown): string {
  if (error instanceof ApiError) {
    return error.status === 0
      ? `service unreachable at ${serviceUrl}`
      : `service error ${error.status} (${error.code}): ${error.message}`;
  }
  return String(error);
}

function renderTokens(): void {
  if (!session) return;
  const labels = session.labels;
  el.tokens.replaceChildren(
    ...session.tokens.map((token, i) => {
      const chip = document.createElement("button");
      chip.className = "token";
      const label = labels[i];
      if (label !== "O") {
        chip.classList.add(label.startsWith("B-") ? "span-begin" : "span-inside");
        chip.title = label;
      }
      if (selected && i >= selected.start && i < selected.end) chip.classList.add("selected");
      chip.textContent = token;
      chip.addEventListener("click", (event) => onTokenClick(i, event.shiftKey));
      return chip;
    }),
  );
  el.undo.disabled = !session.canUndo;
  el.status.textContent = `${session.spans.length} span(s); k=${session.k}`;
}

async function onTokenClick(index: number, extend: boolean): Promise<void> {
  if (!session || !controller) return;
  clearBanner();
  if (extend && anchor !== null) {
    selected = { start: Math.min(anchor, index), end: Math.max(anchor, index) + 1 };
  } else {
    anchor = index;
    selected = { start: index, end: index + 1 };
  }
  renderTokens();
  try {
    const panel = await controller.requestCandidates(index);
    if (panel) renderCandidates(panel.index, panel.candidates, panel.policyView, panel.fromCache);
  } catch (error) {
    showBanner(describeError(error)); // session state untouched
  }
}

function renderCandidates(
  index: number,
  candidates: { tag: string; probability: number }[],
  policyView: string,
  fromCache: boolean,
): void {
  if (!session) return;
  const header = document.createElement("div");
  header.className = "panel-header";
  header.textContent =
    `token ${index} (“${session.tokens[index]}” → ${policyView})` + (fromCache ? " · cached" : "");
  const rows = candidates.map((candidate) => {
    const row = document.createElement("button");
    row.className = "candidate";
    const prob = document.createElement("span");
    prob.className = "prob";
    prob.textContent = candidate.probability.toFixed(4);
    row.append(candidate.tag, prob);
    row.addEventListener("click", () => onAccept(candidate.tag));
    return row;
  });
  el.panel.replaceChildren(header, ...rows);
}

function onAccept(tag: string): void {
  if (!session || !selected) return;
  const result = session.acceptTag(
    selected.start,
    tag,
    selected.end - selected.start,
    el.replace.checked,
  );
  if (!result.ok) {
    showBanner(result.warning ?? "could not apply tag");
    return;
  }
  clearBanner();
  renderTokens();
}

function onLoad(): void {
  const words = el.sentence.value.trim().split(/\s+/).filter(Boolean);
  if (words.length === 0) {
    showBanner("enter a sentence first");
    return;
  }
  session = new AnnotationSession(words);
  session.k = Math.max(1, Number(el.kInput.value) || DEFAULT_K);
  controller = new CandidateController(client, session);
  anchor = null;
  selected = null;
  el.panel.replaceChildren();
  clearBanner();
  controller.syncFingerprint().catch((error) => showBanner(describeError(error)));
  renderTokens();
}

function onExport(): void {
  if (!session) return;
  const record = session.exportRecord() + "\n";
  const blob = new Blob([record], { type: "application/jsonl" });
  const link = document.createElement("a");
  link.href = URL.createObjectURL(blob);
  link.download = "annotations.jsonl";
  link.click();
  URL.revokeObjectURL(link.href);
  session.dirty = false;
}

el.load.addEventListener("click", onLoad);
el.undo.addEventListener("click", () => {
  if (session?.undo()) {
    clearBanner();
    renderTokens();
  }
});
el.exportBtn.addEventListener("click", onExport);
el.kInput.value = String(DEFAULT_K);
el.kInput.addEventListener("change", () => {
  if (session) session.k = Math.max(1, Number(el.kInput.value) || DEFAULT_K);
});

client
  .health()
  .then((health) => {
    el.status.textContent = `service ok · model ${health.model_fingerprint.slice(0, 12)}…`;
  })
  .catch((error) => showBanner(describeError(error)));
