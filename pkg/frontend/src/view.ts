/** DOM rendering. Decisions come verbatim from the response payload; nothing
 * here re-applies a threshold. */

import type { ValidationResponse } from "./client.js";
import type { EntryFormState, HistoryItem } from "./state.js";
import { pageCount, pageSlice } from "./state.js";

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderDecision(response: ValidationResponse): HTMLElement {
  const score = response.score.toFixed(2);
  if (response.valid) {
    const panel = el("div", "decision decision-valid");
    panel.appendChild(el("p", "decision-line", `Prescription accepted (score ${score})`));
    return panel;
  }
  const banner = el("div", "decision alert-banner");
  banner.setAttribute("role", "alert");
  banner.appendChild(el("p", "decision-line", `Possible prescription error (score ${score})`));
  const ents = response.entities;
  const parts = [
    `medications: ${ents.medications.join(", ") || "none"}`,
    `dosages: ${ents.dosages.join(", ") || "none"}`,
    `usages: ${ents.usages.join(", ") || "none"}`,
  ];
  banner.appendChild(el("p", "entities", parts.join(" | ")));
  const correct = el("button", "correct-button", "Correct and resubmit");
  correct.setAttribute("type", "button");
  banner.appendChild(correct);
  return banner;
}

export function renderForm(form: EntryFormState): HTMLElement {
  const root = el("form", "entry-form");
  const dx = document.createElement("input");
  dx.name = "diagnosis";
  dx.value = form.diagnosis;
  const rx = document.createElement("input");
  rx.name = "prescription";
  rx.value = form.prescription;
  const submit = document.createElement("button");
  submit.type = "submit";
  submit.textContent = form.correctionOf ? "Resubmit correction" : "Check prescription";
  submit.disabled =
    form.pending || form.diagnosis.trim() === "" || form.prescription.trim() === "";
  root.append(dx, rx, submit);
  if (form.errorMessage) {
    root.appendChild(el("p", "error-toast", form.errorMessage));
  }
  return root;
}

function renderItem(item: HistoryItem, nested: boolean): HTMLElement {
  const row = el("li", nested ? "history-item nested" : "history-item");
  const verdict = item.valid ? "valid" : "invalid";
  row.appendChild(
    el(
      "span",
      `verdict verdict-${verdict}`,
      `${item.prescription} / ${item.diagnosis}: ${verdict} (${item.score.toFixed(2)})`,
    ),
  );
  if (item.corrections.length > 0) {
    const sub = el("ul", "corrections");
    for (const c of item.corrections) sub.appendChild(renderItem(c, true));
    row.appendChild(sub);
  }
  return row;
}

export function renderHistory(roots: HistoryItem[], page: number): HTMLElement {
  const container = el("section", "history");
  if (roots.length === 0) {
    container.appendChild(el("p", "empty-state", "No submissions yet."));
    return container;
  }
  const list = el("ul", "history-list");
  for (const item of pageSlice(roots, page)) {
    list.appendChild(renderItem(item, false));
  }
  container.appendChild(list);
  const pages = pageCount(roots);
  if (pages > 1) {
    const nav = el("nav", "pagination");
    for (let i = 0; i < pages; i++) {
      const btn = el("button", i === page ? "page current" : "page", String(i + 1));
      btn.setAttribute("data-page", String(i));
      nav.appendChild(btn);
    }
    container.appendChild(nav);
  }
  return container;
}
