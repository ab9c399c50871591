/** Form and history state. Pure data plus transition helpers; no DOM. */

import type { HistoryEntry, ValidationResponse } from "./client.js";

export interface EntryFormState {
  diagnosis: string;
  prescription: string;
  lastResponse: ValidationResponse | null;
  pending: boolean;
  /** id of the request being corrected, when the alert's inline form is open */
  correctionOf: string | null;
  errorMessage: string | null;
}

export function initialFormState(): EntryFormState {
  return {
    diagnosis: "",
    prescription: "",
    lastResponse: null,
    pending: false,
    correctionOf: null,
    errorMessage: null,
  };
}

export function canSubmit(form: EntryFormState): boolean {
  return !form.pending && form.diagnosis.trim() !== "" && form.prescription.trim() !== "";
}

export function beginSubmit(form: EntryFormState): EntryFormState {
  return { ...form, pending: true, errorMessage: null };
}

export function applyResponse(
  form: EntryFormState,
  response: ValidationResponse,
): EntryFormState {
  return {
    ...form,
    pending: false,
    lastResponse: response,
    // an invalid decision opens the correction flow pre-filled with the
    // submitted text; a valid one closes it
    correctionOf: response.valid ? null : response.request_id,
  };
}

export function applyFailure(form: EntryFormState, message: string): EntryFormState {
  // field contents are preserved: only the flags change
  return { ...form, pending: false, errorMessage: message };
}

export interface HistoryItem {
  id: string;
  diagnosis: string;
  prescription: string;
  score: number;
  valid: boolean;
  correctionOf: string | null;
  corrections: HistoryItem[];
}

/** Group corrections under their originals, newest original first. */
export function buildHistoryTree(entries: HistoryEntry[]): HistoryItem[] {
  const items = new Map<string, HistoryItem>();
  for (const e of entries) {
    items.set(e.id, {
      id: e.id,
      diagnosis: e.response.normalized.diagnosis,
      prescription: e.response.normalized.prescription,
      score: e.response.score,
      valid: e.response.valid,
      correctionOf: e.correction_of,
      corrections: [],
    });
  }
  const roots: HistoryItem[] = [];
  for (const e of entries) {
    const item = items.get(e.id)!;
    const parent = e.correction_of ? items.get(e.correction_of) : undefined;
    if (parent) {
      parent.corrections.push(item);
    } else {
      roots.push(item);
    }
  }
  return roots;
}

export const PAGE_SIZE = 20;

export function pageCount(roots: HistoryItem[]): number {
  return Math.max(1, Math.ceil(roots.length / PAGE_SIZE));
}

export function pageSlice(roots: HistoryItem[], page: number): HistoryItem[] {
  const clamped = Math.min(Math.max(page, 0), pageCount(roots) - 1);
  return roots.slice(clamped * PAGE_SIZE, (clamped + 1) * PAGE_SIZE);
}
