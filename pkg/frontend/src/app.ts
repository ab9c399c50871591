/** Console controller: wires the form, decision panel, and history list. */

import { ServiceClient } from "./client.js";
import {
  applyFailure,
  applyResponse,
  beginSubmit,
  buildHistoryTree,
  canSubmit,
  EntryFormState,
  initialFormState,
} from "./state.js";
import { renderDecision, renderForm, renderHistory } from "./view.js";

export class ConsoleApp {
  form: EntryFormState = initialFormState();
  page = 0;

  constructor(
    private client: ServiceClient,
    private root: HTMLElement,
  ) {}

  async submit(): Promise<void> {
    if (!canSubmit(this.form)) return;
    this.form = beginSubmit(this.form);
    this.render();
    try {
      const { diagnosis, prescription, correctionOf } = this.form;
      const response = correctionOf
        ? await this.client.correct(diagnosis, prescription, correctionOf)
        : await this.client.validate(diagnosis, prescription);
      this.form = applyResponse(this.form, response);
      await this.refreshHistory();
    } catch (err) {
      this.form = applyFailure(this.form, err instanceof Error ? err.message : String(err));
    }
    this.render();
  }

  setField(name: "diagnosis" | "prescription", value: string): void {
    this.form = { ...this.form, [name]: value };
    this.render();
  }

  private historyRoots: ReturnType<typeof buildHistoryTree> = [];

  async refreshHistory(): Promise<void> {
    const entries = await this.client.history(100);
    this.historyRoots = buildHistoryTree(entries);
  }

  setPage(page: number): void {
    this.page = page;
    this.render();
  }

  render(): void {
    this.root.replaceChildren();
    this.root.appendChild(renderForm(this.form));
    if (this.form.lastResponse) {
      this.root.appendChild(renderDecision(this.form.lastResponse));
    }
    const history = renderHistory(this.historyRoots, this.page);
    history.addEventListener("click", (ev) => {
      const target = ev.target as HTMLElement;
      const page = target.getAttribute("data-page");
      if (page !== null) this.setPage(Number(page));
    });
    this.root.appendChild(history);
    const form = this.root.querySelector("form");
    form?.addEventListener("submit", (ev) => {
      ev.preventDefault();
      void this.submit();
    });
    form?.querySelectorAll("input").forEach((input) => {
      input.addEventListener("input", () => {
        this.form = {
          ...this.form,
          [input.name]: input.value,
        } as EntryFormState;
        const btn = form.querySelector("button[type=submit]") as HTMLButtonElement;
        btn.disabled = !canSubmit(this.form);
      });
    });
  }
}
