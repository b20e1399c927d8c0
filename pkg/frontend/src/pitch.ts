// Pitch preparation: questions an investor or grant committee would ask,
// generated per goal. A staleness badge appears once the plan moves past
// the revision the questions were generated from.

import type { ApiClient } from "./api";
import type { PitchPrepWire, PlanWire } from "./types";

export class PitchView {
  readonly element: HTMLElement;
  private prep: PitchPrepWire | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly currentPlan: () => PlanWire,
  ) {
    this.element = document.createElement("section");
    this.element.className = "pitch";
    this.element.innerHTML = `
      <h2>Prepare to pitch</h2>
      <label>Goal <select class="goal"></select></label>
      <button type="button" class="generate">Generate questions</button>
      <span class="stale-badge" hidden>Plan has changed since these were generated</span>
      <ol class="questions"></ol>
      <p class="pitch-status" role="status"></p>
    `;
    this.element
      .querySelector("button.generate")!
      .addEventListener("click", () => void this.generate());
  }

  render(plan: PlanWire): void {
    const select = this.element.querySelector<HTMLSelectElement>("select.goal")!;
    const previous = select.value;
    select.innerHTML = "";
    for (const goal of plan.goals) {
      const option = document.createElement("option");
      option.value = goal.id;
      option.textContent = goal.detail ? `${goal.label} (${goal.detail})` : goal.label;
      select.appendChild(option);
    }
    if (previous) select.value = previous;
    this.refreshBadge();
  }

  refreshBadge(): void {
    const badge = this.element.querySelector<HTMLElement>(".stale-badge")!;
    badge.hidden = !this.prep || this.currentPlan().head <= this.prep.head_at_generation;
  }

  async generate(): Promise<void> {
    const select = this.element.querySelector<HTMLSelectElement>("select.goal")!;
    const status = this.element.querySelector<HTMLElement>(".pitch-status")!;
    const list = this.element.querySelector<HTMLOListElement>("ol.questions")!;
    if (!select.value) return;
    status.textContent = "Thinking about hard questions…";
    try {
      this.prep = await this.api.pitchPrep(this.currentPlan().document_id, select.value);
      list.innerHTML = "";
      for (const question of this.prep.questions) {
        const item = document.createElement("li");
        item.textContent = question;
        list.appendChild(item);
      }
      status.textContent = `Generated at ${this.prep.generated_at}.`;
      this.refreshBadge();
    } catch (error) {
      status.textContent = `Could not generate questions: ${String(error)}`;
    }
  }
}
