// Section-by-section plan editor. Each section is edited as markup text and
// saved through the manual-edit endpoint, so the client can only ever send
// states the block model accepts. Tool-tip questions, the exemplar panel,
// and the inline-generation popover hang off each section card.

import type { ApiClient } from "./api";
import * as markup from "./markup";
import { SECTION_NAMES, type PlanWire, type SectionId, type SectionWire } from "./types";
import { VoiceButton, type AudioSource } from "./voice";

export class EditorView {
  readonly element: HTMLElement;
  private plan: PlanWire | null = null;
  private readonly cards = new Map<string, SectionCard>();

  constructor(
    private readonly api: ApiClient,
    private readonly onPlanUpdate: (plan: PlanWire) => void,
    private readonly audioSource?: AudioSource,
  ) {
    this.element = document.createElement("section");
    this.element.className = "editor";
  }

  render(plan: PlanWire): void {
    this.plan = plan;
    if (!this.cards.size) {
      this.element.innerHTML = `<h1>${plan.context.business_name}</h1>`;
      for (const section of plan.sections) {
        const card = new SectionCard(
          this.api,
          plan.document_id,
          section.section_id as SectionId,
          (updated) => this.onPlanUpdate(updated),
          this.audioSource,
        );
        this.cards.set(section.section_id, card);
        this.element.appendChild(card.element);
      }
    }
    for (const section of plan.sections) {
      this.cards.get(section.section_id)?.update(section);
    }
  }

  card(sectionId: string): SectionCard | undefined {
    return this.cards.get(sectionId);
  }

  head(): number {
    return this.plan?.head ?? 0;
  }
}

class SectionCard {
  readonly element: HTMLElement;
  readonly textarea: HTMLTextAreaElement;
  private readonly saveButton: HTMLButtonElement;
  private readonly meter: HTMLElement;
  private tooltipsLoaded = false;

  constructor(
    private readonly api: ApiClient,
    private readonly documentId: string,
    readonly sectionId: SectionId,
    private readonly onSaved: (plan: PlanWire) => void,
    audioSource?: AudioSource,
  ) {
    this.element = document.createElement("article");
    this.element.className = "section-card";
    this.element.dataset.section = sectionId;
    this.element.innerHTML = `
      <header>
        <h2>${SECTION_NAMES[sectionId]}</h2>
        <span class="completeness"></span>
      </header>
      <ul class="tooltips" hidden></ul>
      <textarea rows="10" spellcheck="false"></textarea>
      <div class="section-actions">
        <button type="button" class="save">Save section</button>
        <button type="button" class="show-tips">Guiding questions</button>
        <button type="button" class="show-exemplars">Examples</button>
        <button type="button" class="inline-open">Generate text…</button>
      </div>
      <div class="exemplar-panel" hidden></div>
      <div class="inline-popover" hidden>
        <input type="text" class="criteria" placeholder="What should this text cover?">
        <button type="button" class="inline-run">Suggest</button>
        <div class="candidates"></div>
      </div>
      <p class="save-status" role="status"></p>
    `;
    this.textarea = this.element.querySelector("textarea")!;
    this.saveButton = this.element.querySelector("button.save")!;
    this.meter = this.element.querySelector(".completeness")!;

    this.saveButton.addEventListener("click", () => void this.save());
    this.element
      .querySelector("button.show-tips")!
      .addEventListener("click", () => void this.toggleTooltips());
    this.element
      .querySelector("button.show-exemplars")!
      .addEventListener("click", () => void this.toggleExemplars());
    this.element
      .querySelector("button.inline-open")!
      .addEventListener("click", () => this.togglePopover());
    this.element
      .querySelector("button.inline-run")!
      .addEventListener("click", () => void this.runInline());

    const voice = new VoiceButton(api, this.textarea, audioSource);
    this.element.querySelector(".section-actions")!.appendChild(voice.element);
  }

  update(section: SectionWire): void {
    this.textarea.value = markup.render(section.content);
    this.meter.textContent = `${Math.round(section.completeness * 100)}% complete`;
  }

  async save(): Promise<void> {
    this.saveButton.disabled = true;
    const status = this.element.querySelector(".save-status")!;
    try {
      const plan = await this.api.editSection(
        this.documentId,
        this.sectionId,
        markup.parse(this.textarea.value),
      );
      status.textContent = "Saved.";
      this.onSaved(plan);
    } catch (error) {
      status.textContent = `Save failed: ${String(error)}`;
    } finally {
      this.saveButton.disabled = false;
    }
  }

  private async toggleTooltips(): Promise<void> {
    const list = this.element.querySelector<HTMLUListElement>("ul.tooltips")!;
    if (!this.tooltipsLoaded) {
      const questions = await this.api.tooltips(this.sectionId);
      list.innerHTML = questions.map((q) => `<li>${q}</li>`).join("");
      this.tooltipsLoaded = true;
    }
    list.hidden = !list.hidden;
  }

  private async toggleExemplars(): Promise<void> {
    const panel = this.element.querySelector<HTMLElement>(".exemplar-panel")!;
    if (!panel.childElementCount) {
      const exemplars = await this.api.exemplars(this.sectionId);
      for (const exemplar of exemplars) {
        const entry = document.createElement("blockquote");
        entry.className = "exemplar";
        const title = document.createElement("strong");
        title.textContent = exemplar.title;
        const body = document.createElement("p");
        body.textContent = exemplar.body;
        entry.append(title, body);
        panel.appendChild(entry);
      }
    }
    panel.hidden = !panel.hidden;
  }

  private togglePopover(): void {
    const popover = this.element.querySelector<HTMLElement>(".inline-popover")!;
    popover.hidden = !popover.hidden;
  }

  private async runInline(): Promise<void> {
    const popover = this.element.querySelector<HTMLElement>(".inline-popover")!;
    const criteria = popover.querySelector<HTMLInputElement>("input.criteria")!.value.trim();
    const host = popover.querySelector<HTMLElement>(".candidates")!;
    if (!criteria) return;
    host.textContent = "Generating…";
    try {
      const { candidates } = await this.api.inlineGenerate(this.documentId, this.sectionId, criteria);
      host.innerHTML = "";
      for (const candidate of candidates) {
        const row = document.createElement("div");
        row.className = "candidate";
        const preview = document.createElement("pre");
        preview.textContent = markup.render(candidate);
        const insert = document.createElement("button");
        insert.type = "button";
        insert.textContent = "Insert";
        insert.addEventListener("click", () => {
          const current = this.textarea.value.trimEnd();
          this.textarea.value = current
            ? `${current}\n\n${markup.render(candidate)}`
            : markup.render(candidate);
        });
        row.append(preview, insert);
        host.appendChild(row);
      }
    } catch (error) {
      host.textContent = `Generation failed: ${String(error)}`;
    }
  }
}
