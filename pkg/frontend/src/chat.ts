// Chat panel: streams the assistant reply, then renders exactly the two
// suggestion chips the server sent plus one card per proposal. A chip click
// sends the chip's text verbatim. Apply hitting a moved head (409) shows a
// refresh affordance that reloads the plan and regenerates the proposal.

import type { ApiClient } from "./api";
import * as markup from "./markup";
import { SECTION_NAMES, type PlanWire, type ProposalWire, type SectionId } from "./types";
import { VoiceButton, type AudioSource } from "./voice";

export class ChatPanel {
  readonly element: HTMLElement;
  readonly input: HTMLInputElement;
  private readonly sendButton: HTMLButtonElement;
  private readonly log: HTMLElement;
  private readonly chipRow: HTMLElement;
  private busy = false;

  constructor(
    private readonly api: ApiClient,
    private readonly documentId: string,
    private readonly onPlanUpdate: (plan: PlanWire) => void,
    audioSource?: AudioSource,
  ) {
    this.element = document.createElement("aside");
    this.element.className = "chat";
    this.element.innerHTML = `
      <h2>Assistant</h2>
      <div class="chat-log"></div>
      <div class="chips"></div>
      <div class="chat-compose">
        <input type="text" placeholder="Ask about your plan…">
        <button type="button" class="send">Send</button>
      </div>
    `;
    this.log = this.element.querySelector(".chat-log")!;
    this.chipRow = this.element.querySelector(".chips")!;
    this.input = this.element.querySelector("input")!;
    this.sendButton = this.element.querySelector("button.send")!;
    this.sendButton.addEventListener("click", () => void this.sendFromInput());
    this.input.addEventListener("keydown", (event) => {
      if (event.key === "Enter") void this.sendFromInput();
    });
    const voice = new VoiceButton(api, this.input, audioSource);
    this.element.querySelector(".chat-compose")!.appendChild(voice.element);
  }

  private bubble(role: "user" | "assistant", text: string): HTMLElement {
    const el = document.createElement("div");
    el.className = `msg ${role}`;
    el.textContent = text;
    this.log.appendChild(el);
    this.log.scrollTop = this.log.scrollHeight;
    return el;
  }

  private async sendFromInput(): Promise<void> {
    const text = this.input.value.trim();
    if (!text) return;
    this.input.value = "";
    await this.send(text);
  }

  async send(message: string): Promise<void> {
    if (this.busy) return;
    this.busy = true;
    this.sendButton.disabled = true;
    this.chipRow.innerHTML = "";
    this.bubble("user", message);
    const reply = this.bubble("assistant", "");
    try {
      const final = await this.api.chat(
        this.documentId,
        message,
        (delta) => {
          reply.textContent += delta;
        },
        (detail) => {
          reply.classList.add("failed");
          reply.textContent = `The assistant is unavailable right now (${detail}).`;
        },
      );
      if (!reply.classList.contains("failed")) reply.textContent = final.reply;
      this.renderChips(final.suggestions);
      for (const proposal of final.proposals) this.renderProposal(proposal, message);
    } catch (error) {
      reply.classList.add("failed");
      reply.textContent = `Chat failed: ${String(error)}`;
    } finally {
      this.busy = false;
      this.sendButton.disabled = false;
    }
  }

  private renderChips(suggestions: { kind: string; text: string }[]): void {
    this.chipRow.innerHTML = "";
    for (const suggestion of suggestions) {
      const chip = document.createElement("button");
      chip.type = "button";
      chip.className = `chip ${suggestion.kind}`;
      chip.textContent = suggestion.text;
      chip.addEventListener("click", () => void this.send(suggestion.text));
      this.chipRow.appendChild(chip);
    }
  }

  private renderProposal(proposal: ProposalWire, originalMessage: string): void {
    const card = document.createElement("div");
    card.className = "proposal-card";
    const name = SECTION_NAMES[proposal.target_section as SectionId] ?? proposal.target_section;
    const heading = document.createElement("h3");
    heading.textContent = `Suggested update: ${name}`;
    const rationale = document.createElement("p");
    rationale.className = "rationale";
    rationale.textContent = proposal.rationale;
    const preview = document.createElement("pre");
    preview.textContent = markup.render(proposal.replacement);
    const apply = document.createElement("button");
    apply.type = "button";
    apply.className = "apply";
    apply.textContent = "Apply to plan";
    const status = document.createElement("p");
    status.className = "apply-status";
    apply.addEventListener("click", () => void this.apply(proposal, card, apply, status, originalMessage));
    card.append(heading, rationale, preview, apply, status);
    this.log.appendChild(card);
  }

  private async apply(
    proposal: ProposalWire,
    card: HTMLElement,
    button: HTMLButtonElement,
    status: HTMLElement,
    originalMessage: string,
  ): Promise<void> {
    button.disabled = true;
    const result = await this.api.applyProposal(this.documentId, proposal.proposal_id);
    if (result.outcome === "applied") {
      status.textContent = "Applied.";
      card.classList.add("applied");
      this.onPlanUpdate(result.plan);
      return;
    }
    if (result.outcome === "stale") {
      status.textContent = `The plan changed since this was suggested (now at revision ${result.head}).`;
      const refresh = document.createElement("button");
      refresh.type = "button";
      refresh.className = "refresh";
      refresh.textContent = "Refresh and regenerate";
      refresh.addEventListener("click", async () => {
        refresh.disabled = true;
        this.onPlanUpdate(await this.api.getPlan(this.documentId));
        await this.send(originalMessage);
      });
      status.appendChild(refresh);
      return;
    }
    status.textContent = `Apply failed: ${result.detail}`;
    button.disabled = false;
  }
}
