// First screen: website URL (or chat answers) plus plan goals. Shows the
// intro video while section progress streams in, then hands off the new
// document id.

import type { ApiClient, GoalInput } from "./api";
import { SECTION_NAMES, type SectionId } from "./types";
import { VoiceButton, type AudioSource } from "./voice";

export class OnboardingView {
  readonly element: HTMLElement;
  private readonly urlInput: HTMLInputElement;
  private readonly goalLabel: HTMLInputElement;
  private readonly goalDetail: HTMLInputElement;
  private readonly startButton: HTMLButtonElement;
  private readonly progress: HTMLUListElement;
  private readonly status: HTMLParagraphElement;

  constructor(
    private readonly api: ApiClient,
    private readonly onReady: (documentId: string) => void,
    audioSource?: AudioSource,
  ) {
    this.element = document.createElement("section");
    this.element.className = "onboarding";
    this.element.innerHTML = `
      <h1>Start your business plan</h1>
      <label>Business website
        <input type="url" name="website" placeholder="https://example.com">
      </label>
      <label>Goal
        <input type="text" name="goal-label" placeholder="e.g. Apply for a loan">
      </label>
      <label>Goal detail
        <input type="text" name="goal-detail" placeholder="optional">
      </label>
      <button type="button" class="start">Generate draft</button>
      <div class="video-slot" hidden>
        <p>While we draft your plan, here is a short introduction:</p>
        <video controls></video>
      </div>
      <ul class="progress"></ul>
      <p class="status" role="status"></p>
    `;
    this.urlInput = this.element.querySelector("input[name=website]")!;
    this.goalLabel = this.element.querySelector("input[name=goal-label]")!;
    this.goalDetail = this.element.querySelector("input[name=goal-detail]")!;
    this.startButton = this.element.querySelector("button.start")!;
    this.progress = this.element.querySelector("ul.progress")!;
    this.status = this.element.querySelector("p.status")!;
    this.startButton.addEventListener("click", () => void this.start());

    const voice = new VoiceButton(api, this.goalLabel, audioSource);
    this.goalLabel.insertAdjacentElement("afterend", voice.element);
  }

  goals(): GoalInput[] {
    const label = this.goalLabel.value.trim();
    if (!label) return [];
    return [{ label, detail: this.goalDetail.value.trim() }];
  }

  async start(): Promise<void> {
    const url = this.urlInput.value.trim();
    if (!url) {
      this.status.textContent = "Enter your website address first.";
      return;
    }
    this.startButton.disabled = true;
    this.progress.innerHTML = "";
    this.status.textContent = "Reading your website…";
    await this.showVideo();
    try {
      let documentId: string | null = null;
      await this.api.onboardWebsite(url, this.goals(), (event) => {
        if (event.name === "section_done") {
          const item = document.createElement("li");
          const sid = event.data.section_id as SectionId;
          item.textContent = `${SECTION_NAMES[sid] ?? sid} drafted`;
          this.progress.appendChild(item);
        } else if (event.name === "draft_ready") {
          documentId = event.data.document_id;
        } else if (event.name === "error") {
          this.status.textContent = `Draft failed: ${event.data.message ?? event.data.error}`;
        }
      });
      if (documentId) this.onReady(documentId);
    } catch (error) {
      this.status.textContent = `Draft failed: ${String(error)}`;
    } finally {
      this.startButton.disabled = false;
    }
  }

  private async showVideo(): Promise<void> {
    try {
      const url = await this.api.videoUrl();
      const slot = this.element.querySelector<HTMLElement>(".video-slot")!;
      if (url) {
        slot.querySelector("video")!.src = url;
        slot.hidden = false;
      }
    } catch {
      // the video is decorative; never block onboarding on it
    }
  }
}
