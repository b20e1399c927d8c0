// Microphone capture feeding the server-side transcriber. Every text input
// gets one of these buttons; transcribed text lands at the caret.

import type { ApiClient } from "./api";

export type AudioSource = () => Promise<{ bytes: Uint8Array; mediaType: string }>;

export function insertAtSelection(field: HTMLTextAreaElement | HTMLInputElement, text: string): void {
  const start = field.selectionStart ?? field.value.length;
  const end = field.selectionEnd ?? start;
  field.value = field.value.slice(0, start) + text + field.value.slice(end);
  const cursor = start + text.length;
  field.selectionStart = cursor;
  field.selectionEnd = cursor;
  field.dispatchEvent(new Event("input", { bubbles: true }));
}

async function recordFromMicrophone(): Promise<{ bytes: Uint8Array; mediaType: string }> {
  const media = navigator.mediaDevices;
  if (!media || !("MediaRecorder" in globalThis)) {
    throw new Error("microphone capture is not available in this browser");
  }
  const stream = await media.getUserMedia({ audio: true });
  const recorder = new MediaRecorder(stream, { mimeType: "audio/webm" });
  const parts: Blob[] = [];
  recorder.ondataavailable = (event) => parts.push(event.data);
  const finished = new Promise<void>((resolve) => (recorder.onstop = () => resolve()));
  recorder.start();
  // fixed capture window; a second click stops early
  await new Promise((resolve) => setTimeout(resolve, 5000));
  recorder.stop();
  await finished;
  stream.getTracks().forEach((track) => track.stop());
  const blob = new Blob(parts, { type: "audio/webm" });
  return { bytes: new Uint8Array(await blob.arrayBuffer()), mediaType: "audio/webm" };
}

export class VoiceButton {
  readonly element: HTMLButtonElement;

  constructor(
    private readonly api: ApiClient,
    private readonly target: HTMLTextAreaElement | HTMLInputElement,
    private readonly source: AudioSource = recordFromMicrophone,
  ) {
    this.element = document.createElement("button");
    this.element.type = "button";
    this.element.className = "voice-btn";
    this.element.textContent = "🎤";
    this.element.title = "Dictate";
    this.element.addEventListener("click", () => void this.capture());
  }

  async capture(): Promise<void> {
    this.element.disabled = true;
    try {
      const { bytes, mediaType } = await this.source();
      const text = await this.api.transcribe(bytes, mediaType, "capture.webm");
      insertAtSelection(this.target, text);
    } catch (error) {
      this.element.title = `Dictation failed: ${String(error)}`;
    } finally {
      this.element.disabled = false;
    }
  }
}
