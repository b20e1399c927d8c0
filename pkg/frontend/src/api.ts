import { readSse, type SseEvent } from "./sse";
import type {
  ChatFinalWire,
  ExemplarWire,
  ExpertWire,
  PitchPrepWire,
  PlanWire,
  RichTextWire,
} from "./types";

export interface ApiConfig {
  baseUrl: string;
  token: string;
  fetchImpl?: typeof fetch;
}

export interface GoalInput {
  label: string;
  detail?: string;
}

export type ApplyResult =
  | { outcome: "applied"; plan: PlanWire }
  | { outcome: "stale"; head: number }
  | { outcome: "error"; status: number; detail: string };

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: any,
  ) {
    super(`api error ${status}: ${JSON.stringify(body)}`);
  }
}

/** All server traffic goes through here; no other module talks to the network. */
export class ApiClient {
  private readonly fetchImpl: typeof fetch;

  constructor(private readonly config: ApiConfig) {
    this.fetchImpl = config.fetchImpl ?? fetch.bind(globalThis);
  }

  private headers(extra: Record<string, string> = {}): Record<string, string> {
    return { Authorization: `Bearer ${this.config.token}`, ...extra };
  }

  private async request(path: string, init: RequestInit = {}): Promise<Response> {
    return this.fetchImpl(`${this.config.baseUrl}${path}`, init);
  }

  private async json(path: string, init: RequestInit = {}): Promise<any> {
    const response = await this.request(path, init);
    const body = await response.json();
    if (!response.ok) throw new ApiError(response.status, body);
    return body;
  }

  async onboardWebsite(
    url: string,
    goals: GoalInput[],
    onEvent: (event: SseEvent) => void,
  ): Promise<void> {
    const response = await this.request("/onboard/website", {
      method: "POST",
      headers: this.headers({ "Content-Type": "application/json" }),
      body: JSON.stringify({ url, goals }),
    });
    if (response.status !== 202) throw new ApiError(response.status, await response.json());
    await readSse(response, onEvent);
  }

  async onboardChat(
    transcript: { role: string; text: string }[],
    goals: GoalInput[],
    onEvent: (event: SseEvent) => void,
  ): Promise<void> {
    const response = await this.request("/onboard/chat", {
      method: "POST",
      headers: this.headers({ "Content-Type": "application/json" }),
      body: JSON.stringify({ transcript, goals }),
    });
    if (response.status !== 202) throw new ApiError(response.status, await response.json());
    await readSse(response, onEvent);
  }

  async getPlan(documentId: string): Promise<PlanWire> {
    return this.json(`/plans/${documentId}`, { headers: this.headers() });
  }

  async exportPlan(documentId: string, format: "md" | "html"): Promise<Uint8Array> {
    const response = await this.request(`/plans/${documentId}/export?format=${format}`, {
      headers: this.headers(),
    });
    if (!response.ok) throw new ApiError(response.status, await response.json());
    return new Uint8Array(await response.arrayBuffer());
  }

  async chat(
    documentId: string,
    message: string,
    onDelta: (text: string) => void,
    onError: (detail: string) => void,
  ): Promise<ChatFinalWire> {
    const response = await this.request(`/plans/${documentId}/chat`, {
      method: "POST",
      headers: this.headers({ "Content-Type": "application/json" }),
      body: JSON.stringify({ message }),
    });
    if (!response.ok) throw new ApiError(response.status, await response.json());
    let final: ChatFinalWire | null = null;
    await readSse(response, (event) => {
      if (event.name === "delta") onDelta(event.data.text);
      else if (event.name === "error") onError(event.data.message ?? event.data.error);
      else if (event.name === "final") final = event.data;
    });
    if (!final) throw new ApiError(502, { error: "stream ended without final event" });
    return final;
  }

  async applyProposal(documentId: string, proposalId: string): Promise<ApplyResult> {
    const response = await this.request(`/plans/${documentId}/apply`, {
      method: "POST",
      headers: this.headers({ "Content-Type": "application/json" }),
      body: JSON.stringify({ proposal_id: proposalId }),
    });
    const body = await response.json();
    if (response.ok) return { outcome: "applied", plan: body };
    if (response.status === 409) return { outcome: "stale", head: body.head };
    return { outcome: "error", status: response.status, detail: JSON.stringify(body) };
  }

  async editSection(
    documentId: string,
    sectionId: string,
    replacement: RichTextWire,
    changeKind?: string,
  ): Promise<PlanWire> {
    return this.json(`/plans/${documentId}/sections/${sectionId}/edit`, {
      method: "POST",
      headers: this.headers({ "Content-Type": "application/json" }),
      body: JSON.stringify({ replacement, change_kind: changeKind ?? null }),
    });
  }

  async inlineGenerate(
    documentId: string,
    sectionId: string,
    criteria: string,
    cursorBlock = 0,
  ): Promise<{ candidates: RichTextWire[]; exemplars: ExemplarWire[] }> {
    return this.json(`/plans/${documentId}/inline`, {
      method: "POST",
      headers: this.headers({ "Content-Type": "application/json" }),
      body: JSON.stringify({ section_id: sectionId, criteria, cursor_block: cursorBlock }),
    });
  }

  async pitchPrep(documentId: string, goalId: string): Promise<PitchPrepWire> {
    return this.json(`/plans/${documentId}/pitch-prep`, {
      method: "POST",
      headers: this.headers({ "Content-Type": "application/json" }),
      body: JSON.stringify({ goal_id: goalId }),
    });
  }

  async experts(focus?: string): Promise<ExpertWire[]> {
    const query = focus ? `?focus=${encodeURIComponent(focus)}` : "";
    const body = await this.json(`/experts${query}`);
    return body.experts;
  }

  async tooltips(sectionId: string): Promise<string[]> {
    const body = await this.json(`/sections/${sectionId}/tooltips`);
    return body.questions;
  }

  async exemplars(sectionId: string): Promise<ExemplarWire[]> {
    const body = await this.json(`/sections/${sectionId}/exemplars`);
    return body.exemplars;
  }

  async transcribe(audio: Uint8Array, mediaType: string, filename: string): Promise<string> {
    // multipart body built by hand so it works identically in browsers and tests
    const boundary = `----bizplan-${Math.random().toString(36).slice(2)}`;
    const head =
      `--${boundary}\r\n` +
      `Content-Disposition: form-data; name="file"; filename="${filename}"\r\n` +
      `Content-Type: ${mediaType}\r\n\r\n`;
    const tail = `\r\n--${boundary}--\r\n`;
    const encoder = new TextEncoder();
    const headBytes = encoder.encode(head);
    const tailBytes = encoder.encode(tail);
    const body = new Uint8Array(headBytes.length + audio.length + tailBytes.length);
    body.set(headBytes, 0);
    body.set(audio, headBytes.length);
    body.set(tailBytes, headBytes.length + audio.length);
    const response = await this.request("/transcribe", {
      method: "POST",
      headers: this.headers({ "Content-Type": `multipart/form-data; boundary=${boundary}` }),
      body,
    });
    const parsed = await response.json();
    if (!response.ok) throw new ApiError(response.status, parsed);
    return parsed.text;
  }

  async videoUrl(): Promise<string> {
    const body = await this.json("/config/video", { headers: this.headers() });
    return body.video_url;
  }
}
