// Application shell: onboarding first, then the two-pane workspace
// (editor left, chat right) with pitch prep and export along the top.

import { ApiClient, type ApiConfig } from "./api";
import { ChatPanel } from "./chat";
import { EditorView } from "./editor";
import { ExportControls, type Deliver } from "./exporting";
import { OnboardingView } from "./onboarding";
import { PitchView } from "./pitch";
import type { PlanWire } from "./types";
import type { AudioSource } from "./voice";

export interface AppOptions {
  audioSource?: AudioSource;
  deliver?: Deliver;
}

export class App {
  readonly api: ApiClient;
  readonly root: HTMLElement;
  plan: PlanWire | null = null;
  editor: EditorView | null = null;
  chat: ChatPanel | null = null;
  pitch: PitchView | null = null;
  exports: ExportControls | null = null;

  constructor(root: HTMLElement, config: ApiConfig, private readonly options: AppOptions = {}) {
    this.root = root;
    this.api = new ApiClient(config);
  }

  start(): void {
    const onboarding = new OnboardingView(
      this.api,
      (documentId) => void this.openWorkspace(documentId),
      this.options.audioSource,
    );
    this.root.innerHTML = "";
    this.root.appendChild(onboarding.element);
  }

  async openWorkspace(documentId: string): Promise<void> {
    this.plan = await this.api.getPlan(documentId);

    this.editor = new EditorView(this.api, (plan) => this.setPlan(plan), this.options.audioSource);
    this.chat = new ChatPanel(
      this.api,
      documentId,
      (plan) => this.setPlan(plan),
      this.options.audioSource,
    );
    this.pitch = new PitchView(this.api, () => this.plan!);
    this.exports = new ExportControls(this.api, () => documentId, this.options.deliver);

    const workspace = document.createElement("main");
    workspace.className = "workspace";
    const toolbar = document.createElement("nav");
    toolbar.className = "toolbar";
    toolbar.appendChild(this.exports.element);
    const panes = document.createElement("div");
    panes.className = "panes";
    panes.append(this.editor.element, this.chat.element);
    workspace.append(toolbar, panes, this.pitch.element);

    this.root.innerHTML = "";
    this.root.appendChild(workspace);
    this.setPlan(this.plan);
  }

  setPlan(plan: PlanWire): void {
    this.plan = plan;
    this.editor?.render(plan);
    this.pitch?.render(plan);
  }
}

export function bootApp(root: HTMLElement, config: ApiConfig, options: AppOptions = {}): App {
  const app = new App(root, config, options);
  app.start();
  return app;
}

// browser entry point; tests construct App directly
const mount = typeof document !== "undefined" ? document.getElementById("bizplan-root") : null;
if (mount) {
  const params = new URLSearchParams(window.location.search);
  bootApp(mount, {
    baseUrl: params.get("api") ?? "http://127.0.0.1:8000",
    token: params.get("token") ?? "",
  });
}
