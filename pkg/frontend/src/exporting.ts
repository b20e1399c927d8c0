// Export buttons. The downloaded file is byte-for-byte what the server sent.

import type { ApiClient } from "./api";

export type Deliver = (filename: string, bytes: Uint8Array, mime: string) => void;

function browserDownload(filename: string, bytes: Uint8Array, mime: string): void {
  const blob = new Blob([bytes.buffer as ArrayBuffer], { type: mime });
  const anchor = document.createElement("a");
  anchor.href = URL.createObjectURL(blob);
  anchor.download = filename;
  anchor.click();
  URL.revokeObjectURL(anchor.href);
}

export class ExportControls {
  readonly element: HTMLElement;

  constructor(
    private readonly api: ApiClient,
    private readonly documentId: () => string,
    private readonly deliver: Deliver = browserDownload,
  ) {
    this.element = document.createElement("div");
    this.element.className = "export-controls";
    this.element.innerHTML = `
      <button type="button" class="export-md">Download Markdown</button>
      <button type="button" class="export-html">Download HTML</button>
      <span class="export-status" role="status"></span>
    `;
    this.element
      .querySelector("button.export-md")!
      .addEventListener("click", () => void this.download("md"));
    this.element
      .querySelector("button.export-html")!
      .addEventListener("click", () => void this.download("html"));
  }

  async download(format: "md" | "html"): Promise<void> {
    const status = this.element.querySelector<HTMLElement>(".export-status")!;
    try {
      const bytes = await this.api.exportPlan(this.documentId(), format);
      this.deliver(`business-plan.${format}`, bytes, format === "md" ? "text/markdown" : "text/html");
      status.textContent = "";
    } catch (error) {
      status.textContent = `Export failed: ${String(error)}`;
    }
  }
}
