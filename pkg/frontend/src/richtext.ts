// Client-side copy of the constrained block model and its normal form.
// Must accept exactly what the server accepts, nothing more.

import type { BlockWire, InlineWire, Mark, RichTextWire } from "./types";

const MARK_ORDER: Mark[] = ["bold", "italic"];

export function inline(text: string, marks: Mark[] = []): InlineWire {
  // canonical mark order keeps wire comparisons stable
  return { text, marks: MARK_ORDER.filter((m) => marks.includes(m)) };
}

function sameMarks(a: Mark[], b: Mark[]): boolean {
  return a.length === b.length && a.every((m, i) => m === b[i]);
}

function normalizeInlines(runs: InlineWire[], stripEdges: boolean): InlineWire[] {
  const merged: InlineWire[] = [];
  for (const run of runs) {
    if (run.text === "") continue;
    const last = merged[merged.length - 1];
    if (last && sameMarks(last.marks, run.marks)) {
      merged[merged.length - 1] = { text: last.text + run.text, marks: last.marks };
    } else {
      merged.push({ text: run.text, marks: [...run.marks] });
    }
  }
  if (stripEdges) {
    while (merged.length) {
      const stripped = merged[0].text.replace(/^\s+/, "");
      if (stripped) {
        merged[0] = { text: stripped, marks: merged[0].marks };
        break;
      }
      merged.shift();
    }
    while (merged.length) {
      const stripped = merged[merged.length - 1].text.replace(/\s+$/, "");
      if (stripped) {
        merged[merged.length - 1] = { text: stripped, marks: merged[merged.length - 1].marks };
        break;
      }
      merged.pop();
    }
    if (merged.length) return normalizeInlines(merged, false);
  }
  return merged;
}

export function normalize(rt: RichTextWire): RichTextWire {
  const blocks: BlockWire[] = [];
  for (const block of rt.blocks) {
    if (block.type === "bullet_list") {
      const items = block.items
        .map((item) => normalizeInlines(item, true))
        .filter((item) => item.length > 0);
      if (items.length) blocks.push({ type: "bullet_list", items });
      continue;
    }
    const inlines = normalizeInlines(block.inlines, true);
    if (!inlines.length) continue;
    if (block.type === "heading") {
      blocks.push({ type: "heading", level: block.level, inlines });
    } else {
      blocks.push({ type: "paragraph", inlines });
    }
  }
  return { blocks };
}

export function plainText(rt: RichTextWire): string {
  const lines: string[] = [];
  for (const block of rt.blocks) {
    if (block.type === "bullet_list") {
      for (const item of block.items) lines.push(item.map((r) => r.text).join(""));
    } else {
      lines.push(block.inlines.map((r) => r.text).join(""));
    }
  }
  return lines.join("\n");
}

export function emptyDoc(): RichTextWire {
  return { blocks: [] };
}
