// Text codec for the block model, byte-compatible with the server's dialect:
// #/##/### headings, "- " bullets, blank-line separated paragraphs,
// *italic* / **bold** / ***both***, backslash escapes. parse() is total and
// always returns normal form; render(parse(text)) is stable.

import { normalize } from "./richtext";
import type { BlockWire, InlineWire, Mark, RichTextWire } from "./types";

const HEADING_RE = /^(#{1,3})\s+(.*)$/;

function escapeText(text: string): string {
  return text.replace(/\\/g, "\\\\").replace(/\*/g, "\\*");
}

function markStars(marks: Mark[]): number {
  return (marks.includes("bold") ? 2 : 0) + (marks.includes("italic") ? 1 : 0);
}

function renderInlines(inlines: InlineWire[]): string {
  const out: string[] = [];
  let prev: Mark[] = [];
  for (const run of inlines) {
    out.push("*".repeat(markStars(prev) + markStars(run.marks)));
    out.push(escapeText(run.text));
    prev = run.marks;
  }
  out.push("*".repeat(markStars(prev)));
  return out.join("");
}

function renderParagraphLine(inlines: InlineWire[]): string {
  const line = renderInlines(inlines);
  // keep paragraph text from being reparsed as a heading or bullet
  if (line.startsWith("#") || line.startsWith("-")) return "\\" + line;
  return line;
}

export function render(rt: RichTextWire): string {
  const chunks: string[] = [];
  for (const block of normalize(rt).blocks) {
    if (block.type === "heading") {
      chunks.push("#".repeat(block.level) + " " + renderInlines(block.inlines));
    } else if (block.type === "paragraph") {
      chunks.push(renderParagraphLine(block.inlines));
    } else {
      chunks.push(block.items.map((item) => "- " + renderInlines(item)).join("\n"));
    }
  }
  return chunks.join("\n\n");
}

function parseInlines(text: string): InlineWire[] {
  const runs: InlineWire[] = [];
  let buf = "";
  let bold = false;
  let italic = false;

  const flush = () => {
    if (!buf) return;
    const marks: Mark[] = [];
    if (bold) marks.push("bold");
    if (italic) marks.push("italic");
    runs.push({ text: buf, marks });
    buf = "";
  };

  let i = 0;
  while (i < text.length) {
    const ch = text[i];
    if (ch === "\\") {
      if (i + 1 < text.length) {
        buf += text[i + 1];
        i += 2;
      } else {
        buf += "\\";
        i += 1;
      }
    } else if (ch === "*") {
      let n = 0;
      while (i + n < text.length && text[i + n] === "*") n += 1;
      flush();
      const openCount = (bold ? 2 : 0) + (italic ? 1 : 0);
      if (n >= openCount) {
        const opened = Math.min(n - openCount, 3);
        bold = opened >= 2;
        italic = opened === 1 || opened === 3;
      } else if (n === 1) {
        italic = !italic;
      } else {
        bold = !bold;
      }
      i += n;
    } else {
      buf += ch;
      i += 1;
    }
  }
  flush();
  return runs;
}

export function parse(text: string): RichTextWire {
  const blocks: BlockWire[] = [];
  let paraLines: string[] = [];
  let bulletItems: InlineWire[][] = [];

  const flushParagraph = () => {
    if (paraLines.length) {
      blocks.push({ type: "paragraph", inlines: parseInlines(paraLines.join(" ")) });
      paraLines = [];
    }
  };
  const flushBullets = () => {
    if (bulletItems.length) {
      blocks.push({ type: "bullet_list", items: bulletItems });
      bulletItems = [];
    }
  };

  for (const line of text.split("\n")) {
    if (!line.trim()) {
      flushParagraph();
      flushBullets();
      continue;
    }
    const heading = HEADING_RE.exec(line);
    if (heading) {
      flushParagraph();
      flushBullets();
      blocks.push({
        type: "heading",
        level: heading[1].length,
        inlines: parseInlines(heading[2]),
      });
    } else if (line.startsWith("- ")) {
      flushParagraph();
      bulletItems.push(parseInlines(line.slice(2)));
    } else {
      flushBullets();
      paraLines.push(line);
    }
  }
  flushParagraph();
  flushBullets();
  return normalize({ blocks });
}
