// Apply racing a moved head: the server answers 409, the card must show a
// refresh affordance, and clicking it reloads the plan and regenerates the
// proposal by re-sending the original message. Uses a stub client so the
// conflict is forced deterministically.

import { beforeEach, describe, expect, it } from "vitest";

import type { ApiClient } from "../src/api";
import { ChatPanel } from "../src/chat";
import type { ChatFinalWire, PlanWire, ProposalWire } from "../src/types";
import { until } from "./backend";

const PROPOSAL: ProposalWire = {
  proposal_id: "b".repeat(64),
  base_revision: 4,
  target_section: "market_analysis",
  replacement: { blocks: [{ type: "paragraph", inlines: [{ text: "sharper", marks: [] }] }] },
  rationale: "Sharper competitive framing.",
  goal_ids: ["g1"],
};

const FINAL: ChatFinalWire = {
  reply: "Here is a tighter market analysis.",
  proposals: [PROPOSAL],
  suggestions: [
    { kind: "exploitation", text: "Add pricing detail?", target_section: "market_analysis" },
    { kind: "exploration", text: "Work on the funding request next?", target_section: "funding_request" },
  ],
};

const PLAN: PlanWire = {
  document_id: "doc-x",
  owner: "acct-x",
  head: 5,
  goals: [{ id: "g1", label: "Raise a round", detail: "" }],
  context: { business_name: "Stub Co", summary: "", facts: [], source: { kind: "website", url: "https://x" } },
  sections: [],
  revisions: [],
};

interface StubLog {
  chats: string[];
  applies: string[];
  planFetches: number;
}

function stubApi(log: StubLog): ApiClient {
  const stub = {
    chat: async (
      _documentId: string,
      message: string,
      onDelta: (d: string) => void,
    ): Promise<ChatFinalWire> => {
      log.chats.push(message);
      onDelta(FINAL.reply);
      return FINAL;
    },
    applyProposal: async (_documentId: string, proposalId: string) => {
      log.applies.push(proposalId);
      return { outcome: "stale" as const, head: 5 };
    },
    getPlan: async (): Promise<PlanWire> => {
      log.planFetches += 1;
      return PLAN;
    },
    transcribe: async () => "",
  };
  return stub as unknown as ApiClient;
}

describe("apply conflict handling", () => {
  let log: StubLog;
  let panel: ChatPanel;
  let updates: PlanWire[];

  beforeEach(() => {
    document.body.innerHTML = "";
    log = { chats: [], applies: [], planFetches: 0 };
    updates = [];
    panel = new ChatPanel(stubApi(log), "doc-x", (plan) => updates.push(plan));
    document.body.appendChild(panel.element);
  });

  it("shows the refresh affordance and regenerates against the new head", async () => {
    await panel.send("tighten the market analysis");
    const card = panel.element.querySelector(".proposal-card")!;
    expect(card).not.toBeNull();

    const apply = card.querySelector<HTMLButtonElement>("button.apply")!;
    apply.click();
    await until(
      () => card.querySelector(".apply-status")!.textContent!.length > 0,
      "stale status",
    );

    const status = card.querySelector(".apply-status")!;
    expect(status.textContent).toContain("The plan changed since this was suggested");
    expect(status.textContent).toContain("revision 5");
    // the stale proposal is dead; its button must not be re-armed
    expect(apply.disabled).toBe(true);

    const refresh = status.querySelector<HTMLButtonElement>("button.refresh")!;
    expect(refresh.textContent).toBe("Refresh and regenerate");
    refresh.click();
    await until(() => log.chats.length === 2, "regenerated chat turn");

    expect(log.planFetches).toBe(1);
    expect(updates.map((plan) => plan.head)).toContain(5);
    expect(log.chats[1]).toBe("tighten the market analysis");
    await until(
      () => panel.element.querySelectorAll(".proposal-card").length === 2,
      "fresh proposal card",
    );
  });

  it("disables apply synchronously so a second click cannot race", async () => {
    await panel.send("tighten the market analysis");
    const apply = panel.element.querySelector<HTMLButtonElement>("button.apply")!;
    apply.click();
    expect(apply.disabled).toBe(true);
    await until(() => log.applies.length === 1, "apply call");
  });
});
