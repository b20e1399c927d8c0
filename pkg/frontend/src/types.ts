// Wire types for the HTTP/SSE API. Field names mirror the server's JSON.

export type Mark = "bold" | "italic";

export interface InlineWire {
  text: string;
  marks: Mark[];
}

export interface HeadingWire {
  type: "heading";
  level: number;
  inlines: InlineWire[];
}

export interface ParagraphWire {
  type: "paragraph";
  inlines: InlineWire[];
}

export interface BulletListWire {
  type: "bullet_list";
  items: InlineWire[][];
}

export type BlockWire = HeadingWire | ParagraphWire | BulletListWire;

export interface RichTextWire {
  blocks: BlockWire[];
}

export interface GoalWire {
  id: string;
  label: string;
  detail: string;
}

export interface SectionWire {
  section_id: string;
  content: RichTextWire;
  completeness: number;
}

export interface PlanWire {
  document_id: string;
  owner: string;
  head: number;
  goals: GoalWire[];
  context: {
    business_name: string;
    summary: string;
    facts: { category: string; statement: string }[];
    source: { kind: string; url?: string; conversation_id?: string };
  };
  sections: SectionWire[];
  revisions: unknown[];
}

export interface ProposalWire {
  proposal_id: string;
  base_revision: number;
  target_section: string;
  replacement: RichTextWire;
  rationale: string;
  goal_ids: string[];
}

export interface SuggestionWire {
  kind: "exploitation" | "exploration";
  text: string;
  target_section: string;
}

export interface ChatFinalWire {
  reply: string;
  proposals: ProposalWire[];
  suggestions: SuggestionWire[];
}

export interface PitchPrepWire {
  document_id: string;
  goal_id: string;
  questions: string[];
  generated_at: string;
  head_at_generation: number;
}

export interface ExemplarWire {
  exemplar_id: string;
  section_id: string;
  title: string;
  body: string;
  source_url: string;
}

export interface ExpertWire {
  expert_id: string;
  name: string;
  focus_areas: string[];
  contact_url: string;
}

export const SECTION_IDS = [
  "executive_summary",
  "company_description",
  "market_analysis",
  "organization_management",
  "service_product_line",
  "marketing_sales",
  "funding_request",
  "financial_projections",
  "appendix",
] as const;

export type SectionId = (typeof SECTION_IDS)[number];

export const SECTION_NAMES: Record<SectionId, string> = {
  executive_summary: "Executive Summary",
  company_description: "Company Description",
  market_analysis: "Market Analysis",
  organization_management: "Organization and Management",
  service_product_line: "Service or Product Line",
  marketing_sales: "Marketing and Sales",
  funding_request: "Funding Request",
  financial_projections: "Financial Projections",
  appendix: "Appendix",
};
