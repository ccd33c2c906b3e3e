// Wire types mirroring the review API payloads.

export interface Emr {
  chief_complaint: string;
  present_illness: string;
  past_history: string;
  allergy_history: string;
  exams: string[];
  diagnosis: string;
}

export interface HistoryEntry {
  tier: number;
  reviewer_id: string;
  decision: "approve" | "reject";
  criterion: string | null;
  note: string;
  timestamp: number;
}

export interface ReviewState {
  tier: number;
  status: "pending" | "approved" | "rejected" | "final";
  history: HistoryEntry[];
  version: number;
}

export interface FoundryItem {
  id: string;
  department: string;
  emr: Emr;
  question: string;
  options: string[];
  answer_index: number;
  review: ReviewState;
  patient?: { age: number; gender: string } | null;
}

export interface ChecklistCriterion {
  id: string;
  category: "consultation" | "diagnostic" | "question";
  text: string;
}

export interface ItemPage {
  items: FoundryItem[];
  page: number;
  page_size: number;
  total: number;
}

export interface ItemDetail {
  item: FoundryItem;
  checklist: ChecklistCriterion[];
}

export interface StatsPayload {
  demographics: Record<string, unknown>;
  review: {
    total: number;
    by_status: Record<string, number>;
    pending_by_tier: Record<string, number>;
  };
}

export interface ApiError {
  code: string;
  message: string;
}

export interface ReviewerProfile {
  id: string;
  tier: number;
  label: string;
}

export const DEFAULT_PROFILES: ReviewerProfile[] = [
  { id: "dr-attending", tier: 1, label: "Attending (tier 1)" },
  { id: "dr-associate", tier: 2, label: "Associate expert (tier 2)" },
  { id: "dr-chief", tier: 3, label: "Chief physician (tier 3)" },
];

export const NONE_OF_THE_ABOVE = "None of the above";
