/** Shapes of the service API responses the UI consumes. The UI renders
 * exclusively from these — no client-side scoring or image math. */

export interface Assessment {
  visual_description: string;
  abcde: Record<string, string> | null;
  feature_presence: string[];
  feature_localization: string;
  diagnoses: string[];
  final_diagnosis: string;
  non_compliance: string[];
}

export interface Send2Lab {
  required: boolean;
  rationale: string;
}

export interface LesionFeatures {
  area: number;
  perimeter: number;
  circularity: number;
  asymmetry_major: number;
  asymmetry_minor: number;
  asymmetry_avg: number;
  color_std: [number, number, number];
}

export interface CaseArtifacts {
  path?: "lesion" | "condition" | "end";
  path_reason?: string;
  initial_assessment?: Assessment;
  followup_assessment?: Assessment;
  features?: LesionFeatures;
  technical_report?: string;
  xai_report?: string;
  send2lab?: Send2Lab;
  contour?: [number, number][];
}

export interface CaseReport {
  id: string;
  created_at: number;
  state: string;
  failure_reason: string;
  artifacts: CaseArtifacts;
  legal_actions: string[];
  image_base64?: string;
}

export interface EvalReport {
  case_count: number;
  textual_similarity: { context: number; entities: number; weighted: number };
  nli: Record<string, { context_fraction: number; entities_fraction: number; weighted: number }>;
  bert_score: { precision: number; recall: number; f1: number };
  expert_review: { context: number; entities: number; mean: number };
  capability: number;
  bert_per_case: { precision: number[]; recall: number[]; f1: number[] };
}

export interface EvalRunState {
  run_id: string;
  status: "running" | "done" | "failed";
  completed: number;
  total: number;
  report?: EvalReport;
  table?: string;
  error?: string;
}
