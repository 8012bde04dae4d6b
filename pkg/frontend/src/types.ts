/** Wire types mirroring the service contract (docs/wire-contract.md). */

export type AnalyticKind =
  | "fluency"
  | "flexibility"
  | "visual_consistency"
  | "multiscale_organization"
  | "legible_contrast";

export const ANALYTIC_KINDS: AnalyticKind[] = [
  "fluency",
  "flexibility",
  "visual_consistency",
  "multiscale_organization",
  "legible_contrast",
];

export type Color = [number, number, number] | [number, number, number, number];

export interface BBox {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface ElementStyle {
  font_family?: string;
  font_size?: number;
  font_weight?: string;
  font_style?: string;
  fill?: Color;
  stroke?: Color;
  background?: Color;
}

export interface DocumentElement {
  id: string;
  kind: "text" | "image" | "sketch" | "video" | "embed";
  bbox: BBox;
  style?: ElementStyle;
  content?: { text?: string; descriptors?: string[] };
  zoom_level?: number;
  semantic_type?: string;
  author_id?: string;
}

export interface DesignDocument {
  schema_version?: number;
  doc_id: string;
  version: number;
  canvas: { width: number; height: number };
  background?: Color;
  elements: DocumentElement[];
  team_id?: string;
  author_ids?: string[];
}

export interface ResultEntry {
  score: number;
  payload: Record<string, unknown> & {
    ideas?: PayloadItem[];
    categories?: PayloadItem[];
    findings?: PayloadItem[];
    imbalance_findings?: PayloadItem[];
    line_box_findings?: PayloadItem[];
    loud_area_findings?: PayloadItem[];
  };
  element_refs: string[];
  config: Record<string, unknown>;
}

export interface PayloadItem {
  ref: string;
  term?: string;
  members?: string[];
  attribute?: string;
  group_key?: string;
  modal_value?: unknown;
  deviant_element_ids?: string[];
  element_ids?: string[];
  source_element_ids?: string[];
  severity?: number;
  ratio?: number;
  cells?: [number, number][];
  [extra: string]: unknown;
}

export interface Report {
  schema_version: number;
  doc_id: string;
  version: number;
  team_id: string | null;
  author_ids: string[];
  config_hash: string;
  results: Partial<Record<AnalyticKind, ResultEntry>>;
  member_breakdown: Record<
    string,
    {
      element_count: number;
      element_share: number;
      idea_count: number;
      idea_share: number;
      results: Partial<Record<AnalyticKind, { score: number; element_refs: string[] }>>;
    }
  >;
  warnings: string[];
}

export interface Explanation {
  analytic: AnalyticKind;
  ref: string;
  element_ids: string[];
  geometry: { element_id: string; bbox: BBox }[];
  cell_rects?: BBox[];
  cluster_box?: BBox | null;
  modal_value?: unknown;
  attribute?: string;
}

export interface RollupAggregate {
  doc_ids: string[];
  report_count: number;
  mean_scores: Partial<Record<AnalyticKind, number>>;
  annotation_counts: Record<"open" | "touched" | "addressed" | "validated", number>;
  recurrent_problems: { category: string; count: number; doc_ids: string[] }[];
}

export interface Rollup {
  schema_version: number;
  course: RollupAggregate;
  teams: Record<string, RollupAggregate>;
  students: Record<string, RollupAggregate>;
}

export interface Annotation {
  id: string;
  doc_id: string;
  created_version: number;
  author_id: string;
  kind: "redline" | "digitized_verbal" | "analytic_generated";
  body: string;
  target_element_ids: string[];
  target_region?: BBox;
  status: "open" | "touched" | "addressed" | "validated";
  resolved_version?: number;
  touched_version?: number;
  category?: string;
  flag: boolean;
  source_item_ref?: string;
}

export interface VersionDiff {
  doc_id: string;
  from_version: number;
  to_version: number;
  added: string[];
  removed: string[];
  modified: { element_id: string; deltas: Record<string, [unknown, unknown]> }[];
}

export interface NotificationEvent {
  seq: number;
  annotation_id: string;
  transition: string;
  version: number;
  recipient: string;
  doc_id?: string;
}

export interface ApiErrorBody {
  error: string;
  detail?: string;
}
