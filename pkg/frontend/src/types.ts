// Payload shapes of the audit service HTTP API. The UI renders these
// values verbatim; it never derives metrics of its own.

export interface SessionInfo {
  baseline_id: string;
  variant_id: string;
  examples: number;
  modal_cie_count: number;
  attributes: string[];
  verdicts: string[];
  page_size: number;
  rng_seed: number;
  has_truth: boolean;
}

export interface Annotation {
  annotation_id: string;
  example_id: string;
  auditor: string;
  verdict: string;
  note: string;
  created_at: string;
}

export interface Exemplar {
  example_id: string;
  taxicab: number;
  jaccard: number;
  modal_baseline: number;
  modal_variant: number;
  modal_cie: boolean;
  rank: number;
  percentile: number;
  tie_flag: boolean;
  true_label: number | null;
  attributes?: Record<string, boolean>;
  media_url?: string;
  annotation: Annotation | null;
}

export interface ExemplarPage {
  percentile: number;
  total: number;
  page: number;
  page_size: number;
  exemplars: Exemplar[];
}

export interface AccuracyPartition {
  cie_acc: number | null;
  noncie_acc: number | null;
  all_acc: number;
  cie_count: number;
  total: number;
}

export interface OverindexRow {
  attribute: string;
  train_fraction: number;
  cie_fraction: number;
  representation_ratio: number | null;
}

export interface Dashboard {
  baseline_id: string;
  variant_id: string;
  examples: number;
  divergence: {
    modal_cie_count: number;
    taxicab_mean: number;
    taxicab_max: number;
    taxicab_nonzero: number;
    tie_count: number;
  };
  notes: string[];
  accuracy?: Record<string, Record<string, AccuracyPartition>>;
  subgroups?: Record<string, unknown>;
  overindex?: Record<string, OverindexRow[]>;
  annotation_progress: { annotated: number; surfaced: number };
}

export interface AnnotationDraft {
  example_id: string;
  auditor: string;
  verdict: string;
  note: string;
}
