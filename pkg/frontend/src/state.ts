import type { AnnotationDraft } from './types.js';

/** Everything needed to restore an audit view. Encodable to a URL query
 * string so audit states are shareable and reproducible. */
export interface ViewState {
  percentile: number;
  attrFilter: string | null;
  verdictFilter: string | null;
  page: number;
  selected: string | null;
  draft: AnnotationDraft | null;
}

export const DEFAULT_STATE: ViewState = {
  percentile: 90,
  attrFilter: null,
  verdictFilter: null,
  page: 0,
  selected: null,
  draft: null,
};

/** Encode as a query string, omitting defaults so plain URLs stay clean. */
export function encodeState(state: ViewState): string {
  const params = new URLSearchParams();
  if (state.percentile !== DEFAULT_STATE.percentile) params.set('p', String(state.percentile));
  if (state.attrFilter) params.set('attr', state.attrFilter);
  if (state.verdictFilter) params.set('verdict', state.verdictFilter);
  if (state.page !== 0) params.set('page', String(state.page));
  if (state.selected) params.set('sel', state.selected);
  if (state.draft) {
    params.set('d_ex', state.draft.example_id);
    params.set('d_by', state.draft.auditor);
    params.set('d_v', state.draft.verdict);
    if (state.draft.note) params.set('d_note', state.draft.note);
  }
  return params.toString();
}

export function decodeState(query: string): ViewState {
  const params = new URLSearchParams(query);
  const state: ViewState = { ...DEFAULT_STATE };
  const p = params.get('p');
  if (p !== null && Number.isFinite(Number(p))) {
    state.percentile = clampPercentile(Number(p));
  }
  state.attrFilter = params.get('attr');
  state.verdictFilter = params.get('verdict');
  const page = Number(params.get('page') ?? '0');
  state.page = Number.isInteger(page) && page >= 0 ? page : 0;
  state.selected = params.get('sel');
  const draftExample = params.get('d_ex');
  if (draftExample !== null) {
    state.draft = {
      example_id: draftExample,
      auditor: params.get('d_by') ?? '',
      verdict: params.get('d_v') ?? '',
      note: params.get('d_note') ?? '',
    };
  }
  return state;
}

export function clampPercentile(value: number): number {
  // the service accepts [0, 100); keep the slider inside that range
  return Math.min(99.9, Math.max(0, value));
}

type Listener = (state: ViewState) => void;

/** Minimal observable store. Updates that change nothing do not notify,
 * so render loops cannot feed back into themselves. */
export class ViewStore {
  private listeners: Listener[] = [];

  constructor(private current: ViewState = { ...DEFAULT_STATE }) {}

  get state(): ViewState {
    return this.current;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  update(patch: Partial<ViewState>): void {
    const next = { ...this.current, ...patch };
    if (statesEqual(next, this.current)) return;
    this.current = next;
    for (const listener of this.listeners) listener(next);
  }

  /** Changing threshold or filters restarts paging from the first page. */
  setFilterOrThreshold(patch: Pick<Partial<ViewState>, 'percentile' | 'attrFilter' | 'verdictFilter'>): void {
    this.update({ ...patch, page: 0 });
  }
}

function statesEqual(a: ViewState, b: ViewState): boolean {
  return encodeState(a) === encodeState(b);
}
