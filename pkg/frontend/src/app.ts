import type { AuditApi } from './api.js';
import { accuracyChartSvg, accuracyPoints, overindexChartSvg } from './charts.js';
import { renderExemplarCard, validateDraft } from './gallery.js';
import { ViewStore, clampPercentile, decodeState, encodeState } from './state.js';
import type { Dashboard, Exemplar, ExemplarPage, SessionInfo } from './types.js';

interface AppOptions {
  /** Called with the encoded view state whenever it changes (URL sync). */
  onStateChange?: (query: string) => void;
}

/** Controller wiring the store, the API client and the DOM together.
 * All displayed numbers come from service responses; a failed refresh
 * keeps the previous content visible behind an explicit stale banner. */
export class AuditApp {
  readonly store: ViewStore;
  session: SessionInfo | null = null;
  exemplarPage: ExemplarPage | null = null;
  dashboard: Dashboard | null = null;
  offline = false;
  lastError: string | null = null;

  private refreshToken = 0;

  constructor(
    private readonly api: AuditApi,
    private readonly root: HTMLElement,
    initialQuery = '',
    private readonly options: AppOptions = {},
  ) {
    this.store = new ViewStore(decodeState(initialQuery));
    this.store.subscribe(() => {
      this.options.onStateChange?.(encodeState(this.store.state));
      void this.refresh();
    });
    this.buildSkeleton();
  }

  async start(): Promise<void> {
    try {
      this.session = await this.api.session();
      this.offline = false;
    } catch (err) {
      this.offline = true;
      this.lastError = String(err);
    }
    await this.refresh();
  }

  /** Re-fetch gallery and dashboard for the current view state. Stale
   * responses (superseded by a newer state change) are dropped. */
  async refresh(): Promise<void> {
    const token = ++this.refreshToken;
    const { percentile, page, attrFilter, verdictFilter } = this.store.state;
    try {
      const [exemplars, dashboard] = await Promise.all([
        this.api.exemplars(percentile, page, attrFilter ?? undefined, verdictFilter ?? undefined),
        this.api.dashboard(percentile),
      ]);
      if (token !== this.refreshToken) return;
      this.exemplarPage = exemplars;
      this.dashboard = dashboard;
      this.offline = false;
      this.lastError = null;
    } catch (err) {
      if (token !== this.refreshToken) return;
      this.offline = true;
      this.lastError = String(err);
    }
    this.render();
  }

  setPercentile(value: number): void {
    this.store.setFilterOrThreshold({ percentile: clampPercentile(value) });
  }

  setAttrFilter(attr: string | null): void {
    this.store.setFilterOrThreshold({ attrFilter: attr });
  }

  setVerdictFilter(verdict: string | null): void {
    this.store.setFilterOrThreshold({ verdictFilter: verdict });
  }

  setPage(page: number): void {
    this.store.update({ page: Math.max(0, page) });
  }

  selectExemplar(exampleId: string | null): void {
    this.store.update({
      selected: exampleId,
      draft: exampleId
        ? { example_id: exampleId, auditor: this.store.state.draft?.auditor ?? '', verdict: '', note: '' }
        : null,
    });
  }

  /** Submit the current draft. The card is updated optimistically; on
   * rejection the previous annotation is restored, the draft kept, and the
   * error surfaced. */
  async submitAnnotation(): Promise<boolean> {
    const draft = this.store.state.draft;
    if (!draft || !this.session) return false;
    const problem = validateDraft(draft, this.session.verdicts);
    if (problem) {
      this.lastError = problem;
      this.render();
      return false;
    }
    this.refreshToken++; // drop in-flight refreshes so they can't clobber the optimistic state
    const card = this.exemplarPage?.exemplars.find((e) => e.example_id === draft.example_id);
    const previous = card?.annotation ?? null;
    if (card) {
      card.annotation = {
        annotation_id: 'pending',
        example_id: draft.example_id,
        auditor: draft.auditor,
        verdict: draft.verdict,
        note: draft.note,
        created_at: new Date().toISOString(),
      };
      this.render();
    }
    try {
      await this.api.annotate(draft);
    } catch (err) {
      if (card) card.annotation = previous;
      this.lastError = `annotation rejected: ${err instanceof Error ? err.message : String(err)}`;
      this.render();
      return false;
    }
    this.store.update({ draft: null, selected: null });
    await this.refresh(); // reconcile with the service-confirmed state
    return true;
  }

  updateDraft(patch: Partial<{ auditor: string; verdict: string; note: string }>): void {
    const draft = this.store.state.draft;
    if (!draft) return;
    this.store.update({ draft: { ...draft, ...patch } });
  }

  // ---- rendering -------------------------------------------------------

  private buildSkeleton(): void {
    this.root.innerHTML = `
      <div class="banner" hidden></div>
      <header class="toolbar">
        <label>threshold <input type="range" class="percentile-slider" min="0" max="99" step="1"></label>
        <span class="percentile-value"></span>
        <select class="attr-filter"><option value="">all attributes</option></select>
        <select class="verdict-filter"><option value="">all verdicts</option></select>
      </header>
      <main>
        <section class="gallery"></section>
        <aside class="dashboard">
          <div class="summary"></div>
          <div class="chart accuracy-chart"></div>
          <div class="chart overindex-chart"></div>
        </aside>
      </main>
      <footer class="pager">
        <button class="prev">prev</button>
        <span class="page-info"></span>
        <button class="next">next</button>
      </footer>`;
    const slider = this.root.querySelector<HTMLInputElement>('.percentile-slider')!;
    slider.addEventListener('input', () => this.setPercentile(Number(slider.value)));
    const attrSelect = this.root.querySelector<HTMLSelectElement>('.attr-filter')!;
    attrSelect.addEventListener('change', () => this.setAttrFilter(attrSelect.value || null));
    const verdictSelect = this.root.querySelector<HTMLSelectElement>('.verdict-filter')!;
    verdictSelect.addEventListener('change', () => this.setVerdictFilter(verdictSelect.value || null));
    this.root.querySelector<HTMLButtonElement>('.prev')!.addEventListener('click', () =>
      this.setPage(this.store.state.page - 1),
    );
    this.root.querySelector<HTMLButtonElement>('.next')!.addEventListener('click', () =>
      this.setPage(this.store.state.page + 1),
    );
  }

  render(): void {
    const doc = this.root.ownerDocument;
    const state = this.store.state;

    const banner = this.root.querySelector<HTMLElement>('.banner')!;
    if (this.offline) {
      banner.hidden = false;
      banner.textContent = `service unreachable — showing last known state (${this.lastError ?? 'no detail'})`;
      banner.className = 'banner offline';
    } else if (this.lastError) {
      banner.hidden = false;
      banner.textContent = this.lastError;
      banner.className = 'banner error';
    } else {
      banner.hidden = true;
    }

    const slider = this.root.querySelector<HTMLInputElement>('.percentile-slider')!;
    slider.value = String(state.percentile);
    this.root.querySelector('.percentile-value')!.textContent = `p${state.percentile}`;

    if (this.session) {
      syncOptions(doc, this.root.querySelector('.attr-filter')!, this.session.attributes, state.attrFilter);
      syncOptions(doc, this.root.querySelector('.verdict-filter')!, this.session.verdicts, state.verdictFilter);
    }

    if (this.exemplarPage) {
      const gallery = this.root.querySelector<HTMLElement>('.gallery')!;
      gallery.innerHTML = '';
      for (const exemplar of this.exemplarPage.exemplars) {
        const card = renderExemplarCard(doc, exemplar, exemplar.example_id === state.selected);
        card.addEventListener('click', () => this.selectExemplar(exemplar.example_id));
        gallery.appendChild(card);
      }
      if (state.selected) {
        const selectedCard = gallery.querySelector(`[data-example-id="${cssEscape(state.selected)}"]`);
        selectedCard?.appendChild(this.renderAnnotationForm(doc));
      }
      const pages = Math.max(1, Math.ceil(this.exemplarPage.total / this.exemplarPage.page_size));
      this.root.querySelector('.page-info')!.textContent =
        `${this.exemplarPage.total} exemplars — page ${state.page + 1}/${pages}`;
    }

    if (this.dashboard) this.renderDashboard();
  }

  private renderAnnotationForm(doc: Document): HTMLElement {
    const draft = this.store.state.draft!;
    const form = doc.createElement('form');
    form.className = 'annotation-form';
    form.innerHTML = `
      <input class="auditor" placeholder="auditor" value="${escapeAttr(draft.auditor)}">
      <select class="verdict"><option value="">verdict…</option></select>
      <input class="note" placeholder="note" value="${escapeAttr(draft.note)}">
      <button type="submit">save</button>`;
    const verdictSelect = form.querySelector<HTMLSelectElement>('.verdict')!;
    for (const verdict of this.session?.verdicts ?? []) {
      const option = doc.createElement('option');
      option.value = verdict;
      option.textContent = verdict;
      option.selected = verdict === draft.verdict;
      verdictSelect.appendChild(option);
    }
    form.querySelector<HTMLInputElement>('.auditor')!.addEventListener('input', (e) =>
      this.updateDraft({ auditor: (e.target as HTMLInputElement).value }),
    );
    verdictSelect.addEventListener('change', () => this.updateDraft({ verdict: verdictSelect.value }));
    form.querySelector<HTMLInputElement>('.note')!.addEventListener('input', (e) =>
      this.updateDraft({ note: (e.target as HTMLInputElement).value }),
    );
    form.addEventListener('submit', (e) => {
      e.preventDefault();
      void this.submitAnnotation();
    });
    form.addEventListener('click', (e) => e.stopPropagation());
    return form;
  }

  private renderDashboard(): void {
    const d = this.dashboard!;
    const summary = this.root.querySelector<HTMLElement>('.summary')!;
    summary.innerHTML = '';
    const doc = this.root.ownerDocument;
    const lines = [
      `${d.baseline_id} vs ${d.variant_id}`,
      `modal CIEs: ${d.divergence.modal_cie_count} / ${d.examples}`,
      `taxicab mean ${d.divergence.taxicab_mean.toFixed(2)}, max ${d.divergence.taxicab_max}`,
      `annotated ${d.annotation_progress.annotated} of ${d.annotation_progress.surfaced} surfaced`,
    ];
    for (const line of lines) {
      const p = doc.createElement('p');
      p.textContent = line;
      summary.appendChild(p);
    }
    const accuracyEl = this.root.querySelector<HTMLElement>('.accuracy-chart')!;
    accuracyEl.innerHTML = d.accuracy ? accuracyChartSvg(accuracyPoints(d.accuracy)) : '';
    const overindexEl = this.root.querySelector<HTMLElement>('.overindex-chart')!;
    const rows = d.overindex ? Object.values(d.overindex)[0] : undefined;
    overindexEl.innerHTML = rows ? overindexChartSvg(rows) : '';
  }
}

function syncOptions(doc: Document, select: HTMLSelectElement, values: string[], current: string | null): void {
  const existing = new Set([...select.options].map((o) => o.value));
  for (const value of values) {
    if (existing.has(value)) continue;
    const option = doc.createElement('option');
    option.value = value;
    option.textContent = value;
    select.appendChild(option);
  }
  select.value = current ?? '';
}

function escapeAttr(text: string): string {
  return text.replace(/&/g, '&amp;').replace(/"/g, '&quot;').replace(/</g, '&lt;');
}

function cssEscape(text: string): string {
  return text.replace(/["\\]/g, '\\$&');
}

export type { Exemplar };
