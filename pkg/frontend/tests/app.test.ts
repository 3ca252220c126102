import { beforeEach, describe, expect, it } from 'vitest';
import type { AuditApi } from '../src/api.js';
import { ApiError } from '../src/api.js';
import { AuditApp } from '../src/app.js';
import type { Annotation, AnnotationDraft, Dashboard, Exemplar, ExemplarPage, SessionInfo } from '../src/types.js';

const N = 100;
const PAGE_SIZE = 20;
const VERDICTS = ['mislabeled', 'ambiguous', 'ok'];

/** In-memory stand-in for the audit service: 100 ranked exemplars, every
 * fifth carrying the "minority" attribute. */
class FakeService implements AuditApi {
  offline = false;
  rejectNextAnnotation: number | null = null;
  annotations = new Map<string, Annotation>();
  exemplarCalls: { percentile: number; page: number; attr?: string; verdict?: string }[] = [];

  private fail(): never {
    throw new TypeError('fetch failed');
  }

  private all(): Exemplar[] {
    return Array.from({ length: N }, (_, i) => {
      const id = `te${String(i).padStart(6, '0')}`;
      return {
        example_id: id,
        taxicab: 2 * (N - i),
        jaccard: (N - i) / N,
        modal_baseline: 1,
        modal_variant: 0,
        modal_cie: i < 40,
        rank: i + 1,
        percentile: 100 * (1 - (i + 1) / N),
        tie_flag: false,
        true_label: 1,
        attributes: { minority: i % 5 === 0 },
        annotation: this.annotations.get(id) ?? null,
      };
    });
  }

  async session(): Promise<SessionInfo> {
    if (this.offline) this.fail();
    return {
      baseline_id: 'baseline',
      variant_id: 'pruned_0.9',
      examples: N,
      modal_cie_count: 40,
      attributes: ['minority'],
      verdicts: VERDICTS,
      page_size: PAGE_SIZE,
      rng_seed: 0,
      has_truth: true,
    };
  }

  async exemplars(percentile: number, page: number, attr?: string, verdict?: string): Promise<ExemplarPage> {
    if (this.offline) this.fail();
    this.exemplarCalls.push({ percentile, page, attr, verdict });
    const count = Math.ceil(((100 - percentile) / 100) * N);
    let selected = this.all().slice(0, count);
    if (attr) selected = selected.filter((e) => e.attributes?.[attr]);
    if (verdict) selected = selected.filter((e) => e.annotation?.verdict === verdict);
    return {
      percentile,
      total: selected.length,
      page,
      page_size: PAGE_SIZE,
      exemplars: selected.slice(page * PAGE_SIZE, (page + 1) * PAGE_SIZE),
    };
  }

  async dashboard(percentile: number): Promise<Dashboard> {
    if (this.offline) this.fail();
    const count = Math.ceil(((100 - percentile) / 100) * N);
    const surfaced = this.all().slice(0, count);
    const annotated = surfaced.filter((e) => this.annotations.has(e.example_id)).length;
    return {
      baseline_id: 'baseline',
      variant_id: 'pruned_0.9',
      examples: N,
      divergence: { modal_cie_count: 40, taxicab_mean: 3.2, taxicab_max: 200, taxicab_nonzero: 90, tie_count: 0 },
      notes: [],
      accuracy: {
        baseline: {
          all: { cie_acc: 50, noncie_acc: 85, all_acc: 82, cie_count: count, total: N },
          [`p${percentile}`]: { cie_acc: 48, noncie_acc: 85, all_acc: 82, cie_count: count, total: N },
        },
      },
      overindex: {
        modal: [{ attribute: 'minority', train_fraction: 0.08, cie_fraction: 0.2, representation_ratio: 2.5 }],
      },
      annotation_progress: { annotated, surfaced: count },
    };
  }

  async history(exampleId: string): Promise<{ example_id: string; history: Annotation[] }> {
    return { example_id: exampleId, history: [] };
  }

  async annotate(draft: AnnotationDraft): Promise<{ annotation_id: string }> {
    if (this.offline) this.fail();
    if (this.rejectNextAnnotation !== null) {
      const status = this.rejectNextAnnotation;
      this.rejectNextAnnotation = null;
      throw new ApiError(status, 'rejected by service');
    }
    const annotation: Annotation = {
      annotation_id: `a${this.annotations.size}`,
      ...draft,
      created_at: new Date().toISOString(),
    };
    this.annotations.set(draft.example_id, annotation);
    return { annotation_id: annotation.annotation_id };
  }
}

let service: FakeService;
let root: HTMLElement;
let app: AuditApp;

beforeEach(async () => {
  service = new FakeService();
  root = document.createElement('div');
  document.body.replaceChildren(root);
  app = new AuditApp(service, root);
  await app.start();
});

function shownCount(): string {
  return root.querySelector('.page-info')?.textContent ?? '';
}

describe('threshold view', () => {
  it('shows the service-reported exemplar count for the initial percentile', () => {
    expect(shownCount()).toContain('10 exemplars');
  });

  it('moving the slider 90 -> 99 drops the count to the 99th-percentile count', async () => {
    app.setPercentile(99);
    await app.refresh();
    expect(app.exemplarPage?.total).toBe(1);
    expect(shownCount()).toContain('1 exemplars');
    expect(service.exemplarCalls.at(-1)?.percentile).toBe(99);
  });

  it('attribute filtering yields a subset of the unfiltered gallery', async () => {
    const before = app.exemplarPage!.exemplars.map((e) => e.example_id);
    app.setAttrFilter('minority');
    await app.refresh();
    const after = app.exemplarPage!.exemplars.map((e) => e.example_id);
    expect(after.length).toBeLessThan(before.length);
    expect(after.every((id) => before.includes(id))).toBe(true);
  });

  it('restores an equivalent view from its URL encoding', async () => {
    app.setPercentile(99);
    app.setAttrFilter('minority');
    await app.refresh();
    const query = new URLSearchParams({ p: '99', attr: 'minority' }).toString();
    const twin = new AuditApp(service, document.createElement('div'), query);
    await twin.start();
    expect(twin.store.state.percentile).toBe(99);
    expect(twin.exemplarPage?.total).toBe(app.exemplarPage?.total);
  });
});

describe('offline handling', () => {
  it('shows a banner and keeps the last known gallery instead of going blank', async () => {
    const cardsBefore = root.querySelectorAll('.exemplar-card').length;
    expect(cardsBefore).toBeGreaterThan(0);
    service.offline = true;
    app.setPercentile(95);
    await app.refresh();
    const banner = root.querySelector<HTMLElement>('.banner')!;
    expect(banner.hidden).toBe(false);
    expect(banner.textContent).toContain('service unreachable');
    expect(root.querySelectorAll('.exemplar-card').length).toBe(cardsBefore);
  });

  it('clears the banner once the service answers again', async () => {
    service.offline = true;
    await app.refresh();
    expect(app.offline).toBe(true);
    service.offline = false;
    await app.refresh();
    expect(app.offline).toBe(false);
    expect(root.querySelector<HTMLElement>('.banner')!.hidden).toBe(true);
  });
});

describe('annotation flow', () => {
  function draftFor(id: string, verdict = 'mislabeled') {
    app.selectExemplar(id);
    app.updateDraft({ auditor: 'alice', verdict, note: 'checked' });
  }

  it('applies the verdict optimistically, then reconciles with the service', async () => {
    const id = app.exemplarPage!.exemplars[0].example_id;
    draftFor(id);
    const submission = app.submitAnnotation();
    expect(app.exemplarPage!.exemplars[0].annotation?.verdict).toBe('mislabeled');
    expect(app.exemplarPage!.exemplars[0].annotation?.annotation_id).toBe('pending');
    await submission;
    expect(app.exemplarPage!.exemplars[0].annotation?.annotation_id).toBe('a0');
    expect(service.annotations.get(id)?.verdict).toBe('mislabeled');
  });

  it('increments the dashboard progress counter after an annotation', async () => {
    expect(app.dashboard?.annotation_progress.annotated).toBe(0);
    draftFor(app.exemplarPage!.exemplars[0].example_id);
    await app.submitAnnotation();
    expect(app.dashboard?.annotation_progress).toEqual({ annotated: 1, surfaced: 10 });
  });

  it('blocks invalid verdicts client-side without calling the service', async () => {
    draftFor(app.exemplarPage!.exemplars[0].example_id, 'not-a-verdict');
    const ok = await app.submitAnnotation();
    expect(ok).toBe(false);
    expect(app.lastError).toContain('verdict must be one of');
    expect(service.annotations.size).toBe(0);
  });

  it('rolls back the optimistic update and keeps the draft when the write is rejected', async () => {
    const id = app.exemplarPage!.exemplars[0].example_id;
    service.rejectNextAnnotation = 422;
    draftFor(id);
    const ok = await app.submitAnnotation();
    expect(ok).toBe(false);
    expect(app.exemplarPage!.exemplars[0].annotation).toBeNull();
    expect(app.store.state.draft?.verdict).toBe('mislabeled');
    expect(app.lastError).toContain('annotation rejected');
    expect(root.querySelector('.banner')?.textContent).toContain('rejected');
  });

  it('renders every displayed metric from service values only', () => {
    // dashboard numbers appear verbatim; chart tooltips carry the raw values
    const summary = root.querySelector('.summary')!.textContent!;
    expect(summary).toContain('modal CIEs: 40 / 100');
    expect(root.querySelector('.accuracy-chart')!.innerHTML).toContain('baseline p90: 48.00%');
    expect(root.querySelector('.overindex-chart')!.innerHTML).toContain('minority: 2.50x');
  });
});
