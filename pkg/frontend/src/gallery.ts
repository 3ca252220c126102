import type { AnnotationDraft, Exemplar } from './types.js';

/** Client-side validation of an annotation draft; mirrors the service's
 * rules so obviously-bad submissions never leave the browser. */
export function validateDraft(draft: AnnotationDraft, allowedVerdicts: string[]): string | null {
  if (!draft.example_id) return 'no exemplar selected';
  if (!draft.auditor.trim()) return 'auditor name is required';
  if (!allowedVerdicts.includes(draft.verdict)) {
    return `verdict must be one of: ${allowedVerdicts.join(', ')}`;
  }
  return null;
}

/** One exemplar card: image when the log provides a media URL, otherwise a
 * score table, plus attribute badges and the latest annotation. */
export function renderExemplarCard(doc: Document, exemplar: Exemplar, selected: boolean): HTMLElement {
  const card = doc.createElement('article');
  card.className = 'exemplar-card' + (selected ? ' selected' : '') + (exemplar.modal_cie ? ' modal-flip' : '');
  card.dataset.exampleId = exemplar.example_id;

  const header = doc.createElement('header');
  header.textContent = `#${exemplar.rank} ${exemplar.example_id}`;
  card.appendChild(header);

  if (exemplar.media_url) {
    const img = doc.createElement('img');
    img.src = exemplar.media_url;
    img.alt = exemplar.example_id;
    img.loading = 'lazy';
    card.appendChild(img);
  } else {
    card.appendChild(scoreTable(doc, exemplar));
  }

  if (exemplar.attributes) {
    const badges = doc.createElement('div');
    badges.className = 'badges';
    for (const [name, present] of Object.entries(exemplar.attributes)) {
      if (!present) continue;
      const badge = doc.createElement('span');
      badge.className = 'badge';
      badge.textContent = name;
      badges.appendChild(badge);
    }
    card.appendChild(badges);
  }

  const annotation = doc.createElement('p');
  annotation.className = 'annotation-state';
  annotation.textContent = exemplar.annotation
    ? `${exemplar.annotation.verdict} — ${exemplar.annotation.auditor}`
    : 'unannotated';
  card.appendChild(annotation);
  return card;
}

function scoreTable(doc: Document, exemplar: Exemplar): HTMLTableElement {
  const rows: [string, string][] = [
    ['taxicab', String(exemplar.taxicab)],
    ['jaccard', exemplar.jaccard.toFixed(4)],
    ['modal baseline', String(exemplar.modal_baseline)],
    ['modal variant', String(exemplar.modal_variant) + (exemplar.tie_flag ? ' (tie-broken)' : '')],
    ['true label', exemplar.true_label === null ? 'n/a' : String(exemplar.true_label)],
  ];
  const table = doc.createElement('table');
  table.className = 'score-table';
  for (const [label, value] of rows) {
    const tr = doc.createElement('tr');
    const th = doc.createElement('th');
    th.textContent = label;
    const td = doc.createElement('td');
    td.textContent = value;
    tr.append(th, td);
    table.appendChild(tr);
  }
  return table;
}
