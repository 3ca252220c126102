import { ApiClient } from './api.js';
import { AuditApp } from './app.js';
import { decodeState } from './state.js';

// Entry point for the browser bundle: restore the view from the URL, keep
// the URL in sync as the auditor works, and talk to the service at the
// same origin (override with ?api=<base> for a detached dev server).

const params = new URLSearchParams(window.location.search);
const apiBase = params.get('api') ?? '';

const app = new AuditApp(
  new ApiClient(apiBase),
  document.getElementById('app') as HTMLElement,
  window.location.hash.slice(1),
  {
    onStateChange: (query) => {
      history.replaceState(null, '', query ? `#${query}` : window.location.pathname + window.location.search);
    },
  },
);

window.addEventListener('hashchange', () => {
  // back/forward or a pasted audit link: restore that exact view
  app.store.update(decodeState(window.location.hash.slice(1)));
});

void app.start();
