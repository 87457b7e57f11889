// DOM wiring for the chat page: a thin shell around the view models.
// One session per tab; the input locks while the server is thinking and
// forever once the session finishes.

import { SessionApi } from './api';
import { exportRequirements, requirementsFilename, serializeRequirements } from './export';
import { buildChatView, buildOntologyView, ChatView, OntologyView } from './views';

const api = new SessionApi('');

interface UiState {
  sessionId: string | null;
  busy: boolean;
}

const state: UiState = { sessionId: null, busy: false };

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

function renderChat(view: ChatView): void {
  const log = el<HTMLDivElement>('chat-log');
  log.replaceChildren();
  for (const entry of view.entries) {
    const row = document.createElement('div');
    row.className = `turn turn-${entry.speaker}`;
    if (entry.badge) {
      const badge = document.createElement('span');
      badge.className = `badge badge-${entry.badge}`;
      badge.textContent = entry.badge;
      row.appendChild(badge);
    }
    const text = document.createElement('span');
    text.textContent = entry.text;
    row.appendChild(text);
    log.appendChild(row);
  }
  log.scrollTop = log.scrollHeight;
  el<HTMLInputElement>('answer-input').disabled = view.inputDisabled || state.busy;
  el<HTMLButtonElement>('answer-send').disabled = view.inputDisabled || state.busy;
  el<HTMLSpanElement>('status-line').textContent =
    view.status === 'finished'
      ? `finished (${view.finishReason ?? 'done'}) — ${view.elicitedCount} requirements elicited`
      : `${view.elicitedCount} requirements elicited so far`;
}

function renderSidebar(view: OntologyView): void {
  const tree = el<HTMLDivElement>('ontology-tree');
  tree.replaceChildren();
  el<HTMLSpanElement>('elicited-counter').textContent = String(view.summary.confirmedSlots);
  for (const aspect of view.aspects) {
    const aspectBox = document.createElement('details');
    aspectBox.open = !aspect.grayed;
    aspectBox.className = aspect.grayed ? 'node grayed' : 'node';
    const title = document.createElement('summary');
    title.textContent = aspect.label;
    aspectBox.appendChild(title);
    for (const dim of aspect.dimensions) {
      const dimBox = document.createElement('details');
      dimBox.open = !dim.grayed;
      dimBox.className = dim.grayed ? 'node grayed' : 'node';
      const dimTitle = document.createElement('summary');
      dimTitle.textContent = dim.label;
      dimBox.appendChild(dimTitle);
      const list = document.createElement('ul');
      for (const slot of dim.slots) {
        const item = document.createElement('li');
        item.className = `slot slot-${slot.color}${slot.grayed ? ' grayed' : ''}`;
        item.textContent = slot.label;
        list.appendChild(item);
      }
      dimBox.appendChild(list);
      aspectBox.appendChild(dimBox);
    }
    tree.appendChild(aspectBox);
  }
}

async function refresh(): Promise<void> {
  if (!state.sessionId) return;
  // poll both views after every exchange; the server is the single source
  // of truth for transcript and node states
  const [session, ontology] = await Promise.all([
    api.getSession(state.sessionId),
    api.getOntology(state.sessionId),
  ]);
  renderChat(buildChatView(session));
  renderSidebar(buildOntologyView(ontology));
}

function showError(message: string): void {
  el<HTMLDivElement>('error-box').textContent = message;
}

async function onStart(event: Event): Promise<void> {
  event.preventDefault();
  const ontologyId = el<HTMLInputElement>('ontology-id').value.trim();
  const description = el<HTMLTextAreaElement>('initial-description').value.trim();
  if (!ontologyId || !description) {
    showError('an ontology id and a nonempty initial description are required');
    return;
  }
  showError('');
  try {
    const started = await api.startSession(ontologyId, description);
    state.sessionId = started.session_id;
    el<HTMLDivElement>('start-panel').hidden = true;
    el<HTMLDivElement>('chat-panel').hidden = false;
    await refresh();
  } catch (err) {
    showError(String(err));
  }
}

async function onSend(event: Event): Promise<void> {
  event.preventDefault();
  if (!state.sessionId || state.busy) return;
  const input = el<HTMLInputElement>('answer-input');
  const text = input.value.trim();
  if (!text) return;
  state.busy = true;
  input.disabled = true;
  try {
    await api.sendAnswer(state.sessionId, text);
    input.value = '';
  } catch (err) {
    showError(String(err));
  } finally {
    state.busy = false;
  }
  await refresh();
}

async function onExport(): Promise<void> {
  if (!state.sessionId) return;
  const body = await exportRequirements(api, state.sessionId);
  const blob = new Blob([serializeRequirements(body)], { type: 'application/json' });
  const link = document.createElement('a');
  link.href = URL.createObjectURL(blob);
  link.download = requirementsFilename(state.sessionId);
  link.click();
  URL.revokeObjectURL(link.href);
}

export function mount(): void {
  el<HTMLFormElement>('start-form').addEventListener('submit', onStart);
  el<HTMLFormElement>('answer-form').addEventListener('submit', onSend);
  el<HTMLButtonElement>('export-button').addEventListener('click', onExport);
}

if (typeof document !== 'undefined' && document.getElementById('start-form')) {
  mount();
}
