// Contract test: the UI is a pure view over the session API. A mocked
// server plays one interview (confirm, reject-dimension, gate-done); the
// chat view must mirror the mock transcript exactly, the sidebar must show
// the mocked node states, and the export must equal the requirements body.

import { beforeEach, describe, expect, it } from 'vitest';

import { ApiError, SessionApi } from '../src/api';
import { exportRequirements, serializeRequirements } from '../src/export';
import { buildChatView, buildOntologyView } from '../src/views';
import type {
  OntologyDoc,
  RequirementsResponse,
  SessionView,
  TranscriptTurn,
} from '../src/types';

type SlotState = 'unexplored' | 'confirmed' | 'rejected' | 'pruned';

function slot(id: string, key: string, state: SlotState) {
  return {
    id,
    key,
    question: `Do you need ${key}?`,
    question_form: 'binary' as const,
    state,
    score: 0,
  };
}

/** Scripted twin of the session service for one fixed interview. */
class MockSessionServer {
  transcript: TranscriptTurn[] = [];
  answersSeen = 0;
  finished = false;

  private readonly questions = [
    { text: 'Do you need filtering options?', kind: 'slot' as const, node: 'interaction.search.filtering-options' },
    { text: 'Do you need user accounts?', kind: 'slot' as const, node: 'interaction.login.user-accounts' },
    { text: 'Are there any other requirements related to style?', kind: 'gate' as const, node: 'style' },
  ];

  start(description: string) {
    this.transcript = [
      { speaker: 'stakeholder', text: description, kind: 'initial', node_id: null },
      { speaker: 'agent', text: this.questions[0].text, kind: 'slot_question', node_id: this.questions[0].node },
    ];
    return {
      session_id: 'mock-session',
      question: this.questions[0].text,
      question_kind: this.questions[0].kind,
      node_id: this.questions[0].node,
    };
  }

  answer(text: string) {
    this.transcript.push({ speaker: 'stakeholder', text, kind: 'answer', node_id: null });
    this.answersSeen += 1;
    if (this.answersSeen >= this.questions.length) {
      this.finished = true;
      return {
        done: true,
        finish_reason: 'no_eligible_slots',
        elicited_count: 1,
        ontology_digest: 'digest-final',
      };
    }
    const next = this.questions[this.answersSeen];
    this.transcript.push({
      speaker: 'agent',
      text: next.text,
      kind: next.kind === 'gate' ? 'gate_question' : 'slot_question',
      node_id: next.node,
    });
    return {
      done: false,
      question: next.text,
      question_kind: next.kind,
      node_id: next.node,
      elicited_count: 1,
      ontology_digest: `digest-${this.answersSeen}`,
    };
  }

  session(): SessionView {
    return {
      session_id: 'mock-session',
      status: this.finished ? 'finished' : 'active',
      finish_reason: this.finished ? 'no_eligible_slots' : null,
      turn: Math.min(this.answersSeen, 2),
      max_turns: 10,
      elicited_count: this.answersSeen >= 1 ? 1 : 0,
      transcript: [...this.transcript],
    };
  }

  /** Node states after the third answer: filtering confirmed, the login
   * dimension rejected away, and the style aspect gate-pruned. */
  ontology(): OntologyDoc {
    const confirmed = this.answersSeen >= 1;
    const loginPruned = this.answersSeen >= 2;
    const stylePruned = this.answersSeen >= 3;
    return {
      domain_name: 'website',
      version: 5 + this.answersSeen,
      aspects: [
        {
          id: 'interaction',
          name: 'Interaction',
          pruned: false,
          score: 0.5,
          dimensions: [
            {
              id: 'interaction.search',
              name: 'Search',
              pruned: false,
              score: 0.5,
              slots: [
                slot('interaction.search.filtering-options', 'filtering options',
                     confirmed ? 'confirmed' : 'unexplored'),
                slot('interaction.search.sorting-rules', 'sorting rules', 'unexplored'),
              ],
            },
            {
              id: 'interaction.login',
              name: 'Login',
              pruned: loginPruned,
              score: 0,
              slots: [
                slot('interaction.login.user-accounts', 'user accounts',
                     loginPruned ? 'rejected' : 'unexplored'),
                slot('interaction.login.password-reset', 'password reset',
                     loginPruned ? 'pruned' : 'unexplored'),
              ],
            },
          ],
        },
        {
          id: 'style',
          name: 'Style',
          pruned: stylePruned,
          score: 0,
          dimensions: [
            {
              id: 'style.theme',
              name: 'Theme',
              pruned: stylePruned,
              score: 0,
              slots: [slot('style.theme.color-scheme', 'color scheme',
                           stylePruned ? 'pruned' : 'unexplored')],
            },
          ],
        },
      ],
    };
  }

  requirements(): RequirementsResponse {
    return {
      session_id: 'mock-session',
      requirements: this.answersSeen >= 1
        ? [{ slot_id: 'interaction.search.filtering-options', key: 'filtering options',
             excerpt: 'Yes, filters by sector please.', turn: 1 }]
        : [],
    };
  }

  fetch: typeof fetch = async (input, init) => {
    const url = String(input);
    const method = init?.method ?? 'GET';
    const respond = (status: number, body: unknown) =>
      new Response(JSON.stringify(body), {
        status,
        headers: { 'Content-Type': 'application/json' },
      });

    if (method === 'POST' && url.endsWith('/sessions')) {
      const body = JSON.parse(String(init?.body));
      return respond(201, this.start(body.initial_description));
    }
    if (method === 'POST' && url.endsWith('/answers')) {
      if (this.finished) return respond(409, { detail: 'session is finished' });
      const body = JSON.parse(String(init?.body));
      return respond(200, this.answer(body.text));
    }
    if (method === 'GET' && url.endsWith('/sessions/mock-session')) {
      return respond(200, this.session());
    }
    if (method === 'GET' && url.endsWith('/ontology')) {
      return respond(200, this.ontology());
    }
    if (method === 'GET' && url.endsWith('/requirements')) {
      return respond(200, this.requirements());
    }
    return respond(404, { detail: `no route for ${method} ${url}` });
  };
}

describe('chat UI contract against the mocked session API', () => {
  let server: MockSessionServer;
  let api: SessionApi;

  beforeEach(() => {
    server = new MockSessionServer();
    api = new SessionApi('http://mock', server.fetch);
  });

  async function playInterview() {
    const started = await api.startSession('onto-1', 'I want a stock screening website.');
    expect(started.question_kind).toBe('slot');
    await api.sendAnswer(started.session_id, 'Yes, filters by sector please.');
    await api.sendAnswer(started.session_id, 'No, the whole login area is unnecessary.');
    const last = await api.sendAnswer(started.session_id, 'No, nothing else about style.');
    expect(last.done).toBe(true);
    return started.session_id;
  }

  it('renders exactly the server transcript, in order', async () => {
    const sessionId = await playInterview();
    const view = buildChatView(await api.getSession(sessionId));

    expect(view.entries.map((e) => e.text)).toEqual(server.transcript.map((t) => t.text));
    expect(view.entries.map((e) => e.speaker)).toEqual(server.transcript.map((t) => t.speaker));
    // kind badges distinguish slot questions from the gate question
    expect(view.entries.map((e) => e.badge)).toEqual([
      null, 'slot', null, 'slot', null, 'gate', null,
    ]);
    expect(view.status).toBe('finished');
    expect(view.inputDisabled).toBe(true);
  });

  it('sidebar mirrors server node states: 1 confirmed, 1 grayed dimension, 1 grayed aspect', async () => {
    const sessionId = await playInterview();
    const view = buildOntologyView(await api.getOntology(sessionId));

    expect(view.summary.confirmedSlots).toBe(1);
    expect(view.summary.grayedDimensions).toBe(1);
    expect(view.summary.grayedAspects).toBe(1);

    const interaction = view.aspects.find((a) => a.id === 'interaction')!;
    expect(interaction.grayed).toBe(false);
    const login = interaction.dimensions.find((d) => d.id === 'interaction.login')!;
    expect(login.grayed).toBe(true);
    expect(login.slots.map((s) => s.color)).toEqual(['rejected', 'pruned']);
    const style = view.aspects.find((a) => a.id === 'style')!;
    expect(style.grayed).toBe(true);
    expect(style.dimensions.every((d) => d.grayed)).toBe(true);
    const filtering = interaction.dimensions
      .flatMap((d) => d.slots)
      .find((s) => s.id === 'interaction.search.filtering-options')!;
    expect(filtering.color).toBe('confirmed');
  });

  it('export equals the requirements endpoint body', async () => {
    const sessionId = await playInterview();
    const exported = await exportRequirements(api, sessionId);
    expect(exported).toEqual(server.requirements());
    expect(JSON.parse(serializeRequirements(exported))).toEqual(server.requirements());
  });

  it('sidebar refreshes after every answer (polling contract)', async () => {
    const started = await api.startSession('onto-1', 'A stock site.');
    await api.sendAnswer(started.session_id, 'Yes, filters by sector please.');
    let view = buildOntologyView(await api.getOntology(started.session_id));
    expect(view.summary.confirmedSlots).toBe(1);
    expect(view.summary.grayedDimensions).toBe(0);

    await api.sendAnswer(started.session_id, 'No, the whole login area is unnecessary.');
    view = buildOntologyView(await api.getOntology(started.session_id));
    expect(view.summary.grayedDimensions).toBe(1);
    expect(view.summary.grayedAspects).toBe(0);
  });

  it('surfaces API errors with status codes', async () => {
    const sessionId = await playInterview();
    await expect(api.sendAnswer(sessionId, 'one more thing')).rejects.toThrowError(ApiError);
    await expect(api.sendAnswer(sessionId, 'one more thing')).rejects.toThrowError(/409/);
  });

  it('client never invents transcript entries while active', async () => {
    const started = await api.startSession('onto-1', 'A stock site.');
    const view = buildChatView(await api.getSession(started.session_id));
    expect(view.entries).toHaveLength(2); // initial + first question, nothing else
    expect(view.inputDisabled).toBe(false);
  });
});
