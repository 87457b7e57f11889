// Typed client for the session service. Every interview decision lives on
// the server; this client only moves payloads.

import type {
  AnswerResponse,
  OntologyDoc,
  RequirementsResponse,
  SessionView,
  StartSessionResponse,
} from './types';

export class ApiError extends Error {
  constructor(public readonly status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

type FetchLike = typeof fetch;

export class SessionApi {
  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    const body = await response.json().catch(() => ({}));
    if (!response.ok) {
      const detail = typeof body?.detail === 'string' ? body.detail : JSON.stringify(body);
      throw new ApiError(response.status, detail);
    }
    return body as T;
  }

  startSession(ontologyId: string, initialDescription: string): Promise<StartSessionResponse> {
    return this.request<StartSessionResponse>('/sessions', {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ ontology_id: ontologyId, initial_description: initialDescription }),
    });
  }

  sendAnswer(sessionId: string, text: string): Promise<AnswerResponse> {
    return this.request<AnswerResponse>(`/sessions/${sessionId}/answers`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ text }),
    });
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.request<SessionView>(`/sessions/${sessionId}`);
  }

  getOntology(sessionId: string): Promise<OntologyDoc> {
    return this.request<OntologyDoc>(`/sessions/${sessionId}/ontology`);
  }

  getRequirements(sessionId: string): Promise<RequirementsResponse> {
    return this.request<RequirementsResponse>(`/sessions/${sessionId}/requirements`);
  }
}
