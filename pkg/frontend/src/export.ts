// Requirements export: a faithful pass-through of the server's payload.

import type { SessionApi } from './api';
import type { RequirementsResponse } from './types';

export async function exportRequirements(
  api: SessionApi,
  sessionId: string,
): Promise<RequirementsResponse> {
  // the exported document IS the endpoint body; nothing is reshaped
  return api.getRequirements(sessionId);
}

export function requirementsFilename(sessionId: string): string {
  return `requirements-${sessionId}.json`;
}

export function serializeRequirements(body: RequirementsResponse): string {
  return JSON.stringify(body, null, 2) + '\n';
}
