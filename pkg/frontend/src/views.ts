// Pure view models: everything rendered is computed from fetched server
// state, never inferred client-side.

import type { OntologyDoc, SessionView, TranscriptTurn } from './types';

export interface ChatEntry {
  speaker: 'agent' | 'stakeholder';
  text: string;
  badge: 'slot' | 'gate' | null;
}

export interface ChatView {
  entries: ChatEntry[];
  status: 'active' | 'finished';
  finishReason: string | null;
  inputDisabled: boolean;
  elicitedCount: number;
}

const BADGES: Record<string, 'slot' | 'gate' | null> = {
  slot_question: 'slot',
  gate_question: 'gate',
  freeform_question: null,
  initial: null,
  answer: null,
};

export function buildChatView(session: SessionView): ChatView {
  return {
    entries: session.transcript.map((turn: TranscriptTurn) => ({
      speaker: turn.speaker,
      text: turn.text,
      badge: BADGES[turn.kind] ?? null,
    })),
    status: session.status,
    finishReason: session.finish_reason,
    inputDisabled: session.status === 'finished',
    elicitedCount: session.elicited_count,
  };
}

export type NodeColor = 'unexplored' | 'confirmed' | 'rejected' | 'pruned';

export interface SlotView {
  id: string;
  label: string;
  color: NodeColor;
  grayed: boolean;
}

export interface DimensionView {
  id: string;
  label: string;
  grayed: boolean;
  slots: SlotView[];
}

export interface AspectView {
  id: string;
  label: string;
  grayed: boolean;
  dimensions: DimensionView[];
}

export interface OntologySummary {
  confirmedSlots: number;
  rejectedSlots: number;
  prunedSlots: number;
  grayedAspects: number;
  /** dimensions pruned on their own, not via a pruned parent aspect */
  grayedDimensions: number;
}

export interface OntologyView {
  domain: string;
  version: number;
  aspects: AspectView[];
  summary: OntologySummary;
}

export function buildOntologyView(doc: OntologyDoc): OntologyView {
  const summary: OntologySummary = {
    confirmedSlots: 0,
    rejectedSlots: 0,
    prunedSlots: 0,
    grayedAspects: 0,
    grayedDimensions: 0,
  };
  const aspects = doc.aspects.map((aspect) => {
    if (aspect.pruned) summary.grayedAspects += 1;
    const dimensions = aspect.dimensions.map((dim) => {
      if (dim.pruned && !aspect.pruned) summary.grayedDimensions += 1;
      const slots = dim.slots.map((slot) => {
        if (slot.state === 'confirmed') summary.confirmedSlots += 1;
        if (slot.state === 'rejected') summary.rejectedSlots += 1;
        if (slot.state === 'pruned') summary.prunedSlots += 1;
        return {
          id: slot.id,
          label: slot.key,
          color: slot.state,
          grayed: slot.state === 'pruned' || dim.pruned || aspect.pruned,
        };
      });
      return {
        id: dim.id,
        label: dim.name,
        grayed: dim.pruned || aspect.pruned,
        slots,
      };
    });
    return { id: aspect.id, label: aspect.name, grayed: aspect.pruned, dimensions };
  });
  return { domain: doc.domain_name, version: doc.version, aspects, summary };
}
