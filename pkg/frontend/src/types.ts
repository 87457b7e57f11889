// Payload shapes of the session service this UI is a pure view over.

export type Speaker = 'agent' | 'stakeholder';

export type TurnKind =
  | 'initial'
  | 'slot_question'
  | 'gate_question'
  | 'freeform_question'
  | 'answer';

export interface TranscriptTurn {
  speaker: Speaker;
  text: string;
  kind: TurnKind;
  node_id: string | null;
}

export interface StartSessionResponse {
  session_id: string;
  question: string;
  question_kind: 'slot' | 'gate';
  node_id: string | null;
}

export interface AnswerResponse {
  done: boolean;
  elicited_count: number;
  ontology_digest: string;
  question?: string;
  question_kind?: 'slot' | 'gate';
  node_id?: string | null;
  finish_reason?: string;
}

export interface SessionView {
  session_id: string;
  status: 'active' | 'finished';
  finish_reason: string | null;
  turn: number;
  max_turns: number;
  elicited_count: number;
  transcript: TranscriptTurn[];
}

export type SlotStateLabel = 'unexplored' | 'confirmed' | 'rejected' | 'pruned';

export interface SlotDoc {
  id: string;
  key: string;
  question: string;
  question_form: 'binary' | 'open';
  state: SlotStateLabel;
  score: number;
}

export interface DimensionDoc {
  id: string;
  name: string;
  pruned: boolean;
  score: number;
  slots: SlotDoc[];
}

export interface AspectDoc {
  id: string;
  name: string;
  pruned: boolean;
  score: number;
  dimensions: DimensionDoc[];
}

export interface OntologyDoc {
  domain_name: string;
  version: number;
  aspects: AspectDoc[];
}

export interface Requirement {
  slot_id: string;
  key: string;
  excerpt: string;
  turn: number;
}

export interface RequirementsResponse {
  session_id: string;
  requirements: Requirement[];
}
