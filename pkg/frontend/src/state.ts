/** Session state machine: chatting -> ended -> questionnaire -> done.
 *
 * Turn requests are serialized through a queue so rapid sends arrive in
 * order; a failed send is marked unsent and can be retried. No transition
 * ever skips a phase or goes backwards.
 */

import { ChatApi, QuestionnaireAnswers } from "./api.js";

export type Phase = "idle" | "connecting" | "chatting" | "ended" | "questionnaire" | "done";

export interface TranscriptEntry {
  speaker: "user" | "system";
  text: string;
  timestamp: number;
  pending?: boolean;
  failed?: boolean;
}

export interface UiSessionView {
  phase: Phase;
  sessionId: string | null;
  taskCard: string;
  transcript: TranscriptEntry[];
  error: string | null;
  completionCode: string | null;
}

export const LIKERT_MIN_LABEL = "Strongly disagree";
export const LIKERT_MAX_LABEL = "Strongly agree";

export const QUESTIONS: { key: keyof QuestionnaireAnswers; text: string; kind: "yesno" | "likert" }[] = [
  { key: "q1", text: "The system recommended a restaurant that matched my constraints.", kind: "yesno" },
  { key: "q2", text: "I got all the information I was looking for.", kind: "yesno" },
  { key: "q3", text: "The system understood what I was saying.", kind: "likert" },
  { key: "q4", text: "The system recognised my speech well.", kind: "likert" },
  { key: "q5", text: "The system's responses were appropriate.", kind: "likert" },
  { key: "q6", text: "The conversation felt natural.", kind: "likert" },
];

type Listener = (view: UiSessionView) => void;

export class SessionStore {
  private view: UiSessionView = {
    phase: "idle",
    sessionId: null,
    taskCard: "",
    transcript: [],
    error: null,
    completionCode: null,
  };
  private listeners: Listener[] = [];
  private sendChain: Promise<unknown> = Promise.resolve();
  readonly draft: Partial<QuestionnaireAnswers> = {};

  constructor(private readonly api: ChatApi) {}

  snapshot(): UiSessionView {
    return {
      ...this.view,
      transcript: this.view.transcript.map((entry) => ({ ...entry })),
    };
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    listener(this.snapshot());
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private update(changes: Partial<UiSessionView>): void {
    this.view = { ...this.view, ...changes };
    for (const listener of this.listeners) listener(this.snapshot());
  }

  async startConversation(): Promise<void> {
    if (this.view.phase !== "idle" && this.view.phase !== "connecting") {
      throw new Error(`cannot start from phase ${this.view.phase}`);
    }
    this.update({ phase: "connecting", error: null });
    try {
      const session = await this.api.createSession();
      this.update({
        phase: "chatting",
        sessionId: session.session_id,
        taskCard: session.task_card,
        transcript: [],
      });
    } catch (err) {
      // no phantom session: stay restartable with a visible error
      this.update({ phase: "idle", error: describe(err) });
      throw err;
    }
  }

  /** Queue one user turn; resolves when the system reply is displayed. */
  sendTurn(text: string): Promise<void> {
    const trimmed = text.trim();
    if (this.view.phase !== "chatting") {
      return Promise.reject(new Error(`cannot send in phase ${this.view.phase}`));
    }
    if (!trimmed) {
      return Promise.reject(new Error("cannot send empty text"));
    }
    const run = async () => {
      if (this.view.phase !== "chatting") return; // hung up while queued
      const entry: TranscriptEntry = {
        speaker: "user",
        text: trimmed,
        timestamp: Date.now(),
        pending: true,
      };
      this.update({ transcript: [...this.view.transcript, entry] });
      try {
        const reply = await this.api.sendTurn(this.view.sessionId!, trimmed);
        const transcript = this.view.transcript.map((e) =>
          e === entry ? { ...e, pending: false } : e,
        );
        transcript.push({ speaker: "system", text: reply.utterance, timestamp: Date.now() });
        this.update({ transcript, error: null });
      } catch (err) {
        const transcript = this.view.transcript.map((e) =>
          e === entry ? { ...e, pending: false, failed: true } : e,
        );
        this.update({ transcript, error: describe(err) });
        throw err;
      }
    };
    const queued = this.sendChain.then(run, run);
    this.sendChain = queued.catch(() => undefined);
    return queued;
  }

  async hangUp(): Promise<void> {
    if (this.view.phase !== "chatting") {
      throw new Error(`cannot hang up in phase ${this.view.phase}`);
    }
    await this.sendChain.catch(() => undefined); // let in-flight turns settle
    await this.api.endSession(this.view.sessionId!);
    this.update({ phase: "ended", error: null });
    this.update({ phase: "questionnaire" });
  }

  answersComplete(): boolean {
    return QUESTIONS.every(({ key, kind }) => {
      const value = this.draft[key];
      if (kind === "yesno") return typeof value === "boolean";
      return typeof value === "number" && value >= 1 && value <= 6;
    });
  }

  async submitQuestionnaire(): Promise<void> {
    if (this.view.phase !== "questionnaire") {
      throw new Error(`cannot submit in phase ${this.view.phase}`);
    }
    if (!this.answersComplete()) {
      throw new Error("questionnaire incomplete");
    }
    const receipt = await this.api.submitQuestionnaire(
      this.view.sessionId!,
      this.draft as QuestionnaireAnswers,
    );
    this.update({ phase: "done", completionCode: receipt.completion_code, error: null });
  }
}

function describe(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}
