/** Typed client for the dialogue chat service HTTP protocol. */

export interface SessionInfo {
  session_id: string;
  task_card: string;
}

export interface TurnReply {
  utterance: string;
  acts: string[];
  status: string;
}

export interface QuestionnaireAnswers {
  q1: boolean;
  q2: boolean;
  q3: number;
  q4: number;
  q5: number;
  q6: number;
}

export interface SubmissionReceipt {
  status: string;
  completion_code: string;
}

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    detail: string,
  ) {
    super(detail);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, {
    headers: { "Content-Type": "application/json" },
    ...init,
  });
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    throw new ServiceError(
      response.status,
      (body as { error?: string }).error ?? "service_error",
      (body as { detail?: string }).detail ?? `HTTP ${response.status}`,
    );
  }
  return body as T;
}

export class ChatApi {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, "")}${path}`;
  }

  health(): Promise<{ status: string; pool_size: number }> {
    return request(this.url("/health"));
  }

  createSession(): Promise<SessionInfo> {
    return request(this.url("/session"), { method: "POST", body: "{}" });
  }

  sendTurn(sessionId: string, text: string): Promise<TurnReply> {
    return request(this.url(`/session/${sessionId}/turn`), {
      method: "POST",
      body: JSON.stringify({ text }),
    });
  }

  endSession(sessionId: string): Promise<{ status: string }> {
    return request(this.url(`/session/${sessionId}/end`), { method: "POST", body: "{}" });
  }

  submitQuestionnaire(
    sessionId: string,
    answers: QuestionnaireAnswers,
  ): Promise<SubmissionReceipt> {
    return request(this.url(`/session/${sessionId}/questionnaire`), {
      method: "POST",
      body: JSON.stringify(answers),
    });
  }
}
