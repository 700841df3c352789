import type { LikertLevel } from "./likert.js";

export type ArticleRef = {
  index: number;
  article_id: string;
  title: string;
  score: number;
};

export type Question = {
  topic_index: number;
  list_a: ArticleRef[];
  list_b: ArticleRef[];
  cloud_a: string[];
  cloud_b: string[];
  prompt: string;
};

export type Questionnaire = {
  format: string;
  method: string;
  n_per_list: number;
  questions: Question[];
};

export type SessionCreated = { token: string; n_questions: number };

export type ResponseAck = {
  token: string;
  question_index: number;
  level: LikertLevel;
  n_answered: number;
  superseded: boolean;
};

export type CompleteAck = {
  token: string;
  completed: boolean;
  n_answered: number;
  n_filled: number;
};

export type RecommendedArticle = { article_id: string; title: string; score: number };

export type Recommendations = {
  token: string;
  articles: RecommendedArticle[];
  method: string;
  fallback: boolean;
};

export type Comparison = {
  token: string;
  list_1: RecommendedArticle[];
  list_2: RecommendedArticle[];
  prompts: string[];
};

export type ListChoice = "list_1" | "list_2";

export type Feedback = {
  reading: ListChoice;
  editing: ListChoice;
  neither: ListChoice;
};

/** Server rejected the request (4xx/5xx). Distinct from network failure,
 * which surfaces as the fetch rejection itself. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

async function parseOrThrow<T>(res: Response): Promise<T> {
  if (!res.ok) {
    let detail = res.statusText;
    try {
      const body = await res.json();
      if (body && typeof body.detail === "string") detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(res.status, detail);
  }
  return (await res.json()) as T;
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async health(): Promise<{ status: string; bundle_loaded: boolean }> {
    return parseOrThrow(await fetch(this.url("/healthz")));
  }

  async questionnaire(): Promise<Questionnaire> {
    return parseOrThrow(await fetch(this.url("/api/v1/questionnaire")));
  }

  async createSession(): Promise<SessionCreated> {
    return parseOrThrow(await fetch(this.url("/api/v1/sessions"), { method: "POST" }));
  }

  async submitResponse(
    token: string,
    questionIndex: number,
    level: LikertLevel,
  ): Promise<ResponseAck> {
    return parseOrThrow(
      await fetch(this.url(`/api/v1/sessions/${token}/responses`), {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ question_index: questionIndex, level }),
      }),
    );
  }

  async complete(token: string, fillUnanswered = false): Promise<CompleteAck> {
    return parseOrThrow(
      await fetch(this.url(`/api/v1/sessions/${token}/complete`), {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(fillUnanswered ? { fill_unanswered: true } : {}),
      }),
    );
  }

  async recommendations(token: string, k = 5): Promise<Recommendations> {
    return parseOrThrow(
      await fetch(this.url(`/api/v1/sessions/${token}/recommendations?k=${k}`)),
    );
  }

  async comparison(token: string): Promise<Comparison> {
    return parseOrThrow(await fetch(this.url(`/api/v1/sessions/${token}/comparison`)));
  }

  async submitFeedback(token: string, feedback: Feedback): Promise<{ recorded: boolean }> {
    return parseOrThrow(
      await fetch(this.url(`/api/v1/sessions/${token}/comparison`), {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(feedback),
      }),
    );
  }
}
