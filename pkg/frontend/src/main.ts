import { ApiClient, ApiError, type Questionnaire } from "./api.js";
import type { LikertLevel } from "./likert.js";
import { SessionProgress } from "./state.js";
import {
  renderComparison,
  renderQuestion,
  renderRecommendations,
  renderThanks,
  showError,
} from "./view.js";

const TOKEN_KEY = "coldstartq.token";
const PROGRESS_KEY = "coldstartq.progress";
const COMPLETED_KEY = "coldstartq.completed";

/**
 * The whole questionnaire flow: create (or resume) a session, walk through
 * the questions one screen at a time, complete, and show recommendations —
 * plus the comparison screen when the service runs in comparison mode.
 *
 * Answers are pushed to the server as soon as they are picked; the local
 * SessionProgress mirror drives the UI and is snapshotted to storage so a
 * refresh lands the user back on the question they left, with the server
 * session still holding every acknowledged answer.
 */
export class App {
  private questionnaire!: Questionnaire;
  private progress!: SessionProgress;
  private token!: string;
  /** Serializes server calls so a fast clicker can't reorder responses. */
  private chain: Promise<void> = Promise.resolve();

  constructor(
    private readonly api: ApiClient,
    private readonly root: HTMLElement,
    private readonly storage: Storage,
  ) {}

  /** Resolves once every queued server interaction has settled. */
  idle(): Promise<void> {
    return this.chain;
  }

  private enqueue(step: () => Promise<void>): void {
    this.chain = this.chain.then(step);
  }

  async start(): Promise<void> {
    this.questionnaire = await this.api.questionnaire();

    const storedToken = this.storage.getItem(TOKEN_KEY);
    if (storedToken !== null && this.storage.getItem(COMPLETED_KEY) === "1") {
      this.token = storedToken;
      try {
        await this.finishScreen();
        return;
      } catch {
        this.clearStored(); // stale session (e.g. server log rotated); start over
      }
    }

    if (storedToken !== null) {
      this.token = storedToken;
      try {
        this.progress = SessionProgress.restore(
          JSON.parse(this.storage.getItem(PROGRESS_KEY) ?? ""),
        );
      } catch {
        this.clearStored();
      }
    }

    if (this.storage.getItem(TOKEN_KEY) === null) {
      const created = await this.api.createSession();
      this.token = created.token;
      this.progress = new SessionProgress(created.n_questions);
      this.storage.setItem(TOKEN_KEY, this.token);
      this.persist();
    }

    this.showQuestion();
  }

  private persist(): void {
    this.storage.setItem(PROGRESS_KEY, JSON.stringify(this.progress));
  }

  private clearStored(): void {
    this.storage.removeItem(TOKEN_KEY);
    this.storage.removeItem(PROGRESS_KEY);
    this.storage.removeItem(COMPLETED_KEY);
  }

  private showQuestion(): void {
    const index = this.progress.current;
    renderQuestion(
      this.root,
      this.questionnaire.questions[index],
      index,
      this.progress.nQuestions,
      this.progress.answerAt(index),
      this.token,
      {
        onSelect: (level) => this.enqueue(() => this.submit(index, level)),
        onBack: () => {
          this.progress.back();
          this.persist();
          this.showQuestion();
        },
        onNext: () => this.enqueue(() => this.advance()),
      },
    );
  }

  private async submit(index: number, level: LikertLevel): Promise<void> {
    this.progress.answer(index, level);
    this.persist();
    try {
      await this.api.submitResponse(this.token, index, level);
    } catch (err) {
      if (err instanceof ApiError) {
        showError(this.root, `Could not record the answer: ${err.message}`);
      } else {
        // network failure — the local answer is kept; retry resubmits it
        showError(this.root, "Network problem — your answer is saved locally.", () =>
          this.enqueue(() => this.submit(index, level)),
        );
      }
    }
  }

  private async advance(): Promise<void> {
    const index = this.progress.current;
    if (this.progress.answerAt(index) === undefined) {
      showError(this.root, "Pick one of the seven options to continue.");
      return;
    }
    if (index < this.progress.nQuestions - 1) {
      this.progress.next();
      this.persist();
      this.showQuestion();
      return;
    }
    const unanswered = this.progress.firstUnanswered();
    if (unanswered !== null) {
      this.progress.goTo(unanswered);
      this.persist();
      this.showQuestion();
      showError(this.root, `Question ${unanswered + 1} still needs an answer.`);
      return;
    }
    try {
      await this.api.complete(this.token);
      this.storage.setItem(COMPLETED_KEY, "1");
      await this.finishScreen();
    } catch (err) {
      if (err instanceof ApiError) {
        showError(this.root, `Could not finish the session: ${err.message}`);
      } else {
        showError(this.root, "Network problem — nothing was lost.", () =>
          this.enqueue(() => this.advance()),
        );
      }
    }
  }

  private async finishScreen(): Promise<void> {
    const recs = await this.api.recommendations(this.token, 5);
    renderRecommendations(this.root, recs);

    let comparison;
    try {
      comparison = await this.api.comparison(this.token);
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) return; // mode disabled
      throw err;
    }
    const section = document.createElement("section");
    section.className = "comparison";
    this.root.appendChild(section);
    renderComparison(section, comparison, (feedback) => {
      void this.api
        .submitFeedback(this.token, feedback)
        .then(() => renderThanks(section))
        .catch(() => showError(section, "Could not record feedback."));
    });
  }
}

const bootRoot = typeof document !== "undefined" ? document.getElementById("app") : null;
if (bootRoot !== null) {
  const app = new App(new ApiClient(""), bootRoot, window.localStorage);
  app.start().catch((err) => {
    bootRoot.textContent = `The questionnaire service is unavailable: ${err}`;
  });
}
