import type { LikertLevel } from "./likert.js";
import { isLikertLevel } from "./likert.js";

/**
 * Client-side questionnaire progress: which question is on screen and what
 * has been answered so far. Pure state — no DOM, no network — so the
 * navigation and supersede rules are unit-testable in isolation.
 *
 * The server session is the source of truth for acknowledged answers; this
 * mirror exists so the UI can show progress, allow back-navigation, and
 * survive a page refresh (the snapshot goes to localStorage alongside the
 * session token).
 */
export class SessionProgress {
  current = 0;
  private answers = new Map<number, LikertLevel>();

  constructor(public readonly nQuestions: number) {
    if (!Number.isInteger(nQuestions) || nQuestions <= 0) {
      throw new Error(`nQuestions must be a positive integer, got ${nQuestions}`);
    }
  }

  /** Record an answer. Returns true when it replaces an earlier one. */
  answer(index: number, level: LikertLevel): boolean {
    if (index < 0 || index >= this.nQuestions) {
      throw new RangeError(`question index ${index} out of range`);
    }
    const superseding = this.answers.has(index);
    this.answers.set(index, level);
    return superseding;
  }

  answerAt(index: number): LikertLevel | undefined {
    return this.answers.get(index);
  }

  answeredCount(): number {
    return this.answers.size;
  }

  /** Fraction answered, for the progress bar. */
  progress(): number {
    return this.answers.size / this.nQuestions;
  }

  allAnswered(): boolean {
    return this.answers.size === this.nQuestions;
  }

  firstUnanswered(): number | null {
    for (let i = 0; i < this.nQuestions; i++) {
      if (!this.answers.has(i)) return i;
    }
    return null;
  }

  next(): number {
    this.current = Math.min(this.current + 1, this.nQuestions - 1);
    return this.current;
  }

  back(): number {
    this.current = Math.max(this.current - 1, 0);
    return this.current;
  }

  goTo(index: number): number {
    if (index < 0 || index >= this.nQuestions) {
      throw new RangeError(`question index ${index} out of range`);
    }
    this.current = index;
    return this.current;
  }

  toJSON(): { nQuestions: number; current: number; answers: [number, string][] } {
    return {
      nQuestions: this.nQuestions,
      current: this.current,
      answers: [...this.answers.entries()],
    };
  }

  /** Rebuild from a toJSON snapshot; rejects malformed or tampered data. */
  static restore(raw: unknown): SessionProgress {
    if (typeof raw !== "object" || raw === null) {
      throw new Error("snapshot is not an object");
    }
    const obj = raw as { nQuestions?: unknown; current?: unknown; answers?: unknown };
    if (typeof obj.nQuestions !== "number" || !Array.isArray(obj.answers)) {
      throw new Error("snapshot missing fields");
    }
    const progress = new SessionProgress(obj.nQuestions);
    for (const entry of obj.answers) {
      if (!Array.isArray(entry) || entry.length !== 2) {
        throw new Error("snapshot answer entry malformed");
      }
      const [index, level] = entry as [unknown, unknown];
      if (typeof index !== "number" || typeof level !== "string" || !isLikertLevel(level)) {
        throw new Error("snapshot answer entry malformed");
      }
      progress.answer(index, level);
    }
    if (typeof obj.current === "number" && obj.current >= 0 && obj.current < obj.nQuestions) {
      progress.current = Math.floor(obj.current);
    }
    return progress;
  }
}
