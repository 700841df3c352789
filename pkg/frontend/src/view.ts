import type { Comparison, Question, Recommendations, ListChoice, Feedback } from "./api.js";
import { LIKERT_LEVELS, LIKERT_LABELS, type LikertLevel } from "./likert.js";
import { renderCloud } from "./wordcloud.js";

/** One question per screen: prompt, the two ranked title lists with their
 * word clouds, the 7-point scale, progress, and back/next controls. */
export type QuestionHandlers = {
  onSelect: (level: LikertLevel) => void;
  onBack: () => void;
  onNext: () => void;
};

function articleList(label: string, titles: string[]): HTMLElement {
  const box = document.createElement("div");
  box.className = "article-list";
  const heading = document.createElement("h3");
  heading.textContent = `List ${label}`;
  box.appendChild(heading);
  const ol = document.createElement("ol");
  for (const title of titles) {
    const li = document.createElement("li");
    li.textContent = title;
    ol.appendChild(li);
  }
  box.appendChild(ol);
  return box;
}

export function renderQuestion(
  root: HTMLElement,
  question: Question,
  index: number,
  nQuestions: number,
  selected: LikertLevel | undefined,
  seed: string,
  handlers: QuestionHandlers,
): void {
  root.replaceChildren();

  const progress = document.createElement("div");
  progress.className = "progress";
  const bar = document.createElement("div");
  bar.className = "progress-bar";
  bar.style.width = `${Math.round((index / nQuestions) * 100)}%`;
  progress.appendChild(bar);
  const counter = document.createElement("span");
  counter.className = "progress-text";
  counter.textContent = `Question ${index + 1} of ${nQuestions}`;
  root.appendChild(progress);
  root.appendChild(counter);

  const prompt = document.createElement("p");
  prompt.className = "prompt";
  prompt.textContent = question.prompt;
  root.appendChild(prompt);

  const columns = document.createElement("div");
  columns.className = "columns";
  const colA = document.createElement("div");
  colA.appendChild(articleList("A", question.list_a.map((a) => a.title)));
  if (question.cloud_a.length > 0) colA.appendChild(renderCloud(question.cloud_a, `${seed}:a${index}`));
  const colB = document.createElement("div");
  colB.appendChild(articleList("B", question.list_b.map((a) => a.title)));
  if (question.cloud_b.length > 0) colB.appendChild(renderCloud(question.cloud_b, `${seed}:b${index}`));
  columns.appendChild(colA);
  columns.appendChild(colB);
  root.appendChild(columns);

  const scale = document.createElement("fieldset");
  scale.className = "likert";
  for (const level of LIKERT_LEVELS) {
    const wrap = document.createElement("label");
    const input = document.createElement("input");
    input.type = "radio";
    input.name = "likert";
    input.value = level;
    input.checked = level === selected;
    input.addEventListener("change", () => handlers.onSelect(level));
    wrap.appendChild(input);
    wrap.appendChild(document.createTextNode(LIKERT_LABELS[level]));
    scale.appendChild(wrap);
  }
  root.appendChild(scale);

  const nav = document.createElement("div");
  nav.className = "nav";
  const back = document.createElement("button");
  back.textContent = "Back";
  back.disabled = index === 0;
  back.addEventListener("click", handlers.onBack);
  const next = document.createElement("button");
  next.textContent = index === nQuestions - 1 ? "Finish" : "Next";
  next.className = "next";
  next.addEventListener("click", handlers.onNext);
  nav.appendChild(back);
  nav.appendChild(next);
  root.appendChild(nav);

  const error = document.createElement("p");
  error.className = "inline-error";
  error.hidden = true;
  root.appendChild(error);
}

export function showError(root: HTMLElement, message: string, retry?: () => void): void {
  const el = root.querySelector<HTMLElement>(".inline-error");
  if (el === null) {
    // no question on screen; fall back to a standalone error block
    const block = document.createElement("p");
    block.className = "inline-error";
    block.textContent = message;
    root.appendChild(block);
    if (retry) {
      const btn = document.createElement("button");
      btn.className = "retry";
      btn.textContent = "Retry";
      btn.addEventListener("click", retry, { once: true });
      root.appendChild(btn);
    }
    return;
  }
  el.textContent = message;
  el.hidden = false;
  if (retry) {
    const btn = document.createElement("button");
    btn.className = "retry";
    btn.textContent = "Retry";
    btn.addEventListener("click", retry, { once: true });
    el.appendChild(btn);
  }
}

export function renderRecommendations(root: HTMLElement, recs: Recommendations): void {
  root.replaceChildren();
  const heading = document.createElement("h2");
  heading.textContent = "Articles you might want to work on";
  root.appendChild(heading);

  if (recs.fallback) {
    const note = document.createElement("p");
    note.className = "fallback-note";
    note.textContent =
      "You expressed no preference on any question, so this list simply " +
      "shows widely read articles rather than a personalized selection.";
    root.appendChild(note);
  }

  const ol = document.createElement("ol");
  ol.className = "recs";
  for (const article of recs.articles) {
    const li = document.createElement("li");
    li.textContent = article.title;
    li.dataset.articleId = article.article_id;
    ol.appendChild(li);
  }
  root.appendChild(ol);
}

/** Comparison screen: the two unlabeled lists side by side and the three
 * which-list-do-you-prefer prompts, each a list_1/list_2 radio pair. */
export function renderComparison(
  root: HTMLElement,
  comparison: Comparison,
  onSubmit: (feedback: Feedback) => void,
): void {
  root.replaceChildren();
  const heading = document.createElement("h2");
  heading.textContent = "Which list serves you better?";
  root.appendChild(heading);

  const columns = document.createElement("div");
  columns.className = "columns";
  columns.appendChild(articleList("1", comparison.list_1.map((a) => a.title)));
  columns.appendChild(articleList("2", comparison.list_2.map((a) => a.title)));
  root.appendChild(columns);

  const keys: (keyof Feedback)[] = ["reading", "editing", "neither"];
  comparison.prompts.forEach((text, i) => {
    const block = document.createElement("fieldset");
    block.className = "feedback-prompt";
    const legend = document.createElement("legend");
    legend.textContent = text;
    block.appendChild(legend);
    for (const choice of ["list_1", "list_2"] as ListChoice[]) {
      const wrap = document.createElement("label");
      const input = document.createElement("input");
      input.type = "radio";
      input.name = `feedback-${keys[i]}`;
      input.value = choice;
      wrap.appendChild(input);
      wrap.appendChild(document.createTextNode(choice === "list_1" ? "List 1" : "List 2"));
      block.appendChild(wrap);
    }
    root.appendChild(block);
  });

  const submit = document.createElement("button");
  submit.className = "submit-feedback";
  submit.textContent = "Submit";
  submit.addEventListener("click", () => {
    const picked: Partial<Feedback> = {};
    for (const key of keys) {
      const checked = root.querySelector<HTMLInputElement>(
        `input[name="feedback-${key}"]:checked`,
      );
      if (checked === null) return; // all three required; stay on screen
      picked[key] = checked.value as ListChoice;
    }
    onSubmit(picked as Feedback);
  });
  root.appendChild(submit);
}

export function renderThanks(root: HTMLElement): void {
  root.replaceChildren();
  const p = document.createElement("p");
  p.className = "thanks";
  p.textContent = "Feedback recorded — thank you.";
  root.appendChild(p);
}
