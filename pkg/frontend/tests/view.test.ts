import { beforeEach, describe, expect, it, vi } from "vitest";
import type { Question, Recommendations } from "../src/api.js";
import { LIKERT_LEVELS } from "../src/likert.js";
import { renderQuestion, renderRecommendations, showError } from "../src/view.js";

function fakeQuestion(): Question {
  const ref = (i: number, title: string, score: number) => ({
    index: i,
    article_id: `a${i}`,
    title,
    score,
  });
  return {
    topic_index: 0,
    list_a: [ref(0, "Apples", 3.2), ref(1, "Apricots", 2.9), ref(2, "Avocados", 2.1)],
    list_b: [ref(3, "Basalt", -3.0), ref(4, "Bismuth", -2.4), ref(5, "Boron", -2.0)],
    cloud_a: ["fruit", "orchard", "harvest"],
    cloud_b: ["mineral", "crystal"],
    prompt:
      "Between lists A and B, which one contains more articles you would like to edit?",
  };
}

describe("question screen", () => {
  let root: HTMLElement;
  const handlers = () => ({ onSelect: vi.fn(), onBack: vi.fn(), onNext: vi.fn() });

  beforeEach(() => {
    root = document.createElement("div");
    document.body.replaceChildren(root);
  });

  it("shows both ranked title lists and both clouds", () => {
    renderQuestion(root, fakeQuestion(), 0, 20, undefined, "tok", handlers());
    const lists = root.querySelectorAll(".article-list ol");
    expect(lists).toHaveLength(2);
    expect([...lists[0].querySelectorAll("li")].map((li) => li.textContent)).toEqual([
      "Apples",
      "Apricots",
      "Avocados",
    ]);
    expect(lists[1].querySelectorAll("li")).toHaveLength(3);
    expect(root.querySelectorAll(".wordcloud")).toHaveLength(2);
    expect(root.querySelector(".prompt")?.textContent).toContain("Between lists A and B");
  });

  it("offers exactly the seven scale options as one radio group", () => {
    renderQuestion(root, fakeQuestion(), 0, 20, undefined, "tok", handlers());
    const radios = root.querySelectorAll<HTMLInputElement>('input[type="radio"]');
    expect(radios).toHaveLength(7);
    expect([...radios].map((r) => r.value)).toEqual([...LIKERT_LEVELS]);
    expect(new Set([...radios].map((r) => r.name)).size).toBe(1);

    radios[0].click();
    radios[5].click();
    const checked = root.querySelectorAll<HTMLInputElement>("input:checked");
    expect(checked).toHaveLength(1);
    expect(checked[0].value).toBe("B-moderate");
  });

  it("reports the picked level and pre-checks a prior answer", () => {
    const h = handlers();
    renderQuestion(root, fakeQuestion(), 2, 20, "A-slight", "tok", h);
    const checked = root.querySelector<HTMLInputElement>("input:checked");
    expect(checked?.value).toBe("A-slight");
    root.querySelectorAll<HTMLInputElement>("input")[6].click();
    expect(h.onSelect).toHaveBeenCalledWith("B-great");
  });

  it("shows progress as position / total and sizes the bar", () => {
    renderQuestion(root, fakeQuestion(), 4, 20, undefined, "tok", handlers());
    expect(root.querySelector(".progress-text")?.textContent).toBe("Question 5 of 20");
    expect(root.querySelector<HTMLElement>(".progress-bar")?.style.width).toBe("20%");
  });

  it("disables Back on the first question and labels the last one Finish", () => {
    renderQuestion(root, fakeQuestion(), 0, 3, undefined, "tok", handlers());
    const [back, next] = root.querySelectorAll("button");
    expect(back.disabled).toBe(true);
    expect(next.textContent).toBe("Next");
    renderQuestion(root, fakeQuestion(), 2, 3, undefined, "tok", handlers());
    expect(root.querySelectorAll("button")[1].textContent).toBe("Finish");
  });

  it("surfaces inline errors on the current screen", () => {
    renderQuestion(root, fakeQuestion(), 0, 3, undefined, "tok", handlers());
    const error = root.querySelector<HTMLElement>(".inline-error")!;
    expect(error.hidden).toBe(true);
    showError(root, "Pick one of the seven options to continue.");
    expect(error.hidden).toBe(false);
    expect(error.textContent).toContain("seven options");
  });
});

describe("recommendations screen", () => {
  const recs = (fallback: boolean): Recommendations => ({
    token: "tok",
    articles: [
      { article_id: "a1", title: "Lighthouses", score: 2.0 },
      { article_id: "a2", title: "Tidal power", score: 1.5 },
    ],
    method: fallback ? "view-pop" : "questionnaire",
    fallback,
  });

  it("renders the ranked article list", () => {
    const root = document.createElement("div");
    renderRecommendations(root, recs(false));
    const items = root.querySelectorAll(".recs li");
    expect(items).toHaveLength(2);
    expect(items[0].textContent).toBe("Lighthouses");
    expect(root.querySelector(".fallback-note")).toBeNull();
  });

  it("explains the fallback list when no preference was expressed", () => {
    const root = document.createElement("div");
    renderRecommendations(root, recs(true));
    expect(root.querySelector(".fallback-note")?.textContent).toMatch(/no preference/i);
    expect(root.querySelectorAll(".recs li")).toHaveLength(2);
  });
});
