import { describe, expect, it } from "vitest";

import {
  MAX_PHRASE_WORDS,
  RECOMMENDED_MIN_PHRASES,
  SelectionState,
  selectionWarnings,
} from "../src/selection.js";

const STORY = [
  ["Google", "founder", "hopes", "to", "prove", "himself"],
  ["Larry", "Page", "takes", "over", "as", "chief", "on", "Monday"],
  ["Investors", "worry", "about", "the", "transition"],
];

describe("SelectionState", () => {
  it("starts with nothing selected", () => {
    const state = new SelectionState(STORY);
    expect(state.phrases()).toEqual([]);
    expect(state.selectedCount()).toBe(0);
  });

  it("composes adjacent clicks into one phrase", () => {
    const state = new SelectionState(STORY);
    state.toggle(1, 0);
    state.toggle(1, 1);
    expect(state.phrases()).toEqual([
      { sentence: 1, start_token: 0, end_token: 2, words: ["Larry", "Page"] },
    ]);
  });

  it("keeps non-adjacent clicks as separate phrases", () => {
    const state = new SelectionState(STORY);
    state.toggle(0, 0);
    state.toggle(0, 2);
    expect(state.phrases()).toHaveLength(2);
    expect(state.phrases().map((p) => p.words)).toEqual([["Google"], ["hopes"]]);
  });

  it("does not merge runs across sentences", () => {
    const state = new SelectionState(STORY);
    state.toggle(0, 5);
    state.toggle(1, 0);
    expect(state.phrases()).toHaveLength(2);
  });

  it("splits a run when a middle token is deselected", () => {
    const state = new SelectionState(STORY);
    [2, 3, 4].forEach((i) => state.toggle(1, i));
    expect(state.phrases()).toHaveLength(1);
    state.toggle(1, 3);
    const phrases = state.phrases();
    expect(phrases).toHaveLength(2);
    expect(phrases.map((p) => p.words)).toEqual([["takes"], ["as"]]);
  });

  it("round-trips spans through the wire format unchanged", () => {
    const state = new SelectionState(STORY);
    state.toggle(1, 0);
    state.toggle(1, 1);
    state.toggle(2, 0);
    const spans = state.spans();
    expect(spans).toEqual([
      { sentence: 1, start_token: 0, end_token: 2 },
      { sentence: 2, start_token: 0, end_token: 1 },
    ]);
    // what the server stores is exactly what the phrases view shows
    const fromSpans = spans.map((s) =>
      STORY[s.sentence].slice(s.start_token, s.end_token),
    );
    expect(fromSpans).toEqual(state.phrases().map((p) => p.words));
  });

  it("rejects clicks outside the story", () => {
    const state = new SelectionState(STORY);
    expect(() => state.toggle(9, 0)).toThrow(RangeError);
    expect(() => state.toggle(0, 99)).toThrow(RangeError);
  });

  it("clear resets every token", () => {
    const state = new SelectionState(STORY);
    state.toggle(0, 0);
    state.clear();
    expect(state.selectedCount()).toBe(0);
  });
});

describe("selectionWarnings", () => {
  const sentence = Array.from({ length: 40 }, (_, i) => `w${i}`);

  it("warns on phrases longer than the limit but does not block", () => {
    const state = new SelectionState([sentence]);
    for (let i = 0; i < MAX_PHRASE_WORDS + 1; i++) state.toggle(0, i);
    const warnings = selectionWarnings(state.phrases());
    expect(warnings.some((w) => w.kind === "long-phrase")).toBe(true);
    // the span itself is still submittable
    expect(state.spans()).toHaveLength(1);
  });

  it("warns when fewer than the recommended phrase count is selected", () => {
    const state = new SelectionState([sentence]);
    state.toggle(0, 0);
    const warnings = selectionWarnings(state.phrases());
    expect(warnings.some((w) => w.kind === "too-few-phrases")).toBe(true);
  });

  it("stays quiet at the recommended count", () => {
    const state = new SelectionState([sentence]);
    for (let i = 0; i < RECOMMENDED_MIN_PHRASES * 2; i += 2) {
      state.toggle(0, i);
    }
    expect(state.phrases()).toHaveLength(RECOMMENDED_MIN_PHRASES);
    expect(selectionWarnings(state.phrases())).toEqual([]);
  });
});
