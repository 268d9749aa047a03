/**
 * Token selection state for the annotator.
 *
 * Annotators click individual words; adjacent selected words inside one
 * sentence compose a single phrase, and deselecting a word in the middle
 * of a run splits it in two. Phrases are reported as half-open token
 * spans, exactly the shape the service stores.
 */

export interface TokenSpan {
  sentence: number;
  start_token: number;
  end_token: number; // exclusive
}

export interface Phrase extends TokenSpan {
  words: string[];
}

export interface SelectionWarning {
  kind: "long-phrase" | "too-few-phrases";
  message: string;
}

export const MAX_PHRASE_WORDS = 10;
export const RECOMMENDED_MIN_PHRASES = 20;

export class SelectionState {
  private selected: boolean[][];
  private tokens: string[][];

  constructor(sentenceTokens: string[][]) {
    this.tokens = sentenceTokens;
    this.selected = sentenceTokens.map((toks) => toks.map(() => false));
  }

  isSelected(sentence: number, index: number): boolean {
    return this.selected[sentence]?.[index] ?? false;
  }

  toggle(sentence: number, index: number): void {
    const row = this.selected[sentence];
    if (row === undefined || index < 0 || index >= row.length) {
      throw new RangeError(`token (${sentence}, ${index}) outside story`);
    }
    row[index] = !row[index];
  }

  clear(): void {
    this.selected = this.selected.map((row) => row.map(() => false));
  }

  /** Maximal runs of selected adjacent tokens, in reading order. */
  phrases(): Phrase[] {
    const out: Phrase[] = [];
    this.selected.forEach((row, sentence) => {
      let start = -1;
      for (let i = 0; i <= row.length; i++) {
        const on = i < row.length && row[i];
        if (on && start < 0) {
          start = i;
        } else if (!on && start >= 0) {
          out.push({
            sentence,
            start_token: start,
            end_token: i,
            words: this.tokens[sentence].slice(start, i),
          });
          start = -1;
        }
      }
    });
    return out;
  }

  /** Spans in the submission wire format (no word payload). */
  spans(): TokenSpan[] {
    return this.phrases().map(({ sentence, start_token, end_token }) => ({
      sentence,
      start_token,
      end_token,
    }));
  }

  selectedCount(): number {
    return this.selected.reduce(
      (acc, row) => acc + row.filter(Boolean).length,
      0,
    );
  }
}

/**
 * Client-side quality warnings. These only warn: the submission still goes
 * through, and the server applies the authoritative screening on export.
 */
export function selectionWarnings(phrases: Phrase[]): SelectionWarning[] {
  const warnings: SelectionWarning[] = [];
  for (const p of phrases) {
    if (p.words.length > MAX_PHRASE_WORDS) {
      warnings.push({
        kind: "long-phrase",
        message:
          `"${p.words.slice(0, 3).join(" ")}…" has ${p.words.length} words; ` +
          `phrases longer than ${MAX_PHRASE_WORDS} words are usually rejected`,
      });
    }
  }
  if (phrases.length > 0 && phrases.length < RECOMMENDED_MIN_PHRASES) {
    warnings.push({
      kind: "too-few-phrases",
      message:
        `${phrases.length} phrase${phrases.length === 1 ? "" : "s"} selected; ` +
        `at least ${RECOMMENDED_MIN_PHRASES} different phrases are recommended`,
    });
  }
  return warnings;
}
