/**
 * Annotator view: guidelines, a clickable tokenized story, a live phrase
 * list with quality warnings, an elapsed timer, and submission handling.
 */

import {
  ConflictError,
  NoStoriesError,
  fetchNextStory,
  submitAnnotations,
  type NextStoryResponse,
} from "./api.js";
import {
  SelectionState,
  selectionWarnings,
  type Phrase,
} from "./selection.js";

export class AnnotatorApp {
  private root: HTMLElement;
  private worker: string;
  private state: SelectionState | null = null;
  private story: NextStoryResponse | null = null;
  private startedAt = 0;
  private timerHandle: number | undefined;

  constructor(root: HTMLElement, worker: string) {
    this.root = root;
    this.worker = worker;
  }

  async start(): Promise<void> {
    this.renderMessage("Loading story…");
    try {
      this.story = await fetchNextStory(this.worker);
    } catch (err) {
      if (err instanceof NoStoriesError) {
        this.renderMessage("All stories are annotated. Thank you!");
        return;
      }
      this.renderRetry(`Could not load a story: ${(err as Error).message}`);
      return;
    }
    this.state = new SelectionState(
      this.story.story.sentences.map((s) => s.tokens),
    );
    this.startedAt = Date.now();
    this.renderStory();
    this.timerHandle = window.setInterval(() => this.updateTimer(), 1000);
  }

  private renderMessage(text: string): void {
    this.root.innerHTML = "";
    const p = document.createElement("p");
    p.className = "status";
    p.textContent = text;
    this.root.appendChild(p);
  }

  private renderRetry(text: string): void {
    this.renderMessage(text);
    const button = document.createElement("button");
    button.textContent = "Retry";
    button.addEventListener("click", () => void this.start());
    this.root.appendChild(button);
  }

  private renderStory(): void {
    if (!this.story || !this.state) return;
    this.root.innerHTML = "";

    const guidelines = document.createElement("div");
    guidelines.className = "guidelines";
    const heading = document.createElement("h2");
    heading.textContent = "Guidelines";
    guidelines.appendChild(heading);
    for (const line of this.story.guidelines.split("\n")) {
      if (!line.trim()) continue;
      const li = document.createElement("p");
      li.textContent = line;
      guidelines.appendChild(li);
    }
    this.root.appendChild(guidelines);

    const meta = document.createElement("div");
    meta.className = "meta";
    meta.innerHTML =
      `<span id="timer">0:00</span> · worker <strong>${this.worker}</strong>` +
      ` · category ${this.story.story.category}`;
    this.root.appendChild(meta);

    const article = document.createElement("article");
    article.className = "story";
    for (const sentence of this.story.story.sentences) {
      const block = document.createElement(sentence.from_title ? "h1" : "p");
      sentence.tokens.forEach((token, i) => {
        const span = document.createElement("span");
        span.className = "token";
        span.textContent = token;
        span.dataset.sentence = String(sentence.index);
        span.dataset.index = String(i);
        span.addEventListener("click", () => {
          this.state!.toggle(sentence.index, i);
          span.classList.toggle("selected");
          this.refreshSidebar();
        });
        block.appendChild(span);
        block.appendChild(document.createTextNode(" "));
      });
      article.appendChild(block);
    }
    this.root.appendChild(article);

    const sidebar = document.createElement("aside");
    sidebar.id = "sidebar";
    this.root.appendChild(sidebar);

    const submit = document.createElement("button");
    submit.id = "submit";
    submit.textContent = "Submit annotations";
    submit.addEventListener("click", () => void this.submit());
    this.root.appendChild(submit);

    this.refreshSidebar();
  }

  private refreshSidebar(): void {
    const sidebar = this.root.querySelector("#sidebar");
    if (!sidebar || !this.state) return;
    sidebar.innerHTML = "";
    const phrases = this.state.phrases();

    const heading = document.createElement("h2");
    heading.textContent = `Selected phrases (${phrases.length})`;
    sidebar.appendChild(heading);

    const list = document.createElement("ul");
    for (const p of phrases) {
      const li = document.createElement("li");
      li.textContent = p.words.join(" ");
      list.appendChild(li);
    }
    sidebar.appendChild(list);

    for (const warning of selectionWarnings(phrases)) {
      const div = document.createElement("div");
      div.className = "warning";
      div.textContent = warning.message;
      sidebar.appendChild(div);
    }
  }

  private updateTimer(): void {
    const el = this.root.querySelector("#timer");
    if (!el) return;
    const seconds = Math.floor((Date.now() - this.startedAt) / 1000);
    const mm = Math.floor(seconds / 60);
    const ss = String(seconds % 60).padStart(2, "0");
    el.textContent = `${mm}:${ss}`;
  }

  private async submit(): Promise<void> {
    if (!this.story || !this.state) return;
    const phrases: Phrase[] = this.state.phrases();
    if (phrases.length === 0) {
      this.flash("Select at least one phrase before submitting.");
      return;
    }
    try {
      await submitAnnotations(
        this.story.story.story_id,
        this.worker,
        this.state.spans(),
      );
    } catch (err) {
      if (err instanceof ConflictError) {
        this.stopTimer();
        this.renderMessage(
          "This story was already submitted from this worker id.",
        );
        return;
      }
      this.flash(`Submission failed, please retry: ${(err as Error).message}`);
      return;
    }
    this.stopTimer();
    this.renderMessage("Submitted. Thank you!");
    const next = document.createElement("button");
    next.textContent = "Annotate another story";
    next.addEventListener("click", () => void this.start());
    this.root.appendChild(next);
  }

  private flash(message: string): void {
    const sidebar = this.root.querySelector("#sidebar");
    if (!sidebar) return;
    const div = document.createElement("div");
    div.className = "warning flash";
    div.textContent = message;
    sidebar.appendChild(div);
  }

  private stopTimer(): void {
    if (this.timerHandle !== undefined) {
      window.clearInterval(this.timerHandle);
      this.timerHandle = undefined;
    }
  }
}
