/** Typed wrappers around the annotation service endpoints. */

import type { TokenSpan } from "./selection.js";

export interface SentencePayload {
  index: number;
  from_title: boolean;
  tokens: string[];
}

export interface StoryPayload {
  story_id: string;
  title: string;
  category: string;
  sentences: SentencePayload[];
}

export interface NextStoryResponse {
  session_id: string;
  guidelines: string;
  story: StoryPayload;
}

export interface SubmitResponse {
  hit_id: string;
  duration_seconds: number;
}

export class ConflictError extends Error {}
export class NoStoriesError extends Error {}

export async function fetchNextStory(worker: string): Promise<NextStoryResponse> {
  const resp = await fetch(
    `/api/stories/next?worker=${encodeURIComponent(worker)}`,
  );
  if (resp.status === 404) {
    throw new NoStoriesError("no unannotated stories left for this worker");
  }
  if (!resp.ok) {
    throw new Error(`story assignment failed: HTTP ${resp.status}`);
  }
  return (await resp.json()) as NextStoryResponse;
}

export async function submitAnnotations(
  storyId: string,
  worker: string,
  selections: TokenSpan[],
): Promise<SubmitResponse> {
  const resp = await fetch(
    `/api/stories/${encodeURIComponent(storyId)}/annotations`,
    {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ worker, selections }),
    },
  );
  if (resp.status === 409) {
    throw new ConflictError("this story was already submitted by this worker");
  }
  if (!resp.ok) {
    const detail = await resp.text();
    throw new Error(`submission failed: HTTP ${resp.status} ${detail}`);
  }
  return (await resp.json()) as SubmitResponse;
}
