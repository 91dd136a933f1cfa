/**
 * Chat transcript logic, DOM-free so it tests under node.
 *
 * ask() posts the question, appends both sides of the exchange, and keeps
 * the transcript intact on transport errors (an error bubble instead).
 */

import type { ChatEntry } from './state.js';

export type ChatPoster = (question: string) => Promise<string>;

export class ChatTranscript {
  entries: ChatEntry[] = [];

  constructor(private post: ChatPoster) {}

  async ask(question: string): Promise<ChatEntry[]> {
    const trimmed = question.trim();
    if (!trimmed) return this.entries;
    this.entries.push({ who: 'operator', text: trimmed });
    try {
      const answer = await this.post(trimmed);
      this.entries.push({ who: 'controller', text: answer });
    } catch (err) {
      this.entries.push({
        who: 'error',
        text: `request failed: ${err instanceof Error ? err.message : String(err)}`,
      });
    }
    return this.entries;
  }
}

export function httpChatPoster(apiBase: string): ChatPoster {
  return async (question: string) => {
    const resp = await fetch(`${apiBase}/v1/chat`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ question }),
    });
    if (!resp.ok) throw new Error(`HTTP ${resp.status}`);
    const body = (await resp.json()) as { answer?: string };
    return body.answer ?? '';
  };
}
