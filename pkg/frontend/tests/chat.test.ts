/** Chat transcript behavior against the recorded controller answer. */

import assert from 'node:assert/strict';
import { readFileSync } from 'node:fs';
import test from 'node:test';

import { ChatTranscript } from '../src/chat.js';

const fixture = JSON.parse(
  readFileSync(new URL('../../tests/fixtures/chat_attacker.json', import.meta.url), 'utf-8'),
) as { question: string; answer: string };

test('who-is-the-attacker answer names 192.168.1.1', async () => {
  const transcript = new ChatTranscript(async (q) => {
    assert.equal(q, fixture.question);
    return fixture.answer;
  });
  const entries = await transcript.ask(fixture.question);
  assert.equal(entries.length, 2);
  assert.equal(entries[0].who, 'operator');
  assert.equal(entries[1].who, 'controller');
  assert.match(entries[1].text, /192\.168\.1\.1/);
});

test('api failure keeps the transcript and adds an error bubble', async () => {
  const transcript = new ChatTranscript(async () => {
    throw new Error('HTTP 503');
  });
  await transcript.ask('status');
  await transcript.ask('who is the attacker?');
  assert.equal(transcript.entries.length, 4);
  assert.equal(transcript.entries[1].who, 'error');
  assert.match(transcript.entries[1].text, /503/);
  assert.equal(transcript.entries[2].text, 'who is the attacker?');
});

test('blank questions are ignored', async () => {
  const transcript = new ChatTranscript(async () => 'never called');
  await transcript.ask('   ');
  assert.equal(transcript.entries.length, 0);
});
