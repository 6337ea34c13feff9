/** Loads the wire fixtures recorded from a live gateway session. */

import { readFileSync } from 'node:fs';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';

import type { EventRecord, PushMessage, SnapshotDoc } from '../src/protocol.js';

export interface RecordedStream {
    snapshot: SnapshotDoc;
    pushes: PushMessage[];
    final_snapshot: SnapshotDoc;
}

export function loadStream(): RecordedStream {
    const here = dirname(fileURLToPath(import.meta.url));
    return JSON.parse(readFileSync(join(here, 'fixtures', 'stream.json'), 'utf-8'));
}

export function pushedEvents(stream: RecordedStream): EventRecord[] {
    return stream.pushes.map((p) => p.payload);
}
