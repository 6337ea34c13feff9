/**
 * Mayor chat threads, assembled from pushed events only: a mayor_say event
 * opens (or extends) the thread with its target agent, and the agent's
 * reply arrives as a say event addressed to "mayor". An exchange is
 * complete once the reply lands.
 */

import type { EventRecord } from './protocol.js';

export interface ChatTurn {
    from: 'mayor' | 'agent';
    agentId: number;
    text: string;
    tick: number;
}

export interface ChatThread {
    agentId: number;
    turns: ChatTurn[];
    ended: boolean; // the last exchange got its reply (or was cut off)
}

export function threadsFromEvents(events: EventRecord[]): Record<string, ChatThread> {
    const threads: Record<string, ChatThread> = {};

    const thread = (agentId: number): ChatThread => {
        const key = String(agentId);
        let existing = threads[key];
        if (!existing) {
            existing = { agentId, turns: [], ended: false };
            threads[key] = existing;
        }
        return existing;
    };

    for (const ev of events) {
        const p = ev.payload as Record<string, any>;
        if (ev.kind === 'mayor_say' && typeof p.peer === 'number') {
            const t = thread(p.peer);
            t.turns.push({ from: 'mayor', agentId: p.peer, text: String(p.text), tick: ev.tick });
            t.ended = false;
        } else if (ev.kind === 'say' && p.peer === 'mayor' && typeof p.speaker === 'number') {
            const t = thread(p.speaker);
            t.turns.push({ from: 'agent', agentId: p.speaker, text: String(p.text), tick: ev.tick });
            t.ended = true;
        }
    }
    return threads;
}
