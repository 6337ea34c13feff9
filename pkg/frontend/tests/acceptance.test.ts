/**
 * Client acceptance: the three properties the browser client must hold,
 * exercised against a stream recorded from a real gateway session.
 */

import { describe, expect, it } from 'vitest';

import { threadsFromEvents } from '../src/chat.js';
import { GatewayClient } from '../src/client.js';
import type { EventRecord } from '../src/protocol.js';
import { applyEvent, applySnapshot, initialViewModel, stableStringify } from '../src/viewmodel.js';

import { ackResponder, FakeSocket, flush } from './fakesocket.js';
import { loadStream, pushedEvents } from './fixtures.js';

describe('client acceptance', () => {
    it('zero authority: the same recorded push stream always yields the same view model', () => {
        const stream = loadStream();
        const play = () => {
            let vm = applySnapshot(initialViewModel(), stream.snapshot);
            for (const ev of pushedEvents(stream)) vm = applyEvent(vm, ev);
            return vm;
        };
        const first = play();
        const second = play();
        expect(stableStringify(second)).toBe(stableStringify(first));
        // and the model agrees with the server's own closing snapshot
        expect(first.tick).toBe(stream.final_snapshot.tick);
        for (const info of stream.final_snapshot.agents) {
            const marker = first.agents[String(info.agent_id)]!;
            expect(marker.location).toEqual(info.location);
            expect(marker.cash).toBe(info.cash);
        }
    });

    it('mayor chat round-trip renders a two-turn thread', async () => {
        const stream = loadStream();
        const chatEvents: EventRecord[] = [];
        const sockets: FakeSocket[] = [];
        const client = new GatewayClient({
            url: 'ws://test/ws',
            role: 'mayor',
            socketFactory: () => {
                const socket = new FakeSocket(ackResponder(stream.snapshot));
                sockets.push(socket);
                return socket;
            },
            onEvent: (ev) => {
                if (ev.kind === 'mayor_say' || ev.kind === 'say') chatEvents.push(ev);
            },
        });
        client.connect();
        sockets[0]!.open();
        await flush();
        expect(await client.mayorSay('Ada', 'How is the town treating you?')).toEqual([]);
        for (const ev of pushedEvents(stream)) sockets[0]!.push(ev);
        await flush();

        const threads = threadsFromEvents(chatEvents);
        const thread = Object.values(threads).find((t) => t.turns.length > 0)!;
        expect(thread.turns.length).toBe(2);
        expect(thread.turns[0]!.from).toBe('mayor');
        expect(thread.turns[1]!.from).toBe('agent');
        expect(thread.ended).toBe(true);
    });

    it('observer sessions cannot emit mayor_say', async () => {
        const stream = loadStream();
        const sockets: FakeSocket[] = [];
        const client = new GatewayClient({
            url: 'ws://test/ws',
            role: 'observer',
            socketFactory: () => {
                const socket = new FakeSocket(ackResponder(stream.snapshot));
                sockets.push(socket);
                return socket;
            },
        });
        client.connect();
        sockets[0]!.open();
        await flush();
        const errors = await client.mayorSay('Ada', 'obey');
        expect(errors.length).toBe(1);
        expect(sockets[0]!.sentKinds()).not.toContain('mayor_say');
    });
});
