import { describe, expect, it } from 'vitest';

import { GatewayClient } from '../src/client.js';

import { ackResponder, FakeSocket, flush, type Responder } from './fakesocket.js';
import { loadStream, pushedEvents } from './fixtures.js';

function makeClient(role: 'observer' | 'mayor', overrides: Record<string, Responder> = {}) {
    const stream = loadStream();
    const sockets: FakeSocket[] = [];
    const toasts: string[] = [];
    const client = new GatewayClient({
        url: 'ws://test/ws',
        role,
        reconnectDelayMs: 0,
        socketFactory: () => {
            const socket = new FakeSocket(ackResponder(stream.snapshot, overrides));
            sockets.push(socket);
            return socket;
        },
        onToast: (m) => toasts.push(m),
    });
    return { client, sockets, toasts, stream };
}

async function connected(role: 'observer' | 'mayor' = 'observer', overrides: Record<string, Responder> = {}) {
    const ctx = makeClient(role, overrides);
    ctx.client.connect();
    ctx.sockets[0]!.open();
    await flush();
    return ctx;
}

describe('gateway client', () => {
    it('handshakes with hello, subscribe, snapshot', async () => {
        const { client, sockets } = await connected();
        expect(sockets[0]!.sentKinds()).toEqual(['hello', 'subscribe', 'snapshot']);
        expect(client.vm.connection).toBe('open');
        expect(client.vm.map.width).toBeGreaterThan(0);
        expect(Object.keys(client.vm.agents).length).toBeGreaterThan(0);
    });

    it('observer sessions cannot emit mayor_say', async () => {
        const { client, sockets } = await connected('observer');
        const errors = await client.mayorSay('Ada', 'do my bidding');
        expect(errors.length).toBe(1);
        expect(sockets[0]!.sentKinds()).not.toContain('mayor_say');
    });

    it('the mayor session can emit mayor_say', async () => {
        const { client, sockets } = await connected('mayor');
        const errors = await client.mayorSay('Ada', 'welcome to town');
        await flush();
        expect(errors).toEqual([]);
        expect(sockets[0]!.sentKinds()).toContain('mayor_say');
    });

    it('pushes fold into the view model as they arrive', async () => {
        const { client, sockets, stream } = await connected();
        for (const ev of pushedEvents(stream)) sockets[0]!.push(ev);
        await flush();
        expect(client.vm.tick).toBe(stream.final_snapshot.tick);
        const dana = Object.values(client.vm.agents).find((a) => a.name === 'Dana');
        expect(dana).toBeDefined();
    });

    it('optimistic creation resolves through the confirming event', async () => {
        const { client, sockets } = await connected();
        const promise = client.createAgent({
            name: 'Newcomer',
            bio: '',
            goal: '',
            backend: client.vm.options.backends[0] ?? 'scripted-v1',
            memorySystem: 'vector-v1',
            planSystem: 'chain-v1',
            cash: 1,
            spawn: [0, 5],
        });
        expect(client.vm.pending.length).toBe(1);
        expect(client.vm.pending[0]!.status).toBe('pending');
        const errors = await promise;
        expect(errors).toEqual([]);
        sockets[0]!.push({
            tick: client.vm.tick + 1,
            seq: client.vm.lastSeen.seq + 1,
            actor: 'system',
            kind: 'agent_created',
            payload: { agent_id: 99, name: 'Newcomer', spawn: [0, 5], cash: 1, goal: '' },
        });
        await flush();
        expect(client.vm.pending).toEqual([]);
        expect(client.vm.agents['99']!.name).toBe('Newcomer');
    });

    it('a gateway rejection fails the optimistic marker and toasts', async () => {
        const { client, toasts } = await connected('observer', {
            create_agent: (envelope) => ({
                msg_id: envelope.msg_id,
                kind: 'error',
                payload: { error: 'ValidationError', detail: 'DuplicateNameError: taken' },
            }),
        });
        const errors = await client.createAgent({
            name: 'Newcomer',
            bio: '',
            goal: '',
            backend: client.vm.options.backends[0] ?? 'scripted-v1',
            memorySystem: 'vector-v1',
            planSystem: 'chain-v1',
            cash: 0,
            spawn: [0, 5],
        });
        expect(errors[0]).toContain('DuplicateNameError');
        expect(client.vm.pending[0]!.status).toBe('failed');
        expect(toasts.length).toBe(1);
    });

    it('local validation blocks the envelope before the wire', async () => {
        const { client, sockets } = await connected();
        const before = sockets[0]!.sent.length;
        const errors = await client.createAgent({
            name: '',
            bio: '',
            goal: '',
            backend: 'scripted-v1',
            memorySystem: 'vector-v1',
            planSystem: 'chain-v1',
            cash: 0,
            spawn: [0, 5],
        });
        expect(errors.length).toBeGreaterThan(0);
        expect(sockets[0]!.sent.length).toBe(before);
    });

    it('reconnects with resume_from and no fresh snapshot', async () => {
        const { client, sockets, stream } = await connected();
        for (const ev of pushedEvents(stream).slice(0, 10)) sockets[0]!.push(ev);
        await flush();
        const mark = { ...client.vm.lastSeen };

        sockets[0]!.close();
        expect(client.vm.connection).toBe('closed');
        await flush(); // reconnect timer (0 ms)
        expect(sockets.length).toBe(2);
        sockets[1]!.open();
        await flush();

        const kinds = sockets[1]!.sentKinds();
        expect(kinds).toContain('subscribe');
        expect(kinds).not.toContain('snapshot');
        const subscribe = sockets[1]!.sent.find((e) => e.kind === 'subscribe')!;
        expect((subscribe.payload as any).resume_from).toEqual(mark);
        expect(client.vm.connection).toBe('open');
    });

    it('duplicate pushes are dropped before they reach the feed', async () => {
        const { client, sockets, stream } = await connected();
        const ev = pushedEvents(stream).find((e) => e.kind === 'say')!;
        sockets[0]!.push(ev);
        sockets[0]!.push(ev);
        await flush();
        const matching = client.vm.feed.filter((f) => f.seq === ev.seq);
        expect(matching.length).toBe(1);
    });
});
