/**
 * Websocket client for the gateway. Owns the connection lifecycle (hello,
 * subscribe, snapshot, automatic reconnect with resume_from), routes
 * replies to their senders by msg_id, and folds pushes into the view
 * model. The socket is injectable so tests drive it without a network.
 */

import {
    agentCreateEnvelope,
    buildingCreateEnvelope,
    canMayorSay,
    mayorSayEnvelope,
    validateAgentForm,
    validateBuildingForm,
    type AgentForm,
    type BuildingForm,
} from './forms.js';
import {
    isPush,
    parseServerMessage,
    type CommandEnvelope,
    type EventRecord,
    type ReplyMessage,
    type SnapshotDoc,
} from './protocol.js';
import {
    addPending,
    applyEvent,
    applySnapshot,
    dropPending,
    failPending,
    initialViewModel,
    setConnection,
    setPaused,
    setSpeed,
    type ViewModel,
} from './viewmodel.js';

export interface SocketLike {
    send(data: string): void;
    close(code?: number, reason?: string): void;
    onopen: (() => void) | null;
    onmessage: ((event: { data: string }) => void) | null;
    onclose: (() => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientOptions {
    url: string;
    role?: 'observer' | 'mayor';
    token?: string;
    socketFactory?: SocketFactory;
    onChange?: (vm: ViewModel) => void;
    onEvent?: (ev: EventRecord) => void; // raw accepted pushes (chat threads want these)
    onToast?: (message: string) => void;
    reconnectDelayMs?: number;
}

function defaultFactory(url: string): SocketLike {
    return new WebSocket(url) as unknown as SocketLike;
}

export class GatewayClient {
    vm: ViewModel = initialViewModel();
    role: 'observer' | 'mayor';

    private readonly options: ClientOptions;
    private readonly factory: SocketFactory;
    private socket: SocketLike | null = null;
    private nextMsgId = 1;
    private waiting = new Map<string, (reply: ReplyMessage) => void>();
    private everConnected = false;
    private closedByUs = false;

    constructor(options: ClientOptions) {
        this.options = options;
        this.role = options.role ?? 'observer';
        this.factory = options.socketFactory ?? defaultFactory;
    }

    connect(): void {
        this.closedByUs = false;
        this.update(setConnection(this.vm, 'connecting'));
        const url = this.options.token
            ? `${this.options.url}?token=${encodeURIComponent(this.options.token)}`
            : this.options.url;
        const socket = this.factory(url);
        this.socket = socket;
        socket.onopen = () => void this.handshake();
        socket.onmessage = (event) => this.handleMessage(event.data);
        socket.onclose = () => this.handleClose();
    }

    disconnect(): void {
        this.closedByUs = true;
        this.socket?.close();
    }

    /** Send a command; resolves with its ack or error reply. */
    send(kind: string, payload: Record<string, unknown> = {}): Promise<ReplyMessage> {
        const envelope: CommandEnvelope = { msg_id: `c${this.nextMsgId++}`, kind, payload };
        return this.sendEnvelope(envelope);
    }

    private sendEnvelope(envelope: CommandEnvelope): Promise<ReplyMessage> {
        const socket = this.socket;
        if (!socket) {
            return Promise.reject(new Error('not connected'));
        }
        return new Promise((resolve) => {
            this.waiting.set(envelope.msg_id, resolve);
            socket.send(JSON.stringify(envelope));
        });
    }

    private async handshake(): Promise<void> {
        this.update(setConnection(this.vm, 'open'));
        const hello = await this.send('hello', { role: this.role, token: this.options.token });
        if (hello.kind === 'error') {
            // a taken mayor seat degrades to observer rather than dying
            this.role = 'observer';
            this.options.onToast?.(`hello failed: ${hello.payload.detail}`);
            await this.send('hello', { role: 'observer', token: this.options.token });
        }
        const resuming = this.everConnected && this.vm.lastSeen.seq >= 0;
        const subscribe: Record<string, unknown> = { streams: ['events'] };
        if (resuming) {
            subscribe.resume_from = { tick: this.vm.lastSeen.tick, seq: this.vm.lastSeen.seq };
        }
        await this.send('subscribe', subscribe);
        if (!resuming) {
            const reply = await this.send('snapshot');
            if (reply.kind === 'ack') {
                this.update(applySnapshot(this.vm, reply.payload as unknown as SnapshotDoc));
            }
        }
        this.everConnected = true;
    }

    private handleMessage(raw: string): void {
        const message = parseServerMessage(raw);
        if (message === null) return;
        if (isPush(message)) {
            const before = this.vm;
            const after = applyEvent(before, message.payload);
            if (after !== before) {
                this.options.onEvent?.(message.payload); // not a duplicate
                this.update(after);
            }
            return;
        }
        const resolve = this.waiting.get(message.msg_id);
        if (resolve) {
            this.waiting.delete(message.msg_id);
            resolve(message);
        }
    }

    private handleClose(): void {
        this.update(setConnection(this.vm, 'closed'));
        this.waiting.clear();
        if (this.closedByUs) return;
        const delay = this.options.reconnectDelayMs ?? 1000;
        setTimeout(() => this.connect(), delay);
    }

    private update(vm: ViewModel): void {
        this.vm = vm;
        this.options.onChange?.(vm);
    }

    // --- high-level commands -------------------------------------------------

    async createAgent(form: AgentForm): Promise<string[]> {
        const errors = validateAgentForm(form, this.vm);
        if (errors.length) return errors;
        const pendingId = `p${this.nextMsgId}`;
        this.update(
            addPending(this.vm, {
                id: pendingId,
                kind: 'agent',
                label: form.name,
                cell: form.spawn,
                status: 'pending',
            }),
        );
        const reply = await this.send('create_agent', agentCreateEnvelope('x', form).payload);
        if (reply.kind === 'error') {
            const detail = String(reply.payload.detail ?? reply.payload.error);
            this.update(failPending(this.vm, pendingId, detail));
            this.options.onToast?.(detail);
            return [detail];
        }
        return []; // the agent_created event will clear the marker
    }

    async createBuilding(form: BuildingForm): Promise<string[]> {
        const errors = validateBuildingForm(form, this.vm);
        if (errors.length) return errors;
        const building = this.vm.buildings[String(form.buildingId)];
        const pendingId = `p${this.nextMsgId}`;
        this.update(
            addPending(this.vm, {
                id: pendingId,
                kind: 'building',
                label: building?.kind ?? String(form.buildingId),
                cell: form.origin,
                status: 'pending',
            }),
        );
        const reply = await this.send('create_building', buildingCreateEnvelope('x', form).payload);
        if (reply.kind === 'error') {
            const detail = String(reply.payload.detail ?? reply.payload.error);
            this.update(failPending(this.vm, pendingId, detail));
            this.options.onToast?.(detail);
            return [detail];
        }
        return [];
    }

    async mayorSay(target: string | number, text: string): Promise<string[]> {
        if (!canMayorSay(this.role)) {
            return ['only the mayor session can chat with agents'];
        }
        if (!text.trim()) {
            return ['say something'];
        }
        const reply = await this.send('mayor_say', mayorSayEnvelope('x', target, text).payload);
        if (reply.kind === 'error') {
            const detail = String(reply.payload.detail ?? reply.payload.error);
            this.options.onToast?.(detail);
            return [detail];
        }
        return [];
    }

    async pause(): Promise<void> {
        const reply = await this.send('pause');
        if (reply.kind === 'ack') this.update(setPaused(this.vm, true));
    }

    async resume(): Promise<void> {
        const reply = await this.send('resume');
        if (reply.kind === 'ack') this.update(setPaused(this.vm, false));
    }

    async setTicksPerSec(speed: number): Promise<void> {
        const reply = await this.send('set_speed', { ticks_per_sec: speed });
        if (reply.kind === 'ack') {
            this.update(setSpeed(this.vm, Number(reply.payload.ticks_per_sec)));
        }
    }

    /** Drop a failed optimistic marker after the user has seen it. */
    dismissPending(id: string): void {
        this.update(dropPending(this.vm, id));
    }
}
