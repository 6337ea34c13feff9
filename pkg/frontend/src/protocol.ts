/**
 * Wire types for the gateway protocol: one JSON envelope per websocket
 * text frame. Commands get exactly one ack/error reply carrying their
 * msg_id; events arrive as pushes with msg_id null.
 */

export type Cell = [number, number];

export interface EventRecord {
    tick: number;
    seq: number;
    actor: number | string;
    kind: string;
    payload: Record<string, unknown>;
}

export interface PushMessage {
    msg_id: null;
    kind: 'event';
    payload: EventRecord;
}

export interface ReplyMessage {
    msg_id: string;
    kind: 'ack' | 'error';
    payload: Record<string, unknown>;
}

export type ServerMessage = PushMessage | ReplyMessage;

export interface CommandEnvelope {
    msg_id: string;
    kind: string;
    payload: Record<string, unknown>;
}

export interface Placement {
    building_id: number;
    kind: string;
    origin: Cell;
}

export interface EquipmentSlot {
    cell: Cell;
    equipment_id: number;
}

export interface BuildingInfo {
    kind: string;
    assets: string;
    price: number;
    blocks: number[][];
    equipment: EquipmentSlot[];
}

export interface AgentInfo {
    agent_id: number;
    name: string;
    location: Cell;
    status: string;
    cash: number;
    goal: string;
}

export interface FormOptions {
    backends: string[];
    memory_systems: string[];
    plan_systems: string[];
}

export interface SnapshotDoc {
    tick: number;
    map: { width: number; height: number; placements: Placement[] };
    buildings: Record<string, BuildingInfo>;
    agents: AgentInfo[];
    event_count: number;
    paused?: boolean;
    ticks_per_sec?: number;
    options?: FormOptions;
}

export function isPush(message: ServerMessage): message is PushMessage {
    return message.kind === 'event';
}

/** Defensive parse: anything that is not a well-formed envelope is null. */
export function parseServerMessage(raw: string): ServerMessage | null {
    let doc: unknown;
    try {
        doc = JSON.parse(raw);
    } catch {
        return null;
    }
    if (typeof doc !== 'object' || doc === null) return null;
    const candidate = doc as { kind?: unknown; msg_id?: unknown; payload?: unknown };
    if (candidate.kind === 'event' && typeof candidate.payload === 'object' && candidate.payload !== null) {
        return candidate as unknown as PushMessage;
    }
    if (
        (candidate.kind === 'ack' || candidate.kind === 'error') &&
        (typeof candidate.msg_id === 'string' || typeof candidate.msg_id === 'number')
    ) {
        return candidate as unknown as ReplyMessage;
    }
    return null;
}
