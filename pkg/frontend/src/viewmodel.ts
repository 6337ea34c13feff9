/**
 * The client's entire render state, derived purely from server messages.
 *
 * This module is the zero-authority core: no simulation happens here, no
 * guesses. applySnapshot replaces the world with the server's document,
 * applyEvent folds one pushed event in, and replaying the same message
 * stream always reproduces the same view model. Duplicate deliveries are
 * dropped by the (tick, seq) watermark, so at-least-once push delivery is
 * safe.
 */

import type {
    AgentInfo,
    BuildingInfo,
    Cell,
    EventRecord,
    FormOptions,
    Placement,
    SnapshotDoc,
} from './protocol.js';

export const FEED_LIMIT = 1000;

/** Event kinds too chatty for a human-facing feed; still advance the tick. */
const FEED_SKIP = new Set(['heartbeat', 'idle']);

export type ConnectionState = 'connecting' | 'open' | 'closed';

export interface AgentMarker {
    agentId: number;
    name: string;
    location: Cell;
    status: string;
    cash: number;
    goal: string;
}

export interface FeedEntry {
    tick: number;
    seq: number;
    actor: number | string;
    kind: string;
    summary: string;
}

export interface PendingMarker {
    id: string;
    kind: 'agent' | 'building';
    label: string;
    cell: Cell;
    status: 'pending' | 'failed';
    detail?: string;
}

export interface ViewModel {
    connection: ConnectionState;
    tick: number;
    paused: boolean;
    speed: number;
    map: { width: number; height: number; placements: Placement[] };
    buildings: Record<string, BuildingInfo>;
    agents: Record<string, AgentMarker>;
    feed: FeedEntry[];
    lastSeen: { tick: number; seq: number };
    pending: PendingMarker[];
    options: FormOptions;
}

export function initialViewModel(): ViewModel {
    return {
        connection: 'connecting',
        tick: 0,
        paused: false,
        speed: 0,
        map: { width: 0, height: 0, placements: [] },
        buildings: {},
        agents: {},
        feed: [],
        lastSeen: { tick: -1, seq: -1 },
        pending: [],
        options: { backends: [], memory_systems: [], plan_systems: [] },
    };
}

function markerFromInfo(info: AgentInfo): AgentMarker {
    return {
        agentId: info.agent_id,
        name: info.name,
        location: [info.location[0], info.location[1]],
        status: info.status,
        cash: info.cash,
        goal: info.goal,
    };
}

export function applySnapshot(vm: ViewModel, snapshot: SnapshotDoc): ViewModel {
    const agents: Record<string, AgentMarker> = {};
    for (const info of snapshot.agents) {
        agents[String(info.agent_id)] = markerFromInfo(info);
    }
    return {
        ...vm,
        tick: snapshot.tick,
        paused: snapshot.paused ?? vm.paused,
        speed: snapshot.ticks_per_sec ?? vm.speed,
        map: {
            width: snapshot.map.width,
            height: snapshot.map.height,
            placements: snapshot.map.placements.map((p) => ({ ...p, origin: [...p.origin] as Cell })),
        },
        buildings: snapshot.buildings,
        agents,
        lastSeen: { tick: snapshot.tick, seq: snapshot.event_count - 1 },
        pending: [],
        options: snapshot.options ?? vm.options,
    };
}

function newerThan(ev: EventRecord, mark: { tick: number; seq: number }): boolean {
    return ev.tick > mark.tick || (ev.tick === mark.tick && ev.seq > mark.seq);
}

function summarize(ev: EventRecord): string {
    const p = ev.payload as Record<string, any>;
    switch (ev.kind) {
        case 'move':
            return `agent ${ev.actor} moved to (${p.to?.[0]},${p.to?.[1]})`;
        case 'say':
            return p.delivered === false
                ? `agent ${p.speaker} called out to ${p.peer}, unheard`
                : `${p.speaker} -> ${p.peer}: "${p.text}"`;
        case 'mayor_say':
            return `mayor -> ${p.peer}: "${p.text}"`;
        case 'use':
            return `agent ${ev.actor} used ${p.equipment_kind}#${p.equipment_id} (${p.purpose})`;
        case 'feedback':
            return `${p.equipment_kind}: "${p.outcome}" (${p.success ? 'ok' : 'fail'})`;
        case 'purchase':
            return `agent ${ev.actor} bought ${p.item} for ${p.price} (cash ${p.cash_after})`;
        case 'salary':
            return `agent ${ev.actor} earned ${p.amount} (cash ${p.cash_after})`;
        case 'plan_step':
            return `agent ${ev.actor} completed: ${p.subtask}`;
        case 'agent_created':
            return `${p.name} joined at (${p.spawn?.[0]},${p.spawn?.[1]})`;
        case 'building_placed':
            return `${p.kind}#${p.building_id} placed at (${p.origin?.[0]},${p.origin?.[1]})`;
        case 'error':
            return `error from ${p.source}: ${p.error}`;
        case 'episode_end':
            return `episode ended: ${p.passed ? 'passed' : 'failed'} at tick ${p.ticks_used}`;
        default:
            return ev.kind;
    }
}

export function applyEvent(vm: ViewModel, ev: EventRecord): ViewModel {
    if (!newerThan(ev, vm.lastSeen)) {
        return vm; // duplicate or stale delivery
    }
    const next: ViewModel = {
        ...vm,
        tick: Math.max(vm.tick, ev.tick),
        lastSeen: { tick: ev.tick, seq: ev.seq },
    };
    const p = ev.payload as Record<string, any>;
    switch (ev.kind) {
        case 'move': {
            const marker = next.agents[String(ev.actor)];
            if (marker && Array.isArray(p.to)) {
                next.agents = {
                    ...next.agents,
                    [String(ev.actor)]: { ...marker, location: [p.to[0], p.to[1]] },
                };
            }
            break;
        }
        case 'purchase':
        case 'salary': {
            const marker = next.agents[String(ev.actor)];
            if (marker && typeof p.cash_after === 'number') {
                next.agents = {
                    ...next.agents,
                    [String(ev.actor)]: { ...marker, cash: p.cash_after },
                };
            }
            break;
        }
        case 'agent_created': {
            next.agents = {
                ...next.agents,
                [String(p.agent_id)]: {
                    agentId: p.agent_id,
                    name: p.name,
                    location: [p.spawn[0], p.spawn[1]],
                    status: 'idle',
                    cash: p.cash,
                    goal: p.goal ?? '',
                },
            };
            next.pending = next.pending.filter(
                (marker) => !(marker.kind === 'agent' && marker.label === p.name),
            );
            break;
        }
        case 'building_placed': {
            next.map = {
                ...next.map,
                placements: [
                    ...next.map.placements,
                    { building_id: p.building_id, kind: p.kind, origin: [p.origin[0], p.origin[1]] },
                ],
            };
            next.pending = next.pending.filter(
                (marker) =>
                    !(
                        marker.kind === 'building' &&
                        marker.cell[0] === p.origin[0] &&
                        marker.cell[1] === p.origin[1]
                    ),
            );
            break;
        }
        default:
            break;
    }
    if (!FEED_SKIP.has(ev.kind)) {
        const entry: FeedEntry = {
            tick: ev.tick,
            seq: ev.seq,
            actor: ev.actor,
            kind: ev.kind,
            summary: summarize(ev),
        };
        const feed = [...next.feed, entry];
        next.feed = feed.length > FEED_LIMIT ? feed.slice(feed.length - FEED_LIMIT) : feed;
    }
    return next;
}

export function setConnection(vm: ViewModel, connection: ConnectionState): ViewModel {
    return vm.connection === connection ? vm : { ...vm, connection };
}

export function setPaused(vm: ViewModel, paused: boolean): ViewModel {
    return { ...vm, paused };
}

export function setSpeed(vm: ViewModel, speed: number): ViewModel {
    return { ...vm, speed };
}

export function addPending(vm: ViewModel, marker: PendingMarker): ViewModel {
    return { ...vm, pending: [...vm.pending, marker] };
}

export function failPending(vm: ViewModel, id: string, detail: string): ViewModel {
    return {
        ...vm,
        pending: vm.pending.map((m) => (m.id === id ? { ...m, status: 'failed', detail } : m)),
    };
}

export function dropPending(vm: ViewModel, id: string): ViewModel {
    return { ...vm, pending: vm.pending.filter((m) => m.id !== id) };
}

/** Solid cells of every placed building, as "x,y" keys. */
export function occupiedCells(vm: ViewModel): Set<string> {
    const cells = new Set<string>();
    for (const placement of vm.map.placements) {
        const building = vm.buildings[String(placement.building_id)];
        if (!building) continue;
        building.blocks.forEach((row, dy) => {
            row.forEach((solid, dx) => {
                if (solid) cells.add(`${placement.origin[0] + dx},${placement.origin[1] + dy}`);
            });
        });
    }
    return cells;
}

/** Canonical JSON with sorted keys, for exact view-model comparisons. */
export function stableStringify(value: unknown): string {
    if (Array.isArray(value)) {
        return `[${value.map(stableStringify).join(',')}]`;
    }
    if (value !== null && typeof value === 'object') {
        const entries = Object.entries(value as Record<string, unknown>)
            .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0))
            .map(([k, v]) => `${JSON.stringify(k)}:${stableStringify(v)}`);
        return `{${entries.join(',')}}`;
    }
    return JSON.stringify(value);
}
