/**
 * Creation forms and their client-side validation, mirroring the checks
 * the gateway runs so most mistakes never leave the browser. The gateway
 * remains authoritative; these are conveniences, not permissions.
 */

import type { Cell, CommandEnvelope } from './protocol.js';
import { occupiedCells, type ViewModel } from './viewmodel.js';

export interface AgentForm {
    name: string;
    bio: string;
    goal: string;
    backend: string;
    memorySystem: string;
    planSystem: string;
    cash: number;
    spawn: Cell;
}

export interface BuildingForm {
    buildingId: number;
    origin: Cell;
}

export function emptyAgentForm(vm: ViewModel): AgentForm {
    return {
        name: '',
        bio: '',
        goal: '',
        backend: vm.options.backends[0] ?? '',
        memorySystem: vm.options.memory_systems[0] ?? 'vector-v1',
        planSystem: vm.options.plan_systems[0] ?? 'chain-v1',
        cash: 0,
        spawn: [0, 0],
    };
}

function inBounds(vm: ViewModel, cell: Cell): boolean {
    return cell[0] >= 0 && cell[1] >= 0 && cell[0] < vm.map.width && cell[1] < vm.map.height;
}

export function validateAgentForm(form: AgentForm, vm: ViewModel): string[] {
    const errors: string[] = [];
    if (!form.name.trim()) {
        errors.push('name must not be empty');
    } else if (Object.values(vm.agents).some((a) => a.name === form.name)) {
        errors.push(`an agent named "${form.name}" already lives here`);
    }
    if (!form.backend) {
        errors.push('pick a backend');
    } else if (vm.options.backends.length && !vm.options.backends.includes(form.backend)) {
        errors.push(`unknown backend "${form.backend}"`);
    }
    if (vm.options.memory_systems.length && !vm.options.memory_systems.includes(form.memorySystem)) {
        errors.push(`unknown memory system "${form.memorySystem}"`);
    }
    if (vm.options.plan_systems.length && !vm.options.plan_systems.includes(form.planSystem)) {
        errors.push(`unknown plan system "${form.planSystem}"`);
    }
    if (!Number.isInteger(form.cash) || form.cash < 0) {
        errors.push('cash must be a non-negative integer');
    }
    if (!inBounds(vm, form.spawn)) {
        errors.push('spawn is outside the map');
    } else if (occupiedCells(vm).has(`${form.spawn[0]},${form.spawn[1]}`)) {
        errors.push('spawn is inside a building wall');
    }
    return errors;
}

export function validateBuildingForm(form: BuildingForm, vm: ViewModel): string[] {
    const errors: string[] = [];
    const building = vm.buildings[String(form.buildingId)];
    if (!building) {
        return [`no configured building with id ${form.buildingId}`];
    }
    const height = building.blocks.length;
    const width = building.blocks[0]?.length ?? 0;
    const [ox, oy] = form.origin;
    if (ox < 0 || oy < 0 || ox + width > vm.map.width || oy + height > vm.map.height) {
        errors.push('building does not fit inside the map there');
        return errors;
    }
    const occupied = occupiedCells(vm);
    building.blocks.forEach((row, dy) => {
        row.forEach((solid, dx) => {
            if (solid && occupied.has(`${ox + dx},${oy + dy}`)) {
                errors.push(`overlaps existing building at (${ox + dx},${oy + dy})`);
            }
        });
    });
    return errors;
}

export function agentCreateEnvelope(msgId: string, form: AgentForm): CommandEnvelope {
    return {
        msg_id: msgId,
        kind: 'create_agent',
        payload: {
            profile: {
                name: form.name,
                bio: form.bio,
                goal: form.goal,
                backend: form.backend,
                memory_system: form.memorySystem,
                plan_system: form.planSystem,
                cash: form.cash,
            },
            spawn: form.spawn,
        },
    };
}

export function buildingCreateEnvelope(msgId: string, form: BuildingForm): CommandEnvelope {
    return {
        msg_id: msgId,
        kind: 'create_building',
        payload: { building_id: form.buildingId, origin: form.origin },
    };
}

export function mayorSayEnvelope(msgId: string, target: string | number, text: string): CommandEnvelope {
    return {
        msg_id: msgId,
        kind: 'mayor_say',
        payload: { target_agent: target, text },
    };
}

/** Only the mayor session may steer agents by chat. */
export function canMayorSay(role: string): boolean {
    return role === 'mayor';
}
