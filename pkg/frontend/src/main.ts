/**
 * Browser entry point: wires the gateway client to the canvas, the
 * creation panels, the mayor chat box, and the live event feed.
 *
 * URL parameters: ?role=mayor to take the mayor seat, ?token=... when the
 * gateway requires auth, ?ws=... to point at a non-default gateway.
 */

import { threadsFromEvents } from './chat.js';
import { GatewayClient } from './client.js';
import { emptyAgentForm } from './forms.js';
import { cellFromClick, drawWorld } from './render.js';
import type { EventRecord } from './protocol.js';
import type { ViewModel } from './viewmodel.js';

function el<T extends HTMLElement>(id: string): T {
    const found = document.getElementById(id);
    if (!found) throw new Error(`missing element #${id}`);
    return found as T;
}

const params = new URLSearchParams(window.location.search);
const wsUrl =
    params.get('ws') ?? `${window.location.protocol === 'https:' ? 'wss' : 'ws'}://${window.location.host}/ws`;

const chatEvents: EventRecord[] = [];
let placing: number | null = null; // building id being placed by map click
let spawnPicking = false;

const client = new GatewayClient({
    url: wsUrl,
    role: params.get('role') === 'mayor' ? 'mayor' : 'observer',
    token: params.get('token') ?? undefined,
    reconnectDelayMs: 1500,
    onChange: render,
    onToast: toast,
    onEvent: (ev) => {
        if (ev.kind === 'mayor_say' || ev.kind === 'say') {
            chatEvents.push(ev);
        }
    },
});

function toast(message: string): void {
    const box = el<HTMLDivElement>('toast');
    box.textContent = message;
    box.classList.add('visible');
    setTimeout(() => box.classList.remove('visible'), 4000);
}

function render(vm: ViewModel): void {
    el<HTMLSpanElement>('tick').textContent = String(vm.tick);
    el<HTMLSpanElement>('speed').textContent = vm.paused ? 'paused' : `${vm.speed}/s`;
    const banner = el<HTMLDivElement>('banner');
    banner.textContent =
        vm.connection === 'open' ? '' : vm.connection === 'closed' ? 'disconnected, retrying...' : 'connecting...';
    banner.classList.toggle('visible', vm.connection !== 'open');

    drawWorld(el<HTMLCanvasElement>('map'), vm);

    const feed = el<HTMLUListElement>('feed');
    feed.innerHTML = '';
    for (const entry of vm.feed.slice(-200)) {
        const li = document.createElement('li');
        li.textContent = `[${entry.tick}] ${entry.summary}`;
        feed.appendChild(li);
    }
    feed.scrollTop = feed.scrollHeight;

    const backendSelect = el<HTMLSelectElement>('agent-backend');
    if (backendSelect.options.length !== vm.options.backends.length) {
        backendSelect.innerHTML = '';
        for (const id of vm.options.backends) {
            const option = document.createElement('option');
            option.value = id;
            option.textContent = id;
            backendSelect.appendChild(option);
        }
    }
    fillSelect('agent-memory', vm.options.memory_systems);
    fillSelect('agent-plan', vm.options.plan_systems);
    const buildingSelect = el<HTMLSelectElement>('building-id');
    const ids = Object.keys(vm.buildings);
    if (buildingSelect.options.length !== ids.length) {
        buildingSelect.innerHTML = '';
        for (const id of ids) {
            const option = document.createElement('option');
            option.value = id;
            option.textContent = `${vm.buildings[id]?.kind} #${id}`;
            buildingSelect.appendChild(option);
        }
    }

    const chatTargets = el<HTMLSelectElement>('chat-target');
    const names = Object.values(vm.agents).map((a) => a.name);
    if (chatTargets.options.length !== names.length) {
        chatTargets.innerHTML = '';
        for (const name of names) {
            const option = document.createElement('option');
            option.value = name;
            option.textContent = name;
            chatTargets.appendChild(option);
        }
    }

    const chatBox = el<HTMLDivElement>('chat-log');
    chatBox.innerHTML = '';
    const threads = threadsFromEvents(chatEvents);
    for (const thread of Object.values(threads)) {
        const who = Object.values(vm.agents).find((a) => a.agentId === thread.agentId);
        for (const turn of thread.turns) {
            const row = document.createElement('div');
            row.className = turn.from === 'mayor' ? 'chat-mayor' : 'chat-agent';
            row.textContent = `${turn.from === 'mayor' ? 'you' : who?.name ?? turn.agentId}: ${turn.text}`;
            chatBox.appendChild(row);
        }
        if (thread.ended && thread.turns.length) {
            const mark = document.createElement('div');
            mark.className = 'chat-ended';
            mark.textContent = '— exchange complete —';
            chatBox.appendChild(mark);
        }
    }
    chatBox.scrollTop = chatBox.scrollHeight;

    const mayorOnly = client.role === 'mayor';
    el<HTMLButtonElement>('chat-send').disabled = !mayorOnly;
    el<HTMLInputElement>('chat-text').disabled = !mayorOnly;
    el<HTMLDivElement>('chat-note').textContent = mayorOnly
        ? ''
        : 'observer session: chat is mayor-only (reload with ?role=mayor)';
}

function fillSelect(id: string, values: string[]): void {
    const select = el<HTMLSelectElement>(id);
    if (select.options.length === values.length) return;
    select.innerHTML = '';
    for (const value of values) {
        const option = document.createElement('option');
        option.value = value;
        option.textContent = value;
        select.appendChild(option);
    }
}

function wireControls(): void {
    el<HTMLButtonElement>('pause').onclick = () => void client.pause();
    el<HTMLButtonElement>('resume').onclick = () => void client.resume();
    el<HTMLInputElement>('speed-slider').onchange = (event) => {
        void client.setTicksPerSec(Number((event.target as HTMLInputElement).value));
    };

    el<HTMLButtonElement>('agent-submit').onclick = () => {
        const form = {
            ...emptyAgentForm(client.vm),
            name: el<HTMLInputElement>('agent-name').value,
            bio: el<HTMLInputElement>('agent-bio').value,
            goal: el<HTMLInputElement>('agent-goal').value,
            backend: el<HTMLSelectElement>('agent-backend').value,
            memorySystem: el<HTMLSelectElement>('agent-memory').value,
            planSystem: el<HTMLSelectElement>('agent-plan').value,
            cash: Number(el<HTMLInputElement>('agent-cash').value || '0'),
            spawn: [
                Number(el<HTMLInputElement>('agent-x').value || '0'),
                Number(el<HTMLInputElement>('agent-y').value || '0'),
            ] as [number, number],
        };
        void client.createAgent(form).then((errors) => {
            if (errors.length) toast(errors.join('; '));
        });
    };
    el<HTMLButtonElement>('agent-pick-spawn').onclick = () => {
        spawnPicking = true;
        toast('click the map to pick a spawn cell');
    };

    el<HTMLButtonElement>('building-place').onclick = () => {
        placing = Number(el<HTMLSelectElement>('building-id').value);
        toast('click the map to place the building');
    };

    el<HTMLCanvasElement>('map').onclick = (event) => {
        const cell = cellFromClick(el<HTMLCanvasElement>('map'), event.clientX, event.clientY);
        if (spawnPicking) {
            el<HTMLInputElement>('agent-x').value = String(cell[0]);
            el<HTMLInputElement>('agent-y').value = String(cell[1]);
            spawnPicking = false;
            return;
        }
        if (placing !== null) {
            const buildingId = placing;
            placing = null;
            void client.createBuilding({ buildingId, origin: cell }).then((errors) => {
                if (errors.length) toast(errors.join('; '));
            });
        }
    };

    el<HTMLButtonElement>('chat-send').onclick = () => {
        const text = el<HTMLInputElement>('chat-text').value;
        const target = el<HTMLSelectElement>('chat-target').value;
        void client.mayorSay(target, text).then((errors) => {
            if (!errors.length) el<HTMLInputElement>('chat-text').value = '';
            else toast(errors.join('; '));
        });
    };
}

wireControls();
client.connect();
