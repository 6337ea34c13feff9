/**
 * Canvas painting of the town grid. Buildings are flat colored tiles keyed
 * by their assets label, agents are dots with name tags, optimistic
 * pending markers render as ghosts until the server confirms them.
 */

import type { ViewModel } from './viewmodel.js';

export const TILE = 40;

/** Stable hue from an assets label so each building family keeps a color. */
export function colorForAssets(assets: string): string {
    let hash = 2166136261;
    for (let i = 0; i < assets.length; i++) {
        hash ^= assets.charCodeAt(i);
        hash = Math.imul(hash, 16777619) >>> 0;
    }
    return `hsl(${hash % 360}, 45%, 62%)`;
}

export function drawWorld(canvas: HTMLCanvasElement, vm: ViewModel): void {
    const ctx = canvas.getContext('2d');
    if (!ctx) return;
    canvas.width = Math.max(1, vm.map.width) * TILE;
    canvas.height = Math.max(1, vm.map.height) * TILE;

    ctx.fillStyle = '#e8efe4';
    ctx.fillRect(0, 0, canvas.width, canvas.height);
    ctx.strokeStyle = '#d2dccb';
    for (let x = 0; x <= vm.map.width; x++) {
        ctx.beginPath();
        ctx.moveTo(x * TILE, 0);
        ctx.lineTo(x * TILE, vm.map.height * TILE);
        ctx.stroke();
    }
    for (let y = 0; y <= vm.map.height; y++) {
        ctx.beginPath();
        ctx.moveTo(0, y * TILE);
        ctx.lineTo(vm.map.width * TILE, y * TILE);
        ctx.stroke();
    }

    for (const placement of vm.map.placements) {
        const building = vm.buildings[String(placement.building_id)];
        if (!building) continue;
        const color = colorForAssets(building.assets || building.kind);
        building.blocks.forEach((row, dy) => {
            row.forEach((solid, dx) => {
                if (!solid) return;
                ctx.fillStyle = color;
                ctx.fillRect(
                    (placement.origin[0] + dx) * TILE + 1,
                    (placement.origin[1] + dy) * TILE + 1,
                    TILE - 2,
                    TILE - 2,
                );
            });
        });
        ctx.fillStyle = '#222';
        ctx.font = '11px sans-serif';
        ctx.fillText(
            `${building.kind}#${placement.building_id}`,
            placement.origin[0] * TILE + 3,
            placement.origin[1] * TILE + 13,
        );
        for (const slot of building.equipment) {
            ctx.fillStyle = '#4a3b2a';
            ctx.fillRect(
                (placement.origin[0] + slot.cell[0]) * TILE + TILE / 2 - 5,
                (placement.origin[1] + slot.cell[1]) * TILE + TILE / 2 - 5,
                10,
                10,
            );
        }
    }

    for (const marker of vm.pending) {
        ctx.globalAlpha = 0.5;
        ctx.fillStyle = marker.status === 'failed' ? '#c0392b' : '#7f8c8d';
        ctx.beginPath();
        ctx.arc(marker.cell[0] * TILE + TILE / 2, marker.cell[1] * TILE + TILE / 2, TILE / 3, 0, Math.PI * 2);
        ctx.fill();
        ctx.globalAlpha = 1;
    }

    for (const marker of Object.values(vm.agents)) {
        const [x, y] = marker.location;
        ctx.fillStyle = marker.status === 'moving' ? '#2980b9' : '#27ae60';
        ctx.beginPath();
        ctx.arc(x * TILE + TILE / 2, y * TILE + TILE / 2, TILE / 3, 0, Math.PI * 2);
        ctx.fill();
        ctx.fillStyle = '#111';
        ctx.font = '11px sans-serif';
        ctx.fillText(`${marker.name} $${marker.cash}`, x * TILE + 2, (y + 1) * TILE - 3);
    }
}

export function cellFromClick(canvas: HTMLCanvasElement, clientX: number, clientY: number): [number, number] {
    const rect = canvas.getBoundingClientRect();
    const scaleX = canvas.width / rect.width;
    const scaleY = canvas.height / rect.height;
    return [
        Math.floor(((clientX - rect.left) * scaleX) / TILE),
        Math.floor(((clientY - rect.top) * scaleY) / TILE),
    ];
}
