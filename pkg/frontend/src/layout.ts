// Pure topology layout: containers become columns, components boxes inside
// them, connections edges between box anchors. The renderer only draws what
// this module computes, which keeps the geometry testable.

import type { Topology } from "./api.js";

export interface Box {
  id: number;
  impl: string;
  x: number;
  y: number;
  width: number;
  height: number;
  containerId: number;
}

export interface ContainerFrame {
  id: number;
  x: number;
  y: number;
  width: number;
  height: number;
}

export interface Edge {
  fromComponent: number;
  toComponent: number;
  label: string; // "receptacle->facet"
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

export interface TopologyLayout {
  width: number;
  height: number;
  containers: ContainerFrame[];
  boxes: Box[];
  edges: Edge[];
}

const BOX_W = 130;
const BOX_H = 44;
const BOX_GAP = 18;
const PAD = 14;
const COLUMN_GAP = 70;
const TOP = 16;
const LEFT = 16;

export function layoutTopology(topology: Topology): TopologyLayout {
  const containers: ContainerFrame[] = [];
  const boxes: Box[] = [];
  const byComponent = new Map<number, Box>();

  let x = LEFT;
  let maxBottom = TOP;
  for (const container of topology.containers) {
    const count = Math.max(container.components.length, 1);
    const frame: ContainerFrame = {
      id: container.id,
      x,
      y: TOP,
      width: BOX_W + 2 * PAD,
      height: count * BOX_H + (count - 1) * BOX_GAP + 2 * PAD + 18,
    };
    containers.push(frame);
    let y = TOP + PAD + 18;
    for (const component of container.components) {
      const box: Box = {
        id: component.id,
        impl: component.impl,
        x: x + PAD,
        y,
        width: BOX_W,
        height: BOX_H,
        containerId: container.id,
      };
      boxes.push(box);
      byComponent.set(component.id, box);
      y += BOX_H + BOX_GAP;
    }
    maxBottom = Math.max(maxBottom, frame.y + frame.height);
    x += frame.width + COLUMN_GAP;
  }

  const edges: Edge[] = [];
  for (const conn of topology.connections) {
    const from = byComponent.get(conn.source.component);
    const to = byComponent.get(conn.target.component);
    if (from === undefined || to === undefined) {
      continue;
    }
    const leftToRight = from.x <= to.x;
    edges.push({
      fromComponent: from.id,
      toComponent: to.id,
      label: `${conn.source.receptacle}→${conn.target.facet}`,
      x1: leftToRight ? from.x + from.width : from.x,
      y1: from.y + from.height / 2,
      x2: leftToRight ? to.x : to.x + to.width,
      y2: to.y + to.height / 2,
    });
  }

  return {
    width: Math.max(x - COLUMN_GAP + LEFT, 320),
    height: Math.max(maxBottom + 16, 160),
    containers,
    boxes,
    edges,
  };
}
