/**
 * Model back ends the adapter can serve.
 *
 * - table: exact pixel-vector lookup with a default label (the engine's
 *   table model JSON, unchanged).
 * - modsum: pixel sum modulo the label count.
 * - linear: per-label scores over normalized inputs; this is the hook for
 *   real float-input models.  Integer pixels 1..A map to (0, 1] by dividing
 *   by the alphabet size; the removed-pixel sentinel 0 is rendered as a
 *   configurable fill value, mid-gray 0.5 by default.
 */

import * as fs from 'fs';

import { ClassifyRequest } from './protocol';

export interface Model {
  labelCount: number;
  classify(request: ClassifyRequest): number;
}

interface TableConfig {
  kind?: 'table';
  width: number;
  height: number;
  labels: number;
  default: number;
  entries: { pixels: number[]; label: number }[];
}

interface ModsumConfig {
  kind: 'modsum';
  labels: number;
}

interface LinearConfig {
  kind: 'linear';
  labels: number;
  alphabet: number;
  sentinelFill?: number;
  weights: number[][]; // one row of length w*h per label
  bias?: number[];
}

type ModelConfig = TableConfig | ModsumConfig | LinearConfig;

class TableModel implements Model {
  labelCount: number;
  private table = new Map<string, number>();
  private defaultLabel: number;
  private size: number;

  constructor(config: TableConfig) {
    this.labelCount = config.labels;
    this.defaultLabel = config.default;
    this.size = config.width * config.height;
    for (const entry of config.entries) {
      if (entry.pixels.length !== this.size) {
        throw new Error(`table entry has ${entry.pixels.length} pixels, want ${this.size}`);
      }
      this.table.set(entry.pixels.join(','), entry.label);
    }
  }

  classify(request: ClassifyRequest): number {
    const hit = this.table.get(request.pixels.join(','));
    return hit === undefined ? this.defaultLabel : hit;
  }
}

class ModsumModel implements Model {
  constructor(public labelCount: number) {}

  classify(request: ClassifyRequest): number {
    const sum = request.pixels.reduce((a, b) => a + b, 0);
    return sum % this.labelCount;
  }
}

class LinearModel implements Model {
  labelCount: number;
  private alphabet: number;
  private sentinelFill: number;
  private weights: number[][];
  private bias: number[];

  constructor(config: LinearConfig) {
    this.labelCount = config.labels;
    this.alphabet = config.alphabet;
    this.sentinelFill = config.sentinelFill ?? 0.5;
    this.weights = config.weights;
    this.bias = config.bias ?? new Array(config.labels).fill(0);
    if (this.weights.length !== this.labelCount) {
      throw new Error(`linear model needs one weight row per label`);
    }
  }

  normalize(pixel: number): number {
    return pixel === 0 ? this.sentinelFill : pixel / this.alphabet;
  }

  classify(request: ClassifyRequest): number {
    let best = 0;
    let bestScore = -Infinity;
    for (let label = 0; label < this.labelCount; label++) {
      const row = this.weights[label];
      if (row.length !== request.pixels.length) {
        throw new Error(`weight row length ${row.length} does not match input ${request.pixels.length}`);
      }
      let score = this.bias[label];
      for (let i = 0; i < row.length; i++) {
        score += row[i] * this.normalize(request.pixels[i]);
      }
      if (score > bestScore) {
        bestScore = score;
        best = label;
      }
    }
    return best;
  }
}

export function buildModel(config: ModelConfig): Model {
  const kind = config.kind ?? 'table';
  switch (kind) {
    case 'table':
      return new TableModel(config as TableConfig);
    case 'modsum':
      return new ModsumModel((config as ModsumConfig).labels);
    case 'linear':
      return new LinearModel(config as LinearConfig);
    default:
      throw new Error(`unknown model kind ${String(kind)}`);
  }
}

export function loadModel(path: string): Model {
  const config = JSON.parse(fs.readFileSync(path, 'utf8')) as ModelConfig;
  return buildModel(config);
}
