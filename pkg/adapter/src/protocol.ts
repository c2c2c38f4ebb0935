/**
 * The classifier wire protocol: newline-delimited JSON over stdin/stdout.
 *
 * Handshake first:  {"id":0,"hello":"patchcert/1"} -> {"id":0,"ack":"patchcert/1"}
 * Then one request at a time:
 *   {"id":n,"w":6,"h":6,"labels":3,"pixels":[...]} -> {"id":n,"label":2}
 * Malformed requests get {"id":n|0,"error":"..."} and the session continues.
 */

export const PROTOCOL_VERSION = 'patchcert/1';

export interface ClassifyRequest {
  id: number;
  w: number;
  h: number;
  labels: number;
  pixels: number[];
}

export interface OkResponse {
  id: number;
  label: number;
}

export interface ErrorResponse {
  id: number;
  error: string;
}

export interface AckResponse {
  id: 0;
  ack: string;
}

export type Response = OkResponse | ErrorResponse | AckResponse;

export function encodeResponse(response: Response): string {
  return JSON.stringify(response) + '\n';
}

/** Parse and validate one request line; throws Error with a message on violation. */
export function parseRequest(line: string): ClassifyRequest {
  let raw: unknown;
  try {
    raw = JSON.parse(line);
  } catch {
    throw new Error('request is not valid JSON');
  }
  if (typeof raw !== 'object' || raw === null || Array.isArray(raw)) {
    throw new Error('request must be a JSON object');
  }
  const obj = raw as Record<string, unknown>;
  const id = obj.id;
  if (typeof id !== 'number' || !Number.isInteger(id) || id < 0) {
    throw new Error('request id must be a non-negative integer');
  }
  for (const field of ['w', 'h', 'labels'] as const) {
    const v = obj[field];
    if (typeof v !== 'number' || !Number.isInteger(v) || v < 1) {
      throw new Error(`request field ${field} must be a positive integer`);
    }
  }
  const pixels = obj.pixels;
  if (!Array.isArray(pixels) || !pixels.every((p) => typeof p === 'number' && Number.isInteger(p) && p >= 0)) {
    throw new Error('request pixels must be an array of non-negative integers');
  }
  const w = obj.w as number;
  const h = obj.h as number;
  if (pixels.length !== w * h) {
    throw new Error(`pixels length ${pixels.length} does not match w*h = ${w * h}`);
  }
  return { id, w, h, labels: obj.labels as number, pixels: pixels as number[] };
}

export function isHandshake(raw: unknown): raw is { id: number; hello: string } {
  return (
    typeof raw === 'object' && raw !== null &&
    (raw as Record<string, unknown>).id === 0 &&
    typeof (raw as Record<string, unknown>).hello === 'string'
  );
}
