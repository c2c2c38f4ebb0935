/**
 * The request loop: one line in, one line out, in order.
 *
 * The first line must be the version handshake; a wrong version is refused
 * and the session ends.  After that, malformed requests get an error
 * response and the session continues; only an internal model failure is
 * fatal.
 */

import { Model } from './model';
import {
  PROTOCOL_VERSION,
  Response,
  encodeResponse,
  isHandshake,
  parseRequest,
} from './protocol';

export class FatalSessionError extends Error {}

export class Session {
  private ready = false;

  constructor(private model: Model) {}

  /** Process one input line; returns the response line to write. */
  handleLine(line: string): string {
    return encodeResponse(this.respond(line));
  }

  private respond(line: string): Response {
    if (!this.ready) {
      let raw: unknown;
      try {
        raw = JSON.parse(line);
      } catch {
        throw new FatalSessionError('handshake line is not valid JSON');
      }
      if (!isHandshake(raw)) {
        throw new FatalSessionError('expected the version handshake first');
      }
      const hello = (raw as { hello: string }).hello;
      if (hello !== PROTOCOL_VERSION) {
        throw new FatalSessionError(
          `unsupported protocol version ${hello}, want ${PROTOCOL_VERSION}`,
        );
      }
      this.ready = true;
      return { id: 0, ack: PROTOCOL_VERSION };
    }
    let request;
    try {
      request = parseRequest(line);
    } catch (err) {
      const id = recoverId(line);
      return { id, error: (err as Error).message };
    }
    if (request.labels !== this.model.labelCount) {
      return { id: request.id, error: `model serves ${this.model.labelCount} labels, request says ${request.labels}` };
    }
    const label = this.model.classify(request);
    if (!Number.isInteger(label) || label < 0 || label >= this.model.labelCount) {
      throw new FatalSessionError(`model produced out-of-range label ${label}`);
    }
    return { id: request.id, label };
  }
}

/** Best-effort id extraction so error responses can still echo it. */
function recoverId(line: string): number {
  try {
    const raw = JSON.parse(line);
    const id = (raw as Record<string, unknown>)?.id;
    if (typeof id === 'number' && Number.isInteger(id) && id >= 0) {
      return id;
    }
  } catch {
    // fall through to the handshake id
  }
  return 0;
}

export function refusalLine(err: FatalSessionError): string {
  return encodeResponse({ id: 0, error: err.message });
}
