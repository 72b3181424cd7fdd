/** Schema validation for every text frame, both directions. */

import Ajv2020 from "ajv/dist/2020.js";
import schema from "./wire.schema.json" with { type: "json" };
import type { TextFrame } from "./protocol.js";

const ajv = new Ajv2020({ allErrors: false });
const check = ajv.compile(schema);

export class FrameError extends Error {}

/** Parse and validate one inbound text frame. */
export function parseFrame(text: string): TextFrame {
  let obj: unknown;
  try {
    obj = JSON.parse(text);
  } catch (err) {
    throw new FrameError(`frame is not JSON: ${String(err)}`);
  }
  return validateFrame(obj);
}

/** Validate an already-built frame object (used on send too). */
export function validateFrame(obj: unknown): TextFrame {
  if (!check(obj)) {
    const why = ajv.errorsText(check.errors, { separator: "; " });
    throw new FrameError(`frame fails schema: ${why}`);
  }
  return obj as TextFrame;
}
