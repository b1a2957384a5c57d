/**
 * Binary wire codec: the same 87-byte little-endian layout the server
 * speaks, with a trailing CRC-32 over all preceding bytes.
 */

export const MAGIC_TELECOMMAND = 0x54;
export const MAGIC_FEEDBACK = 0x46;
export const WIRE_VERSION = 1;
export const MESSAGE_SIZE = 87;

export type Vec3 = [number, number, number];
export type Quat = [number, number, number, number]; // w, x, y, z

export interface Telecommand {
  kind: "telecommand";
  seq: number;
  sendTick: number;
  delta: Vec3;
  orientation: Quat;
  gripper: number;
  clutched: boolean;
}

export interface Feedback {
  kind: "feedback";
  seq: number;
  sendTick: number;
  position: Vec3;
  orientation: Quat;
  frameId: number;
}

export type WireMessage = Telecommand | Feedback;

export class WireError extends Error {
  constructor(public field: string, detail: string) {
    super(`${field}: ${detail}`);
    this.name = "WireError";
  }
}

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

export function crc32(bytes: Uint8Array): number {
  let crc = 0xffffffff;
  for (let i = 0; i < bytes.length; i++) {
    crc = CRC_TABLE[(crc ^ bytes[i]) & 0xff] ^ (crc >>> 8);
  }
  return (crc ^ 0xffffffff) >>> 0;
}

function writeHeader(view: DataView, magic: number, seq: number, sendTick: number): void {
  view.setUint8(0, magic);
  view.setUint8(1, WIRE_VERSION);
  view.setBigUint64(2, BigInt(seq), true);
  view.setBigUint64(10, BigInt(sendTick), true);
}

function writePose(view: DataView, offset: number, v: Vec3, q: Quat): void {
  view.setFloat64(offset, v[0], true);
  view.setFloat64(offset + 8, v[1], true);
  view.setFloat64(offset + 16, v[2], true);
  view.setFloat64(offset + 24, q[0], true);
  view.setFloat64(offset + 32, q[1], true);
  view.setFloat64(offset + 40, q[2], true);
  view.setFloat64(offset + 48, q[3], true);
}

function sealCrc(buf: Uint8Array): Uint8Array {
  const view = new DataView(buf.buffer);
  view.setUint32(MESSAGE_SIZE - 4, crc32(buf.subarray(0, MESSAGE_SIZE - 4)), true);
  return buf;
}

export function encodeTelecommand(cmd: Omit<Telecommand, "kind">): Uint8Array {
  const buf = new Uint8Array(MESSAGE_SIZE);
  const view = new DataView(buf.buffer);
  writeHeader(view, MAGIC_TELECOMMAND, cmd.seq, cmd.sendTick);
  writePose(view, 18, cmd.delta, cmd.orientation);
  view.setFloat64(74, cmd.gripper, true);
  view.setUint8(82, cmd.clutched ? 1 : 0);
  return sealCrc(buf);
}

export function encodeFeedback(fb: Omit<Feedback, "kind">): Uint8Array {
  const buf = new Uint8Array(MESSAGE_SIZE);
  const view = new DataView(buf.buffer);
  writeHeader(view, MAGIC_FEEDBACK, fb.seq, fb.sendTick);
  writePose(view, 18, fb.position, fb.orientation);
  view.setBigUint64(74, BigInt(fb.frameId), true);
  view.setUint8(82, 0);
  return sealCrc(buf);
}

export function decodeMessage(bytes: Uint8Array): WireMessage {
  if (bytes.length !== MESSAGE_SIZE) {
    throw new WireError("length", `expected ${MESSAGE_SIZE} bytes, got ${bytes.length}`);
  }
  const magic = bytes[0];
  if (magic !== MAGIC_TELECOMMAND && magic !== MAGIC_FEEDBACK) {
    throw new WireError("magic", `unknown message byte 0x${magic.toString(16)}`);
  }
  if (bytes[1] !== WIRE_VERSION) {
    throw new WireError("version", `expected ${WIRE_VERSION}, got ${bytes[1]}`);
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const stored = view.getUint32(MESSAGE_SIZE - 4, true);
  const actual = crc32(bytes.subarray(0, MESSAGE_SIZE - 4));
  if (stored !== actual) {
    throw new WireError(
      "crc",
      `stored 0x${stored.toString(16)} != computed 0x${actual.toString(16)}`,
    );
  }
  const seq = Number(view.getBigUint64(2, true));
  const sendTick = Number(view.getBigUint64(10, true));
  const vec: Vec3 = [
    view.getFloat64(18, true),
    view.getFloat64(26, true),
    view.getFloat64(34, true),
  ];
  const quat: Quat = [
    view.getFloat64(42, true),
    view.getFloat64(50, true),
    view.getFloat64(58, true),
    view.getFloat64(66, true),
  ];
  if (magic === MAGIC_TELECOMMAND) {
    return {
      kind: "telecommand",
      seq,
      sendTick,
      delta: vec,
      orientation: quat,
      gripper: view.getFloat64(74, true),
      clutched: (bytes[82] & 1) === 1,
    };
  }
  return {
    kind: "feedback",
    seq,
    sendTick,
    position: vec,
    orientation: quat,
    frameId: Number(view.getBigUint64(74, true)),
  };
}
