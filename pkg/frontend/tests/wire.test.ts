import { describe, expect, it } from "vitest";

import {
  MESSAGE_SIZE,
  WireError,
  crc32,
  decodeMessage,
  encodeFeedback,
  encodeTelecommand,
} from "../src/wire.js";

// Frozen byte vectors produced by the server implementation; both sides
// must agree bit for bit on the shared wire format.
const SERVER_TELE_PLAIN =
  "54010700000000000000d204000000000000fa7e6abc7493683ffca9f1d24d6250bffca9f1d24d62403f" +
  "000000000000f03f000000000000000000000000000000000000000000000000000000000000d03f00b5770c5c";
const SERVER_TELE_CLUTCHED =
  "54010800000000000000d304000000000000000000000000000000000000000000000000000000000000" +
  "cd3b7f669ea0e63f00000000000000000000000000000000cd3b7f669ea0e63f000000000000000001a041ccf6";
const SERVER_FEEDBACK =
  "46012a000000000000002823000000000000daacfa5c6dc5ae3f7b14ae47e17a94bf79e9263108ac8c3f" +
  "000000000000f03f000000000000000000000000000000000000000000000000090300000000000000ad13d0c8";

function fromHex(hex: string): Uint8Array {
  const out = new Uint8Array(hex.length / 2);
  for (let i = 0; i < out.length; i++) {
    out[i] = parseInt(hex.slice(2 * i, 2 * i + 2), 16);
  }
  return out;
}

function toHex(bytes: Uint8Array): string {
  return Array.from(bytes, (b) => b.toString(16).padStart(2, "0")).join("");
}

describe("cross-implementation vectors", () => {
  it("decodes a server-encoded telecommand", () => {
    const msg = decodeMessage(fromHex(SERVER_TELE_PLAIN));
    expect(msg.kind).toBe("telecommand");
    if (msg.kind !== "telecommand") return;
    expect(msg.seq).toBe(7);
    expect(msg.sendTick).toBe(1234);
    expect(msg.delta[0]).toBeCloseTo(0.003, 15);
    expect(msg.delta[1]).toBeCloseTo(-0.001, 15);
    expect(msg.delta[2]).toBeCloseTo(0.0005, 15);
    expect(msg.orientation).toEqual([1, 0, 0, 0]);
    expect(msg.gripper).toBeCloseTo(0.25, 15);
    expect(msg.clutched).toBe(false);
  });

  it("decodes a clutched telecommand and a feedback frame", () => {
    const clutched = decodeMessage(fromHex(SERVER_TELE_CLUTCHED));
    expect(clutched.kind).toBe("telecommand");
    if (clutched.kind === "telecommand") {
      expect(clutched.clutched).toBe(true);
      expect(clutched.delta).toEqual([0, 0, 0]);
      expect(clutched.orientation[0]).toBeCloseTo(Math.SQRT1_2, 15);
      expect(clutched.orientation[3]).toBeCloseTo(Math.SQRT1_2, 15);
    }
    const fb = decodeMessage(fromHex(SERVER_FEEDBACK));
    expect(fb.kind).toBe("feedback");
    if (fb.kind === "feedback") {
      expect(fb.seq).toBe(42);
      expect(fb.sendTick).toBe(9000);
      expect(fb.position[0]).toBeCloseTo(0.0601, 15);
      expect(fb.frameId).toBe(777);
    }
  });

  it("encodes byte-identically to the server", () => {
    const plain = encodeTelecommand({
      seq: 7,
      sendTick: 1234,
      delta: [0.003, -0.001, 0.0005],
      orientation: [1, 0, 0, 0],
      gripper: 0.25,
      clutched: false,
    });
    expect(toHex(plain)).toBe(SERVER_TELE_PLAIN);
    const fb = encodeFeedback({
      seq: 42,
      sendTick: 9000,
      position: [0.0601, -0.02, 0.014],
      orientation: [1, 0, 0, 0],
      frameId: 777,
    });
    expect(toHex(fb)).toBe(SERVER_FEEDBACK);
  });
});

describe("round trips and sizes", () => {
  it("round-trips a telecommand", () => {
    const cmd = {
      seq: 123456789,
      sendTick: 987654321,
      delta: [0.25, -0.125, 3.5e-7] as [number, number, number],
      orientation: [0.5, 0.5, 0.5, 0.5] as [number, number, number, number],
      gripper: -0.75,
      clutched: false,
    };
    const bytes = encodeTelecommand(cmd);
    expect(bytes.length).toBe(MESSAGE_SIZE);
    const back = decodeMessage(bytes);
    expect(back).toEqual({ kind: "telecommand", ...cmd });
  });

  it("round-trips feedback", () => {
    const fb = {
      seq: 1,
      sendTick: 2,
      position: [1e-3, 2e-3, -3e-3] as [number, number, number],
      orientation: [1, 0, 0, 0] as [number, number, number, number],
      frameId: 4096,
    };
    expect(decodeMessage(encodeFeedback(fb))).toEqual({ kind: "feedback", ...fb });
  });

  it("zero telecommand is exactly 87 bytes", () => {
    const bytes = encodeTelecommand({
      seq: 0,
      sendTick: 0,
      delta: [0, 0, 0],
      orientation: [1, 0, 0, 0],
      gripper: 0,
      clutched: false,
    });
    expect(bytes.length).toBe(87);
  });
});

describe("corruption detection", () => {
  const sample = () =>
    encodeTelecommand({
      seq: 9,
      sendTick: 10,
      delta: [0.1, 0.2, 0.3],
      orientation: [1, 0, 0, 0],
      gripper: 0.5,
      clutched: false,
    });

  it("detects every single-byte flip", () => {
    const data = sample();
    for (let pos = 0; pos < data.length; pos++) {
      const bad = data.slice();
      bad[pos] ^= 0x5a;
      expect(() => decodeMessage(bad)).toThrow(WireError);
    }
  });

  it("names the failing field", () => {
    const data = sample();
    expect(() => decodeMessage(data.subarray(0, 40))).toThrow(/length/);
    const badMagic = data.slice();
    badMagic[0] = 0x00;
    expect(() => decodeMessage(badMagic)).toThrow(/magic/);
    const badCrc = data.slice();
    badCrc[30] ^= 0xff;
    expect(() => decodeMessage(badCrc)).toThrow(/crc/);
  });

  it("crc32 matches the standard test vector", () => {
    const bytes = new TextEncoder().encode("123456789");
    expect(crc32(bytes)).toBe(0xcbf43926);
  });
});
