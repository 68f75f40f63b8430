import fs from "node:fs";
import { PNG } from "pngjs";

import { BridgeError, DecodedImage } from "./types";

function fromRgba(width: number, height: number, rgba: Uint8Array): DecodedImage {
  const out = new Float32Array(width * height * 3);
  for (let i = 0, j = 0; i < rgba.length; i += 4, j += 3) {
    out[j] = rgba[i];
    out[j + 1] = rgba[i + 1];
    out[j + 2] = rgba[i + 2];
  }
  return { width, height, data: out };
}

function decodePng(buf: Buffer, file: string): DecodedImage {
  let png: PNG;
  try {
    png = PNG.sync.read(buf);
  } catch (err) {
    throw new BridgeError(`cannot decode PNG ${file}: ${err}`);
  }
  return fromRgba(png.width, png.height, png.data);
}

/** Binary PPM (P6) / PGM (P5) decoder; grayscale is replicated to RGB. */
function decodePnm(buf: Buffer, file: string): DecodedImage {
  const magic = buf.subarray(0, 2).toString("ascii");
  const channels = magic === "P6" ? 3 : 1;
  // header: magic, width, height, maxval, single whitespace, then raster
  let pos = 2;
  const fields: number[] = [];
  while (fields.length < 3 && pos < buf.length) {
    while (pos < buf.length && /\s/.test(String.fromCharCode(buf[pos]))) pos++;
    if (buf[pos] === 0x23) {
      while (pos < buf.length && buf[pos] !== 0x0a) pos++;
      continue;
    }
    let tok = "";
    while (pos < buf.length && !/\s/.test(String.fromCharCode(buf[pos]))) {
      tok += String.fromCharCode(buf[pos]);
      pos++;
    }
    fields.push(Number(tok));
  }
  pos++; // the single whitespace after maxval
  const [width, height, maxval] = fields;
  if (!width || !height || maxval !== 255) {
    throw new BridgeError(`unsupported PNM header in ${file} (need 8-bit, got maxval ${maxval})`);
  }
  const expected = width * height * channels;
  const raster = buf.subarray(pos, pos + expected);
  if (raster.length < expected) {
    throw new BridgeError(`truncated PNM file ${file}`);
  }
  const out = new Float32Array(width * height * 3);
  for (let i = 0; i < width * height; i++) {
    if (channels === 3) {
      out[3 * i] = raster[3 * i];
      out[3 * i + 1] = raster[3 * i + 1];
      out[3 * i + 2] = raster[3 * i + 2];
    } else {
      out[3 * i] = out[3 * i + 1] = out[3 * i + 2] = raster[i];
    }
  }
  return { width, height, data: out };
}

export function loadImage(file: string): DecodedImage {
  let buf: Buffer;
  try {
    buf = fs.readFileSync(file);
  } catch (err) {
    throw new BridgeError(`cannot read image ${file}: ${err}`);
  }
  if (buf.length >= 8 && buf[0] === 0x89 && buf[1] === 0x50) {
    return decodePng(buf, file);
  }
  const magic = buf.subarray(0, 2).toString("ascii");
  if (magic === "P5" || magic === "P6") {
    return decodePnm(buf, file);
  }
  throw new BridgeError(`unsupported image format in ${file} (need PNG or binary PPM/PGM)`);
}
