/** Binary PPM (P6) and PGM (P5) decoding, maxval 255.  Frames arrive from
 * the service in these formats and are painted to canvas client-side, so
 * the browser needs no video codec at all. */

export interface RasterImage {
  width: number;
  height: number;
  /** RGBA, 4 bytes per pixel, ready for ImageData. */
  rgba: Uint8ClampedArray;
}

function parseHeader(bytes: Uint8Array, magic: string): { width: number; height: number; offset: number } {
  if (bytes.length < 2 || String.fromCharCode(bytes[0], bytes[1]) !== magic) {
    throw new Error(`bad magic, expected ${magic}`);
  }
  const fields: number[] = [];
  let pos = 2;
  while (fields.length < 3) {
    while (pos < bytes.length && isSpace(bytes[pos])) pos++;
    if (bytes[pos] === 0x23) {
      // '#' comment runs to end of line
      while (pos < bytes.length && bytes[pos] !== 0x0a) pos++;
      continue;
    }
    let start = pos;
    while (pos < bytes.length && !isSpace(bytes[pos])) pos++;
    if (pos === start) throw new Error("truncated header");
    fields.push(parseInt(new TextDecoder().decode(bytes.slice(start, pos)), 10));
  }
  pos++; // single whitespace after maxval
  const [width, height, maxval] = fields;
  if (maxval !== 255) throw new Error(`unsupported maxval ${maxval}`);
  return { width, height, offset: pos };
}

function isSpace(b: number): boolean {
  return b === 0x20 || b === 0x09 || b === 0x0a || b === 0x0d;
}

export function decodePpm(bytes: Uint8Array): RasterImage {
  const { width, height, offset } = parseHeader(bytes, "P6");
  const need = width * height * 3;
  if (bytes.length - offset < need) throw new Error("truncated raster");
  const rgba = new Uint8ClampedArray(width * height * 4);
  for (let i = 0; i < width * height; i++) {
    rgba[i * 4] = bytes[offset + i * 3];
    rgba[i * 4 + 1] = bytes[offset + i * 3 + 1];
    rgba[i * 4 + 2] = bytes[offset + i * 3 + 2];
    rgba[i * 4 + 3] = 255;
  }
  return { width, height, rgba };
}

export function decodePgm(bytes: Uint8Array): RasterImage {
  const { width, height, offset } = parseHeader(bytes, "P5");
  const need = width * height;
  if (bytes.length - offset < need) throw new Error("truncated raster");
  const rgba = new Uint8ClampedArray(width * height * 4);
  for (let i = 0; i < width * height; i++) {
    const v = bytes[offset + i];
    rgba[i * 4] = v;
    rgba[i * 4 + 1] = v;
    rgba[i * 4 + 2] = v;
    rgba[i * 4 + 3] = 255;
  }
  return { width, height, rgba };
}
