import * as zlib from 'node:zlib'

/**
 * Minimal PNG codec: 8-bit RGB/RGBA, non-interlaced, with tEXt chunks.
 *
 * Gallery fixtures and extractor input both go through this module, so it
 * decodes all five scanline filters but only ever encodes filter 0.
 */

export interface DecodedImage {
  width: number
  height: number
  channels: 3 | 4
  /** row-major, `width * height * channels` bytes */
  pixels: Uint8Array
  /** tEXt chunks in file order */
  text: Record<string, string>
}

const SIGNATURE = Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a])

const CRC_TABLE = (() => {
  const table = new Uint32Array(256)
  for (let n = 0; n < 256; n++) {
    let c = n
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1
    }
    table[n] = c >>> 0
  }
  return table
})()

function crc32(...parts: Buffer[]): number {
  let c = 0xffffffff
  for (const part of parts) {
    for (let i = 0; i < part.length; i++) {
      c = CRC_TABLE[(c ^ part[i]) & 0xff] ^ (c >>> 8)
    }
  }
  return (c ^ 0xffffffff) >>> 0
}

function chunk(type: string, data: Buffer): Buffer {
  const typeBuf = Buffer.from(type, 'latin1')
  const head = Buffer.alloc(4)
  head.writeUInt32BE(data.length)
  const crc = Buffer.alloc(4)
  crc.writeUInt32BE(crc32(typeBuf, data))
  return Buffer.concat([head, typeBuf, data, crc])
}

export function encodePng(
  width: number,
  height: number,
  pixels: Uint8Array,
  options: { channels?: 3 | 4; text?: Record<string, string> } = {},
): Buffer {
  const channels = options.channels ?? 3
  if (pixels.length !== width * height * channels) {
    throw new Error(
      `pixel buffer has ${pixels.length} bytes, expected ` +
        `${width * height * channels}`,
    )
  }
  const ihdr = Buffer.alloc(13)
  ihdr.writeUInt32BE(width, 0)
  ihdr.writeUInt32BE(height, 4)
  ihdr[8] = 8 // bit depth
  ihdr[9] = channels === 3 ? 2 : 6 // color type
  // compression, filter, interlace all 0

  const stride = width * channels
  const raw = Buffer.alloc((stride + 1) * height)
  for (let y = 0; y < height; y++) {
    raw[y * (stride + 1)] = 0 // filter: None
    raw.set(pixels.subarray(y * stride, (y + 1) * stride), y * (stride + 1) + 1)
  }

  const chunks = [SIGNATURE, chunk('IHDR', ihdr)]
  for (const [key, value] of Object.entries(options.text ?? {})) {
    chunks.push(
      chunk('tEXt', Buffer.concat([
        Buffer.from(key, 'latin1'),
        Buffer.from([0]),
        Buffer.from(value, 'latin1'),
      ])),
    )
  }
  chunks.push(chunk('IDAT', zlib.deflateSync(raw, { level: 9 })))
  chunks.push(chunk('IEND', Buffer.alloc(0)))
  return Buffer.concat(chunks)
}

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c
  const pa = Math.abs(p - a)
  const pb = Math.abs(p - b)
  const pc = Math.abs(p - c)
  if (pa <= pb && pa <= pc) return a
  if (pb <= pc) return b
  return c
}

export function decodePng(data: Buffer): DecodedImage {
  if (!data.subarray(0, 8).equals(SIGNATURE)) {
    throw new Error('not a PNG file (bad signature)')
  }
  let width = 0
  let height = 0
  let channels: 3 | 4 = 3
  const text: Record<string, string> = {}
  const idat: Buffer[] = []

  let offset = 8
  while (offset < data.length) {
    const length = data.readUInt32BE(offset)
    const type = data.toString('latin1', offset + 4, offset + 8)
    const body = data.subarray(offset + 8, offset + 8 + length)
    if (type === 'IHDR') {
      width = body.readUInt32BE(0)
      height = body.readUInt32BE(4)
      const bitDepth = body[8]
      const colorType = body[9]
      if (bitDepth !== 8 || (colorType !== 2 && colorType !== 6)) {
        throw new Error(
          `unsupported PNG: bit depth ${bitDepth}, color type ${colorType}`,
        )
      }
      if (body[12] !== 0) throw new Error('interlaced PNG not supported')
      channels = colorType === 2 ? 3 : 4
    } else if (type === 'tEXt') {
      const sep = body.indexOf(0)
      text[body.toString('latin1', 0, sep)] = body.toString('latin1', sep + 1)
    } else if (type === 'IDAT') {
      idat.push(body)
    } else if (type === 'IEND') {
      break
    }
    offset += 12 + length
  }
  if (!width || !height) throw new Error('PNG has no IHDR chunk')

  const raw = zlib.inflateSync(Buffer.concat(idat))
  const stride = width * channels
  if (raw.length !== (stride + 1) * height) {
    throw new Error('PNG scanline data has the wrong size')
  }

  const pixels = new Uint8Array(stride * height)
  for (let y = 0; y < height; y++) {
    const filter = raw[y * (stride + 1)]
    const row = raw.subarray(y * (stride + 1) + 1, (y + 1) * (stride + 1))
    const out = y * stride
    const prev = out - stride
    for (let i = 0; i < stride; i++) {
      const left = i >= channels ? pixels[out + i - channels] : 0
      const up = y > 0 ? pixels[prev + i] : 0
      const upLeft = y > 0 && i >= channels ? pixels[prev + i - channels] : 0
      let value: number
      switch (filter) {
        case 0: value = row[i]; break
        case 1: value = row[i] + left; break
        case 2: value = row[i] + up; break
        case 3: value = row[i] + ((left + up) >> 1); break
        case 4: value = row[i] + paeth(left, up, upLeft); break
        default: throw new Error(`unknown PNG filter ${filter}`)
      }
      pixels[out + i] = value & 0xff
    }
  }
  return { width, height, channels, pixels, text }
}
