import * as fs from 'node:fs'
import * as path from 'node:path'
import { encodePng } from '../src/png.js'
import { mulberry32 } from '../src/rng.js'

/** Paint a deterministic test image: soft color gradient plus a few
 * bright blobs so different images light up different model patches. */
export function paintImage(
  width: number,
  height: number,
  seed: number,
): Uint8Array {
  const rand = mulberry32(seed)
  const base = [rand() * 200, rand() * 200, rand() * 200]
  const pixels = new Uint8Array(width * height * 3)
  const blobs = Array.from({ length: 3 }, () => ({
    x: rand() * width,
    y: rand() * height,
    r: (0.1 + rand() * 0.3) * Math.min(width, height),
    color: [rand() * 255, rand() * 255, rand() * 255],
  }))
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const at = (y * width + x) * 3
      for (let c = 0; c < 3; c++) {
        let value = base[c] * (0.5 + (0.5 * (x + y)) / (width + height))
        for (const blob of blobs) {
          const d = Math.hypot(x - blob.x, y - blob.y)
          if (d < blob.r) value += blob.color[c] * (1 - d / blob.r)
        }
        pixels[at + c] = Math.max(0, Math.min(255, Math.round(value)))
      }
    }
  }
  return pixels
}

const CAMERAS = ['front camera', 'main camera', 'wide camera']

/** Ten deterministic photos with a spread of sizes and metadata shapes:
 * full EXIF, partial EXIF, and none at all. */
export function writeSampleFolder(dir: string, seed = 5): string[] {
  fs.mkdirSync(dir, { recursive: true })
  const rand = mulberry32(seed)
  const names: string[] = []
  for (let i = 0; i < 10; i++) {
    const width = 48 + Math.floor(rand() * 80)
    const height = 36 + Math.floor(rand() * 60)
    const text: Record<string, string> = {}
    if (i % 3 !== 2) {
      text.camera_model = CAMERAS[i % CAMERAS.length]
      text.focal_length_mm = (i % 2 === 0 ? 3.5 : 4.8).toString()
      text.timestamp = `2022-03-${String(1 + i).padStart(2, '0')}T12:00:00Z`
    }
    if (i % 4 === 0) {
      text.lat = (40.7 + i * 0.001).toFixed(4)
      text.lon = (-74.0 + i * 0.001).toFixed(4)
    }
    const name = `img_${String(i).padStart(2, '0')}.png`
    fs.writeFileSync(
      path.join(dir, name),
      encodePng(width, height, paintImage(width, height, seed * 100 + i), {
        text,
      }),
    )
    names.push(name)
  }
  return names
}

/** A clip as a directory of numbered frames. */
export function writeClip(dir: string, frames: number, seed = 9): string[] {
  fs.mkdirSync(dir, { recursive: true })
  const names: string[] = []
  for (let i = 0; i < frames; i++) {
    const name = `frame_${String(i).padStart(3, '0')}.png`
    fs.writeFileSync(
      path.join(dir, name),
      // consecutive frames share a seed base so they drift, not jump
      encodePng(64, 48, paintImage(64, 48, seed * 10 + Math.floor(i / 4))),
    )
    names.push(name)
  }
  return names
}
