import { execFileSync, spawnSync } from 'node:child_process'
import * as fs from 'node:fs'
import * as os from 'node:os'
import * as path from 'node:path'
import { afterAll, beforeAll, describe, expect, it } from 'vitest'
import { extractGallery, extractVideo } from '../src/extract.js'
import { writeClip, writeSampleFolder } from './helpers.js'

let workDir: string
let sampleDir: string

/** Ask the profiling engine itself whether a record file is valid. */
function validateWithEngine(recordFile: string): void {
  const result = spawnSync(
    'python3',
    ['-m', 'gallery_profiler.cli', 'route', recordFile],
    { encoding: 'utf-8' },
  )
  expect(result.stderr).toBe('')
  expect(result.status).toBe(0)
}

function readGallery(file: string): { header: any; records: any[] } {
  const lines = fs.readFileSync(file, 'utf-8').trimEnd().split('\n')
  return {
    header: JSON.parse(lines[0]),
    records: lines.slice(1).map(line => JSON.parse(line)),
  }
}

beforeAll(() => {
  workDir = fs.mkdtempSync(path.join(os.tmpdir(), 'extractor-'))
  sampleDir = path.join(workDir, 'sample')
  writeSampleFolder(sampleDir)
})

afterAll(() => {
  fs.rmSync(workDir, { recursive: true, force: true })
})

describe('gallery extraction', () => {
  it('writes a header-only file for an empty folder', () => {
    const emptyDir = path.join(workDir, 'empty')
    fs.mkdirSync(emptyDir)
    const out = path.join(workDir, 'empty.jsonl')
    expect(extractGallery(emptyDir, 'fast', out)).toBe(0)
    const lines = fs.readFileSync(out, 'utf-8').trimEnd().split('\n')
    expect(lines).toHaveLength(1)
    expect(JSON.parse(lines[0]).S).toBe(337)
    validateWithEngine(out)
  })

  it('extracts the ten-image sample folder into valid records', () => {
    const out = path.join(workDir, 'sample_fast.jsonl')
    expect(extractGallery(sampleDir, 'fast', out)).toBe(10)
    const { header, records } = readGallery(out)
    expect(records).toHaveLength(10)
    expect(header.D).toBe(16)
    expect(header.O).toBe(145)
    for (const record of records) {
      expect(record.media_kind).toBe('photo')
      expect(record.tier).toBe('fast')
      expect(record.f).toHaveLength(header.D)
      expect(record.p).toHaveLength(header.S)
      const sum = record.p.reduce((a: number, b: number) => a + b, 0)
      expect(Math.abs(sum - 1)).toBeLessThan(1e-4)
      for (const c of record.o) {
        expect(c).toBeGreaterThanOrEqual(0)
        expect(c).toBeLessThanOrEqual(1)
      }
      for (const face of record.faces) {
        expect(face.x).toHaveLength(header.D_face)
        const [x, y, w, h] = face.bbox
        expect(x).toBeGreaterThanOrEqual(0)
        expect(y).toBeGreaterThanOrEqual(0)
        expect(x + w).toBeLessThanOrEqual(face.image_size[0])
        expect(y + h).toBeLessThanOrEqual(face.image_size[1])
      }
    }
    expect(records.map((r: any) => r.photo_id)).toEqual(
      Array.from({ length: 10 }, (_, i) => `img_${String(i).padStart(2, '0')}`),
    )
    // the cross-component contract: the engine loads it without complaint
    validateWithEngine(out)
  })

  it('passes engine validation on the accurate tier too', () => {
    const out = path.join(workDir, 'sample_accurate.jsonl')
    expect(extractGallery(sampleDir, 'accurate', out)).toBe(10)
    validateWithEngine(out)
    // different network, different vectors
    const fast = readGallery(path.join(workDir, 'sample_fast.jsonl'))
    const accurate = readGallery(out)
    expect(accurate.records[0].f).not.toEqual(fast.records[0].f)
  })

  it('extracts the same folder to identical bytes every time', () => {
    const first = path.join(workDir, 'det_a.jsonl')
    const second = path.join(workDir, 'det_b.jsonl')
    extractGallery(sampleDir, 'fast', first)
    extractGallery(sampleDir, 'fast', second)
    expect(fs.readFileSync(first).equals(fs.readFileSync(second))).toBe(true)
  })

  it('reads camera metadata into EXIF fields', () => {
    const { records } = readGallery(path.join(workDir, 'sample_fast.jsonl'))
    const byId = new Map(records.map((r: any) => [r.photo_id, r]))
    // img_00: front camera, focal 3.5, geo present
    const zero = byId.get('img_00')
    expect(zero.exif.camera_model).toBe('front camera')
    expect(zero.exif.is_selfie).toBe(true)
    expect(zero.exif.lat).toBeCloseTo(40.7, 5)
    expect(zero.exif.timestamp).toBe('2022-03-01T12:00:00Z')
    // img_02 carries no metadata at all
    const two = byId.get('img_02')
    expect(two.exif.camera_model).toBeNull()
    expect(two.exif.is_selfie).toBeNull()
    expect(two.exif.lat).toBeNull()
    // img_01: main camera at 4.8mm is not a selfie
    expect(byId.get('img_01').exif.is_selfie).toBe(false)
  })

  it('attaches recognized text from an OCR map', () => {
    const out = path.join(workDir, 'ocr.jsonl')
    extractGallery(sampleDir, 'fast', out, {
      ocrMap: { 'img_03.png': 'total 12.50 receipt' },
    })
    const { records } = readGallery(out)
    expect(records[3].ocr_text).toBe('total 12.50 receipt')
    expect(records[0].ocr_text).toBe('')
  })

  it('skips undecodable images with a warning and keeps going', () => {
    const brokenDir = path.join(workDir, 'broken')
    writeSampleFolder(brokenDir)
    fs.writeFileSync(path.join(brokenDir, 'img_04.png'), 'not a png at all')
    const warnings: string[] = []
    const out = path.join(workDir, 'broken.jsonl')
    expect(
      extractGallery(brokenDir, 'fast', out, { log: m => warnings.push(m) }),
    ).toBe(9)
    expect(warnings).toHaveLength(1)
    expect(warnings[0]).toContain('img_04.png')
    validateWithEngine(out)
  })

  it('aborts with instructions when the weight manifest is missing', () => {
    const out = path.join(workDir, 'unused.jsonl')
    expect(() =>
      extractGallery(sampleDir, 'fast', out, {
        weightsPath: path.join(workDir, 'missing.json'),
      }),
    ).toThrow(/restore models\/weights\.json/)
  })
})

describe('video extraction', () => {
  it('samples a 12-frame clip at stride 4 into frames 0, 4, 8', () => {
    const clipDir = path.join(workDir, 'holiday_clip')
    writeClip(clipDir, 12)
    const out = path.join(workDir, 'clip.jsonl')
    expect(extractVideo(clipDir, 4, 'fast', out)).toBe(3)
    const { records } = readGallery(out)
    expect(records.map((r: any) => r.frame_index)).toEqual([0, 4, 8])
    for (const record of records) {
      expect(record.media_kind).toBe('video_frame')
      expect(record.video_id).toBe('holiday_clip')
    }
    expect(records.map((r: any) => r.photo_id)).toEqual([
      'holiday_clip_f0', 'holiday_clip_f4', 'holiday_clip_f8',
    ])
    validateWithEngine(out)
  })

  it('keeps a single record for a 2-frame clip at stride 5', () => {
    const clipDir = path.join(workDir, 'short_clip')
    writeClip(clipDir, 2)
    const out = path.join(workDir, 'short.jsonl')
    expect(extractVideo(clipDir, 5, 'fast', out)).toBe(1)
    const { records } = readGallery(out)
    expect(records[0].frame_index).toBe(0)
  })

  it('rejects strides outside 3 to 5', () => {
    const clipDir = path.join(workDir, 'any_clip')
    writeClip(clipDir, 4)
    const out = path.join(workDir, 'unused2.jsonl')
    expect(() => extractVideo(clipDir, 2, 'fast', out)).toThrow(/stride/)
    expect(() => extractVideo(clipDir, 6, 'fast', out)).toThrow(/stride/)
  })

  it('refuses an empty clip directory', () => {
    const emptyClip = path.join(workDir, 'empty_clip')
    fs.mkdirSync(emptyClip)
    const out = path.join(workDir, 'unused3.jsonl')
    expect(() => extractVideo(emptyClip, 4, 'fast', out)).toThrow(/no decod/)
  })

  it('fails the whole clip on a broken frame', () => {
    const clipDir = path.join(workDir, 'corrupt_clip')
    writeClip(clipDir, 6)
    fs.writeFileSync(path.join(clipDir, 'frame_003.png'), 'garbage')
    const out = path.join(workDir, 'unused4.jsonl')
    // stride 3 lands on the corrupt frame
    expect(() => extractVideo(clipDir, 3, 'fast', out)).toThrow(/signature/)
  })
})
