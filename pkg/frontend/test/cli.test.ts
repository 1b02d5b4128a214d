import { spawnSync } from 'node:child_process'
import * as fs from 'node:fs'
import * as os from 'node:os'
import * as path from 'node:path'
import { fileURLToPath } from 'node:url'
import { afterAll, beforeAll, describe, expect, it } from 'vitest'
import { writeClip, writeSampleFolder } from './helpers.js'

const CLI = fileURLToPath(new URL('../dist/cli.js', import.meta.url))

let workDir: string
let sampleDir: string

function run(...args: string[]) {
  return spawnSync('node', [CLI, ...args], { encoding: 'utf-8' })
}

beforeAll(() => {
  workDir = fs.mkdtempSync(path.join(os.tmpdir(), 'extractor-cli-'))
  sampleDir = path.join(workDir, 'photos')
  writeSampleFolder(sampleDir)
})

afterAll(() => {
  fs.rmSync(workDir, { recursive: true, force: true })
})

describe('gallery-extract CLI', () => {
  it('extracts a folder of photos', () => {
    const out = path.join(workDir, 'photos.jsonl')
    const result = run('extract', '--tier', 'fast', '--in', sampleDir,
                       '--out', out)
    expect(result.status).toBe(0)
    expect(result.stdout).toContain('extracted 10 images')
    expect(fs.existsSync(out)).toBe(true)
  })

  it('extracts a clip with --video --stride', () => {
    const clip = path.join(workDir, 'clip')
    writeClip(clip, 12)
    const out = path.join(workDir, 'clip.jsonl')
    const result = run('extract', '--tier', 'accurate', '--in', clip,
                       '--out', out, '--video', '--stride', '4')
    expect(result.status).toBe(0)
    expect(result.stdout).toContain('extracted 3 frames')
    const lines = fs.readFileSync(out, 'utf-8').trimEnd().split('\n')
    expect(lines).toHaveLength(4)
  })

  it('applies an OCR map file', () => {
    const mapFile = path.join(workDir, 'ocr.json')
    fs.writeFileSync(mapFile, JSON.stringify({ 'img_05.png': 'menu pizza' }))
    const out = path.join(workDir, 'with_ocr.jsonl')
    const result = run('extract', '--tier', 'fast', '--in', sampleDir,
                       '--out', out, '--ocr-map', mapFile)
    expect(result.status).toBe(0)
    const lines = fs.readFileSync(out, 'utf-8').trimEnd().split('\n')
    expect(JSON.parse(lines[6]).ocr_text).toBe('menu pizza')
  })

  it('exits 2 on usage errors', () => {
    expect(run().status).toBe(2)
    expect(run('extract').status).toBe(2)
    expect(run('extract', '--tier', 'fast', '--in', sampleDir).status).toBe(2)
    expect(run('extract', '--tier', 'best', '--in', sampleDir, '--out',
               path.join(workDir, 'x.jsonl')).status).toBe(2)
    expect(run('shrink', '--tier', 'fast').status).toBe(2)
    expect(run('extract', '--tier', 'fast', '--in', sampleDir, '--out',
               path.join(workDir, 'x.jsonl'), '--frames', '9').status).toBe(2)
  })

  it('exits 1 on runtime failures', () => {
    const result = run('extract', '--tier', 'fast', '--in',
                       path.join(workDir, 'nowhere'), '--out',
                       path.join(workDir, 'y.jsonl'))
    expect(result.status).toBe(1)
    expect(result.stderr).toContain('error:')
  })

  it('prints usage with --help', () => {
    const result = run('--help')
    expect(result.status).toBe(0)
    expect(result.stdout).toContain('--tier {fast|accurate}')
  })
})
