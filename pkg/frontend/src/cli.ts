#!/usr/bin/env node
import * as fs from 'node:fs'
import { pathToFileURL } from 'node:url'
import { parseArgs } from 'node:util'
import { extractGallery, extractVideo } from './extract.js'
import type { Tier } from './models.js'

const USAGE = `usage: gallery-extract extract --tier {fast|accurate} --in <dir> --out <file>
                               [--video --stride N] [--ocr-map <file>]
                               [--weights <manifest>]

Extracts one feature record per image (or per sampled video frame) into a
gallery record file the profiling engine can load directly.`

export function main(argv: string[]): number {
  let parsed
  try {
    parsed = parseArgs({
      args: argv,
      allowPositionals: true,
      options: {
        tier: { type: 'string' },
        in: { type: 'string' },
        out: { type: 'string' },
        video: { type: 'boolean', default: false },
        stride: { type: 'string', default: '4' },
        'ocr-map': { type: 'string' },
        weights: { type: 'string' },
        help: { type: 'boolean', short: 'h', default: false },
      },
    })
  } catch (err) {
    console.error((err as Error).message)
    console.error(USAGE)
    return 2
  }
  if (parsed.values.help) {
    console.log(USAGE)
    return 0
  }
  const command = parsed.positionals[0]
  if (command !== 'extract') {
    console.error(command ? `unknown command '${command}'` : USAGE)
    return 2
  }
  const { tier, in: inDir, out } = parsed.values
  if (!tier || !inDir || !out) {
    console.error('extract needs --tier, --in and --out')
    return 2
  }
  if (tier !== 'fast' && tier !== 'accurate') {
    console.error(`--tier must be fast or accurate, got '${tier}'`)
    return 2
  }

  try {
    const ocrMap = parsed.values['ocr-map']
      ? JSON.parse(fs.readFileSync(parsed.values['ocr-map'], 'utf-8'))
      : undefined
    const options = { ocrMap, weightsPath: parsed.values.weights }
    let count: number
    if (parsed.values.video) {
      const stride = Number(parsed.values.stride)
      count = extractVideo(inDir, stride, tier as Tier, out, options)
      console.log(`extracted ${count} frames from ${inDir} to ${out}`)
    } else {
      count = extractGallery(inDir, tier as Tier, out, options)
      console.log(`extracted ${count} images from ${inDir} to ${out}`)
    }
    return 0
  } catch (err) {
    console.error(`error: ${(err as Error).message}`)
    return 1
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === pathToFileURL(process.argv[1]).href

if (invokedDirectly) {
  process.exitCode = main(process.argv.slice(2))
}
