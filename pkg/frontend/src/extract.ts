import * as fs from 'node:fs'
import * as path from 'node:path'
import { decodePng } from './png.js'
import { exifFromText } from './exif.js'
import {
  GalleryHeader,
  ImageFeatureRecord,
  defaultAgeBinEdges,
  galleryFile,
} from './records.js'
import { ExtractorModels, Tier, imageTensor, loadModels } from './models.js'

export interface ExtractOptions {
  /** image filename -> recognized text, from an external OCR tool */
  ocrMap?: Record<string, string>
  weightsPath?: string
  log?: (message: string) => void
}

export const VALID_STRIDES = [3, 4, 5]

export function listImages(dir: string): string[] {
  return fs
    .readdirSync(dir)
    .filter(name => name.toLowerCase().endsWith('.png'))
    .sort()
}

function headerFor(models: ExtractorModels): GalleryHeader {
  const m = models.manifest
  const edges = defaultAgeBinEdges()
  if (edges.length - 1 !== m.num_age_bins) {
    throw new Error(
      `weight manifest declares ${m.num_age_bins} age bins but the ` +
        `record format's default edges give ${edges.length - 1}`,
    )
  }
  return {
    version: 1,
    D: m.scene_embedding_dim,
    S: m.num_scenes,
    O: m.num_objects,
    D_face: m.face_embedding_dim,
    age_bin_edges: edges,
  }
}

function extractOne(
  models: ExtractorModels,
  dir: string,
  name: string,
  tier: Tier,
  ocrMap: Record<string, string>,
): Omit<ImageFeatureRecord, 'photo_id' | 'media_kind' | 'video_id' | 'frame_index'> {
  const image = decodePng(fs.readFileSync(path.join(dir, name)))
  const input = imageTensor(image, models.manifest.input_size)
  try {
    const scene = models.scene.run(input)
    return {
      scene_embedding: scene.embedding,
      scene_scores: scene.scores,
      object_confidences: models.objects.run(input),
      faces: models.faces.run(input, image.width, image.height),
      ocr_text: ocrMap[name] ?? '',
      exif: exifFromText(image.text),
      tier,
    }
  } finally {
    input.dispose()
  }
}

/** One record per decodable image in the directory, in filename order.
 * Undecodable files are skipped with a warning. */
export function extractGallery(
  imageDir: string,
  tier: Tier,
  outPath: string,
  options: ExtractOptions = {},
): number {
  const log = options.log ?? ((m: string) => console.warn(m))
  const models = loadModels(tier, options.weightsPath)
  const records: ImageFeatureRecord[] = []
  for (const name of listImages(imageDir)) {
    let extracted
    try {
      extracted = extractOne(models, imageDir, name, tier, options.ocrMap ?? {})
    } catch (err) {
      log(`skipping ${name}: ${(err as Error).message}`)
      continue
    }
    records.push({
      photo_id: path.parse(name).name,
      media_kind: 'photo',
      video_id: null,
      frame_index: null,
      ...extracted,
    })
  }
  fs.writeFileSync(outPath, galleryFile(headerFor(models), records))
  return records.length
}

/** Sample every stride-th frame of a clip (a directory of frame images in
 * filename order) and extract each sampled frame. Frame indices refer to
 * positions in the full clip. */
export function extractVideo(
  clipDir: string,
  stride: number,
  tier: Tier,
  outPath: string,
  options: ExtractOptions = {},
): number {
  if (!VALID_STRIDES.includes(stride)) {
    throw new Error(
      `stride must be one of ${VALID_STRIDES.join(', ')}, got ${stride}`,
    )
  }
  const models = loadModels(tier, options.weightsPath)
  const frames = listImages(clipDir)
  if (frames.length === 0) {
    throw new Error(`clip directory ${clipDir} contains no decodable frames`)
  }
  const videoId = path.basename(path.resolve(clipDir))
  const records: ImageFeatureRecord[] = []
  for (let index = 0; index < frames.length; index += stride) {
    // a broken frame breaks the clip; videos are all or nothing
    const extracted = extractOne(
      models, clipDir, frames[index], tier, options.ocrMap ?? {})
    records.push({
      photo_id: `${videoId}_f${index}`,
      media_kind: 'video_frame',
      video_id: videoId,
      frame_index: index,
      ...extracted,
    })
  }
  fs.writeFileSync(outPath, galleryFile(headerFor(models), records))
  return records.length
}
