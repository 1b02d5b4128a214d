import * as fs from 'node:fs'
import * as path from 'node:path'
import { fileURLToPath } from 'node:url'
import * as tf from '@tensorflow/tfjs'
import { mulberry32, normalArray } from './rng.js'
import type { FaceObservation } from './records.js'
import type { DecodedImage } from './png.js'

/**
 * Stand-in extraction networks.
 *
 * Weights are expanded deterministically from per-model seeds in the
 * weight manifest, so the same image always produces the same record and
 * swapping in real pretrained models later only means replacing this
 * module. The fast tier uses a smaller network than the accurate tier,
 * but the record format deliberately hides which model produced a vector.
 */

export interface WeightManifest {
  format: 1
  input_size: number
  scene_embedding_dim: number
  num_scenes: number
  num_objects: number
  face_embedding_dim: number
  num_age_bins: number
  num_ethnicities: number
  seeds: Record<string, number>
}

export type Tier = 'fast' | 'accurate'

const HERE = path.dirname(fileURLToPath(import.meta.url))
const DEFAULT_MANIFEST = path.resolve(HERE, '..', 'models', 'weights.json')

export function loadManifest(manifestPath?: string): WeightManifest {
  const file = manifestPath ?? DEFAULT_MANIFEST
  if (!fs.existsSync(file)) {
    throw new Error(
      `weight manifest not found at ${file}; restore models/weights.json ` +
        'from the repository (it ships with the package) or pass ' +
        '--weights pointing at a manifest file',
    )
  }
  const manifest = JSON.parse(fs.readFileSync(file, 'utf-8'))
  if (manifest.format !== 1) {
    throw new Error(`unsupported weight manifest format ${manifest.format}`)
  }
  return manifest as WeightManifest
}

function weightTensor(
  rand: () => number,
  shape: number[],
  fanIn: number,
): tf.Tensor {
  const size = shape.reduce((a, b) => a * b, 1)
  return tf.tensor(normalArray(rand, size, 1 / Math.sqrt(fanIn)), shape)
}

/** Decode bytes to a normalized `[1, size, size, 3]` tensor in [-1, 1]. */
export function imageTensor(image: DecodedImage, size: number): tf.Tensor4D {
  const { width, height, channels, pixels } = image
  const rgb = new Float32Array(size * size * 3)
  // area-average resize; deterministic and good enough for stand-ins
  for (let oy = 0; oy < size; oy++) {
    const y0 = Math.floor((oy * height) / size)
    const y1 = Math.max(y0 + 1, Math.floor(((oy + 1) * height) / size))
    for (let ox = 0; ox < size; ox++) {
      const x0 = Math.floor((ox * width) / size)
      const x1 = Math.max(x0 + 1, Math.floor(((ox + 1) * width) / size))
      let r = 0
      let g = 0
      let b = 0
      for (let y = y0; y < y1; y++) {
        for (let x = x0; x < x1; x++) {
          const at = (y * width + x) * channels
          r += pixels[at]
          g += pixels[at + 1]
          b += pixels[at + 2]
        }
      }
      const n = (y1 - y0) * (x1 - x0)
      const out = (oy * size + ox) * 3
      rgb[out] = (r / n) / 127.5 - 1
      rgb[out + 1] = (g / n) / 127.5 - 1
      rgb[out + 2] = (b / n) / 127.5 - 1
    }
  }
  return tf.tensor4d(rgb, [1, size, size, 3])
}

function renormalized(values: Float32Array | Int32Array | Uint8Array): number[] {
  let total = 0
  for (const v of values) total += v
  return Array.from(values, v => v / total)
}

export interface SceneOutput {
  embedding: number[]
  scores: number[]
}

export class SceneNet {
  private conv: tf.Tensor[] = []
  private embed: tf.Tensor
  private head: tf.Tensor

  constructor(manifest: WeightManifest, tier: Tier) {
    const rand = mulberry32(manifest.seeds[`scene_${tier}`])
    const size = manifest.input_size
    // fast: one conv block; accurate: two
    const filters = tier === 'fast' ? [8] : [16, 16]
    let channels = 3
    for (const f of filters) {
      this.conv.push(weightTensor(rand, [3, 3, channels, f], 9 * channels))
      channels = f
    }
    const flat = (size / 4) * (size / 4) * channels
    this.embed = weightTensor(rand, [flat, manifest.scene_embedding_dim], flat)
    this.head = weightTensor(
      rand,
      [manifest.scene_embedding_dim, manifest.num_scenes],
      manifest.scene_embedding_dim,
    )
  }

  run(input: tf.Tensor4D): SceneOutput {
    return tf.tidy(() => {
      let x: tf.Tensor4D = input
      for (const kernel of this.conv) {
        x = tf.relu(tf.conv2d(x, kernel as tf.Tensor4D, 1, 'same'))
      }
      x = tf.maxPool(x, 2, 2, 'same')
      x = tf.avgPool(x, 2, 2, 'same')
      const flat = tf.reshape(x, [1, -1])
      // the one-but-last layer is the reusable feature vector
      const embedding = tf.tanh(tf.matMul(flat, this.embed as tf.Tensor2D))
      const scores = tf.softmax(tf.matMul(embedding, this.head as tf.Tensor2D))
      return {
        embedding: Array.from(embedding.dataSync()),
        scores: renormalized(scores.dataSync()),
      }
    })
  }
}

export class ObjectNet {
  private kernel: tf.Tensor
  private patch: number

  constructor(manifest: WeightManifest, tier: Tier) {
    const rand = mulberry32(manifest.seeds[`object_${tier}`])
    // fast scans a coarse 2x2 grid of patches, accurate a 4x4 grid; each
    // patch scores every class and the record keeps the per-class maximum
    this.patch = manifest.input_size / (tier === 'fast' ? 2 : 4)
    this.kernel = weightTensor(
      rand,
      [this.patch, this.patch, 3, manifest.num_objects],
      this.patch * this.patch * 3,
    )
  }

  run(input: tf.Tensor4D): number[] {
    return tf.tidy(() => {
      const grid = tf.sigmoid(
        tf.conv2d(input, this.kernel as tf.Tensor4D, this.patch, 'valid'),
      )
      const confidences = tf.max(grid, [0, 1, 2])
      return Array.from(confidences.dataSync())
    })
  }
}

export class FaceNet {
  private grid = 4
  private detect: tf.Tensor
  private embed: tf.Tensor
  private age: tf.Tensor
  private gender: tf.Tensor
  private ethnicity: tf.Tensor
  private threshold = 0.62
  private inputSize: number

  constructor(manifest: WeightManifest) {
    const rand = mulberry32(manifest.seeds.face)
    this.inputSize = manifest.input_size
    const patch = this.inputSize / this.grid
    const features = patch * patch * 3
    this.detect = weightTensor(rand, [patch, patch, 3, 1], features)
    this.embed = weightTensor(
      rand, [patch, patch, 3, manifest.face_embedding_dim], features)
    this.age = weightTensor(
      rand, [patch, patch, 3, manifest.num_age_bins], features)
    this.gender = weightTensor(rand, [patch, patch, 3, 2], features)
    this.ethnicity = weightTensor(
      rand, [patch, patch, 3, manifest.num_ethnicities], features)
  }

  run(
    input: tf.Tensor4D,
    imageWidth: number,
    imageHeight: number,
  ): FaceObservation[] {
    const patch = this.inputSize / this.grid
    const run = (kernel: tf.Tensor, activate: (t: tf.Tensor) => tf.Tensor) =>
      tf.tidy(
        () =>
          activate(
            tf.conv2d(input, kernel as tf.Tensor4D, patch, 'valid'),
          ).dataSync() as Float32Array,
      )
    const faceness = run(this.detect, tf.sigmoid)
    const embeddings = run(this.embed, tf.tanh)
    const ages = run(this.age, t => tf.softmax(t, -1))
    const genders = run(this.gender, t => tf.softmax(t, -1))
    const ethnicities = run(this.ethnicity, t => tf.softmax(t, -1))

    const faces: FaceObservation[] = []
    const cells = this.grid * this.grid
    const scaleX = imageWidth / this.inputSize
    const scaleY = imageHeight / this.inputSize
    const sub = (data: Float32Array, cell: number, n: number) =>
      data.subarray(cell * n, (cell + 1) * n)
    for (let cell = 0; cell < cells; cell++) {
      if (faceness[cell] < this.threshold) continue
      const gy = Math.floor(cell / this.grid)
      const gx = cell % this.grid
      faces.push({
        bbox: [
          gx * patch * scaleX,
          gy * patch * scaleY,
          patch * scaleX,
          patch * scaleY,
        ],
        image_size: [imageWidth, imageHeight],
        embedding: Array.from(sub(embeddings, cell, embeddings.length / cells)),
        age_scores: renormalized(sub(ages, cell, ages.length / cells)),
        gender_scores: renormalized(sub(genders, cell, genders.length / cells)),
        ethnicity_scores: renormalized(
          sub(ethnicities, cell, ethnicities.length / cells)),
      })
    }
    return faces
  }
}

export interface ExtractorModels {
  manifest: WeightManifest
  scene: SceneNet
  objects: ObjectNet
  faces: FaceNet
}

export function loadModels(tier: Tier, manifestPath?: string): ExtractorModels {
  const manifest = loadManifest(manifestPath)
  return {
    manifest,
    scene: new SceneNet(manifest, tier),
    objects: new ObjectNet(manifest, tier),
    faces: new FaceNet(manifest),
  }
}
