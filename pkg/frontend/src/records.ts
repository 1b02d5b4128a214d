/**
 * Gallery record file writer.
 *
 * The on-disk format is owned by the profiling engine; this module only
 * reproduces it: a JSON Lines file whose first line is a header declaring
 * the vector dimensions, followed by one record per line. Unknown EXIF
 * values are explicit nulls, never missing keys.
 */

export interface GalleryHeader {
  version: 1
  /** scene embedding length */
  D: number
  /** scene score length */
  S: number
  /** object confidence length */
  O: number
  /** face embedding length */
  D_face: number
  age_bin_edges: number[]
  ethnicity_labels?: string[]
}

export interface FaceObservation {
  /** x, y, width, height in source pixels */
  bbox: [number, number, number, number]
  /** source width, height in pixels */
  image_size: [number, number]
  embedding: number[]
  age_scores: number[]
  gender_scores: number[]
  ethnicity_scores: number[]
}

export interface ExifMeta {
  timestamp: string | null
  camera_model: string | null
  focal_length_mm: number | null
  is_selfie: boolean | null
  lat: number | null
  lon: number | null
}

export interface ImageFeatureRecord {
  photo_id: string
  media_kind: 'photo' | 'video_frame'
  video_id: string | null
  frame_index: number | null
  scene_embedding: number[]
  scene_scores: number[]
  object_confidences: number[]
  faces: FaceObservation[]
  ocr_text: string
  exif: ExifMeta
  tier: 'fast' | 'accurate'
}

export const EMPTY_EXIF: ExifMeta = {
  timestamp: null,
  camera_model: null,
  focal_length_mm: null,
  is_selfie: null,
  lat: null,
  lon: null,
}

export function defaultAgeBinEdges(): number[] {
  const edges: number[] = []
  for (let age = 0; age <= 100; age += 5) edges.push(age)
  return edges
}

export function headerLine(header: GalleryHeader): string {
  const payload: Record<string, unknown> = {
    version: header.version,
    D: header.D,
    S: header.S,
    O: header.O,
    D_face: header.D_face,
    age_bin_edges: header.age_bin_edges,
  }
  if (header.ethnicity_labels) {
    payload.ethnicity_labels = header.ethnicity_labels
  }
  return JSON.stringify(payload)
}

export function recordLine(record: ImageFeatureRecord): string {
  return JSON.stringify({
    photo_id: record.photo_id,
    media_kind: record.media_kind,
    video_id: record.video_id,
    frame_index: record.frame_index,
    f: record.scene_embedding,
    p: record.scene_scores,
    o: record.object_confidences,
    faces: record.faces.map(face => ({
      bbox: face.bbox,
      image_size: face.image_size,
      x: face.embedding,
      a: face.age_scores,
      g: face.gender_scores,
      e: face.ethnicity_scores,
    })),
    ocr_text: record.ocr_text,
    exif: record.exif,
    tier: record.tier,
  })
}

export function galleryFile(
  header: GalleryHeader,
  records: ImageFeatureRecord[],
): string {
  const lines = [headerLine(header)]
  for (const record of records) lines.push(recordLine(record))
  return lines.join('\n') + '\n'
}
