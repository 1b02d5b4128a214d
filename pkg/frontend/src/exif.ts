import type { ExifMeta } from './records.js'

/**
 * Camera metadata comes in as PNG tEXt entries (keys: timestamp,
 * camera_model, focal_length_mm, lat, lon). Anything absent or unparsable
 * becomes an explicit null in the record.
 */
export function exifFromText(text: Record<string, string>): ExifMeta {
  const cameraModel = text.camera_model ?? null
  const parsed = parseNumber(text.focal_length_mm)
  const focal = parsed !== null && parsed > 0 ? parsed : null
  let lat = parseNumber(text.lat)
  let lon = parseNumber(text.lon)
  // the record format requires the pair together
  if (lat === null || lon === null) {
    lat = null
    lon = null
  }
  return {
    timestamp: text.timestamp ?? null,
    camera_model: cameraModel,
    focal_length_mm: focal,
    is_selfie: selfieHeuristic(cameraModel, focal),
    lat,
    lon,
  }
}

/** Front-facing camera name or a very short focal length marks a selfie;
 * with neither signal available the field stays unknown. */
export function selfieHeuristic(
  cameraModel: string | null,
  focalLengthMm: number | null,
): boolean | null {
  if (cameraModel === null && focalLengthMm === null) return null
  if (cameraModel !== null && /front|selfie/i.test(cameraModel)) return true
  if (focalLengthMm !== null && focalLengthMm < 4) return true
  return false
}

function parseNumber(value: string | undefined): number | null {
  if (value === undefined) return null
  const parsed = Number(value)
  return Number.isFinite(parsed) ? parsed : null
}
