/** Small deterministic PRNG so extraction and fixtures never depend on
 * Math.random. Mulberry32: fast, seedable, good enough for weight init. */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0
  return () => {
    state = (state + 0x6d2b79f5) >>> 0
    let t = state
    t = Math.imul(t ^ (t >>> 15), t | 1)
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61)
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296
  }
}

/** Standard normal via Box-Muller on two uniform draws. */
export function gaussian(rand: () => number): number {
  const u = Math.max(rand(), 1e-12)
  const v = rand()
  return Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * v)
}

export function normalArray(
  rand: () => number,
  size: number,
  scale: number,
): Float32Array {
  const out = new Float32Array(size)
  for (let i = 0; i < size; i++) out[i] = gaussian(rand) * scale
  return out
}
