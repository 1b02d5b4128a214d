import { defineConfig } from 'vitest/config'

export default defineConfig({
  test: {
    // extraction tests spawn the profiling engine's CLI and small tfjs
    // networks; give them room on slow machines
    testTimeout: 60_000,
    include: ['test/**/*.test.ts'],
  },
})
