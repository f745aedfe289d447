import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    // training-based tests run a few hundred optimizer steps on CPU
    testTimeout: 180_000,
    hookTimeout: 60_000,
  },
});
