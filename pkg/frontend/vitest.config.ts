import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    include: ["tests/**/*.test.ts"],
    // the e2e file boots the real backend, which takes a few seconds
    testTimeout: 30_000,
    hookTimeout: 120_000,
  },
});
