import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    testTimeout: 180_000,
    hookTimeout: 180_000,
    // The overfit and CLI suites are wall-clock sensitive on one core, so
    // keep files sequential instead of letting workers fight for the CPU.
    pool: "forks",
    poolOptions: { forks: { singleFork: true } },
  },
});
