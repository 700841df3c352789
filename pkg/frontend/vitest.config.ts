import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
    // the e2e test builds fixture artifacts and boots the backing service
    testTimeout: 120_000,
    hookTimeout: 180_000,
  },
});
