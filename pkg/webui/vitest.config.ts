import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    // The integration suite boots the real Python service.
    testTimeout: 120_000,
    hookTimeout: 60_000,
  },
});
