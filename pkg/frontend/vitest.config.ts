import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
    // the fidelity suite spawns the backend and drives it over HTTP
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
