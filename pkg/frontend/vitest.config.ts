import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    include: ["test/**/*.test.ts"],
    // the integration test spawns the control service; unit files stay fast
    testTimeout: 10_000,
    hookTimeout: 30_000,
  },
});
