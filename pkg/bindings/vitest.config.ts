import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    // Every test shells out to the engine CLI, so allow for process startup.
    testTimeout: 30000,
  },
});
