import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    globals: true,
    environment: "happy-dom",
    environmentOptions: {
      // integration tests talk to the spawned API server; making it the
      // document origin keeps happy-dom's same-origin fetch policy happy
      happyDOM: { url: "http://127.0.0.1:8731" },
    },
    testTimeout: 30000,
    hookTimeout: 90000,
  },
});
