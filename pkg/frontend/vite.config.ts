import { defineConfig } from "vitest/config";

export default defineConfig({
  server: {
    proxy: {
      // the python service; `dynavis serve` defaults to this port
      "/api": "http://127.0.0.1:8000",
    },
  },
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
  },
});
