import { defineConfig } from "vitest/config";

// Dev mode proxies API paths to a locally running `cycleplan serve`; the
// production build is static files served from the same origin as the API
// (`cycleplan serve --static frontend/dist`), so fetch paths stay relative
// to the site root in both setups.
export default defineConfig({
  base: "./",
  server: {
    proxy: {
      "/regions": "http://127.0.0.1:8000",
    },
  },
  build: {
    outDir: "dist",
    sourcemap: false,
  },
  test: {
    environment: "jsdom",
  },
});
