// Entry point: node dist/server.js [--port N] [--host H] [--model M] [--dimension D]

import { createApp } from "./app.js";
import { createEncoder, DEFAULT_DIMENSION, DEFAULT_MODEL } from "./encoder.js";

function flag(name: string, fallback: string): string {
  const index = process.argv.indexOf(`--${name}`);
  if (index >= 0 && index + 1 < process.argv.length) return process.argv[index + 1];
  return fallback;
}

const host = flag("host", "127.0.0.1");
const port = Number(flag("port", "8600"));
const model = flag("model", DEFAULT_MODEL);
const dimension = Number(flag("dimension", String(DEFAULT_DIMENSION)));

const state = { ready: false };
const encoder = createEncoder(model, dimension);
const app = createApp(encoder, state);

const server = app.listen(port, host, () => {
  state.ready = true;
  const address = server.address();
  const actualPort = typeof address === "object" && address ? address.port : port;
  console.log(`embed-service listening on http://${host}:${actualPort} ` +
    `(model=${model}, dimension=${dimension})`);
});
