import express, { type Express, type NextFunction, type Request, type Response } from "express";
import { z } from "zod";
import type { Encoder } from "./encoder.js";

export const MAX_BATCH = 256;

const EmbedRequest = z.object({
  texts: z.array(z.string()).min(1).max(MAX_BATCH),
});

export interface ServiceState {
  ready: boolean;
}

export function createApp(encoder: Encoder, state: ServiceState = { ready: true }): Express {
  const app = express();
  app.use(express.json({ limit: "8mb" }));

  app.get("/health", (_req: Request, res: Response) => {
    if (!state.ready) {
      res.status(503).json({ status: "loading" });
      return;
    }
    res.status(200).json({ status: "ok", dimension: encoder.dimension });
  });

  app.post("/embed", (req: Request, res: Response) => {
    const parsed = EmbedRequest.safeParse(req.body);
    if (!parsed.success) {
      res.status(400).json({
        error: "body must be {\"texts\": [..]} with 1..256 strings",
        details: parsed.error.issues.map((issue) => issue.message),
      });
      return;
    }
    try {
      const embeddings = encoder.encode(parsed.data.texts);
      res.status(200).json({ dimension: encoder.dimension, embeddings });
    } catch (err) {
      res.status(500).json({ error: `encoder failure: ${String(err)}` });
    }
  });

  // Malformed JSON bodies are a client error, not a crash.
  app.use((err: unknown, _req: Request, res: Response, next: NextFunction) => {
    if (err instanceof SyntaxError) {
      res.status(400).json({ error: "request body is not valid JSON" });
      return;
    }
    next(err);
  });

  return app;
}
