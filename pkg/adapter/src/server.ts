/**
 * Transports: a line loop on stdin/stdout, or an HTTP server accepting POST
 * bodies with one request record per line. Both process records strictly in
 * order on a single thread.
 */

import * as http from "node:http";
import * as readline from "node:readline";

import { Models } from "./models";
import { formatResponse, handleLine } from "./protocol";

export function serveStdio(models: Models): Promise<void> {
  return new Promise((resolve) => {
    const rl = readline.createInterface({ input: process.stdin, terminal: false });
    rl.on("line", (line) => {
      if (!line.trim()) return;
      process.stdout.write(formatResponse(handleLine(line, models)) + "\n");
    });
    rl.on("close", resolve);
  });
}

export function serveHttp(models: Models, host: string, port: number): http.Server {
  const server = http.createServer((req, res) => {
    if (req.method === "GET") {
      res.writeHead(200, { "Content-Type": "text/plain" });
      res.end("ok\n");
      return;
    }
    if (req.method !== "POST") {
      res.writeHead(405, { "Content-Type": "text/plain" });
      res.end("POST one JSON record per line\n");
      return;
    }
    const chunks: Buffer[] = [];
    req.on("data", (c) => chunks.push(c));
    req.on("end", () => {
      const body = Buffer.concat(chunks).toString("utf-8");
      const out: string[] = [];
      for (const line of body.split("\n")) {
        if (!line.trim()) continue;
        out.push(formatResponse(handleLine(line, models)));
      }
      res.writeHead(200, { "Content-Type": "application/x-ndjson" });
      res.end(out.map((l) => l + "\n").join(""));
    });
  });
  server.listen(port, host);
  return server;
}
