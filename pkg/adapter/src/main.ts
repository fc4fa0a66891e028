import { loadModels } from "./models";
import { serveHttp, serveStdio } from "./server";

function usage(): never {
  process.stderr.write(
    "usage: node dist/main.js --model <spec.json> [--transport stdio|http] [--host 127.0.0.1] [--port 8900]\n",
  );
  process.exit(1);
}

function main(): void {
  const args = process.argv.slice(2);
  let model = "";
  let transport = "stdio";
  let host = "127.0.0.1";
  let port = 8900;
  for (let i = 0; i < args.length; i += 2) {
    const key = args[i];
    const value = args[i + 1];
    if (value === undefined) usage();
    if (key === "--model") model = value;
    else if (key === "--transport") transport = value;
    else if (key === "--host") host = value;
    else if (key === "--port") port = parseInt(value, 10);
    else usage();
  }
  if (!model) usage();
  const models = loadModels(model);
  if (transport === "stdio") {
    void serveStdio(models);
  } else if (transport === "http") {
    const server = serveHttp(models, host, port);
    server.on("listening", () => {
      process.stderr.write(`listening on http://${host}:${port}\n`);
    });
  } else {
    usage();
  }
}

main();
