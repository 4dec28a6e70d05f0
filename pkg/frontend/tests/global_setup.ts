/**
 * Boots a real gateway subprocess for the e2e tests and provides its base
 * URL via vitest's provide/inject. Unit tests never touch it.
 */

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import type { TestProject } from "vitest/node";

const CONFIG = (base: string) => `
listen = 127.0.0.1:0
catalog_engine = rel1
log_level = info

[engine:rel1]
kind = relational
address = rel1.local:5401
data_dir = ${base}/rel1

[engine:arr1]
kind = array
address = arr1.local:5402
data_dir = ${base}/arr1

[engine:kv1]
kind = text
address = kv1.local:5403
data_dir = ${base}/kv1
`;

let child: ChildProcess | undefined;

export default async function setup(project: TestProject): Promise<() => void> {
  const dir = mkdtempSync(join(tmpdir(), "polygate-console-"));
  const configPath = join(dir, "polygate.conf");
  writeFileSync(configPath, CONFIG(dir));

  child = spawn("python3", ["-m", "polygate.gateway", "--config", configPath], {
    stdio: ["ignore", "pipe", "pipe"],
  });

  const port = await new Promise<number>((resolve, reject) => {
    const timer = setTimeout(
      () => reject(new Error(`gateway did not start; log so far:\n${log}`)),
      20000,
    );
    let log = "";
    const watch = (chunk: Buffer) => {
      log += chunk.toString();
      const m = log.match(/gateway\.listening address=127\.0\.0\.1:(\d+)/);
      if (m) {
        clearTimeout(timer);
        resolve(parseInt(m[1], 10));
      }
    };
    child!.stdout!.on("data", watch);
    child!.stderr!.on("data", watch);
    child!.on("exit", (code) =>
      reject(new Error(`gateway exited early (${code}); log:\n${log}`)),
    );
  });

  const base = `http://127.0.0.1:${port}`;
  const resp = await fetch(`${base}/admin/load`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ seed: 1, patients: 6, waveform_len: 12, notes: 10 }),
  });
  if (!resp.ok) {
    throw new Error(`seeding failed: ${resp.status} ${await resp.text()}`);
  }

  project.provide("gatewayBase", base);

  return () => {
    child?.kill("SIGINT");
  };
}

declare module "vitest" {
  export interface ProvidedContext {
    gatewayBase: string;
  }
}
