import { readFileSync } from "node:fs";
import { join } from "node:path";

export function fixture<T>(name: string): T {
  const path = join(__dirname, "..", "fixtures", name);
  return JSON.parse(readFileSync(path, "utf-8")) as T;
}

/** fetch stub fed by a queue of responses (or a per-URL handler). */
export function stubFetch(
  handler: (url: string, init?: RequestInit) => { status?: number; body: unknown },
): { calls: string[]; restore: () => void } {
  const calls: string[] = [];
  const original = globalThis.fetch;
  globalThis.fetch = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    calls.push(url);
    const { status = 200, body } = handler(url, init);
    return {
      ok: status < 400,
      status,
      json: async () => body,
    } as Response;
  }) as typeof fetch;
  return { calls, restore: () => (globalThis.fetch = original) };
}
