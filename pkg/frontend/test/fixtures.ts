import { readFileSync } from "node:fs";

export function loadJson<T>(name: string): T {
  const url = new URL(`./fixtures/${name}`, import.meta.url);
  return JSON.parse(readFileSync(url, "utf8")) as T;
}

export function loadText(name: string): string {
  const url = new URL(`./fixtures/${name}`, import.meta.url);
  return readFileSync(url, "utf8");
}
