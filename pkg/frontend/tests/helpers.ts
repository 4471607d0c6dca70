/** Test helpers: a scripted fetch implementation for the API client. */

import type { FetchLike } from "../src/api";

export interface Recorded {
  url: string;
  method: string;
  body: unknown;
}

export type Route = (recorded: Recorded) => { status?: number; body: unknown } | undefined;

/** Build a fetch stub from a route table keyed by "METHOD path". */
export function scriptedFetch(routes: Record<string, Route | { status?: number; body: unknown }>): {
  fetch: FetchLike;
  calls: Recorded[];
} {
  const calls: Recorded[] = [];
  const fetchImpl: FetchLike = async (input, init) => {
    const url = new URL(input);
    const method = (init?.method ?? "GET").toUpperCase();
    const recorded: Recorded = {
      url: url.pathname,
      method,
      body: init?.body ? JSON.parse(String(init.body)) : undefined,
    };
    calls.push(recorded);
    const route = routes[`${method} ${url.pathname}`];
    if (route === undefined) {
      return new Response(JSON.stringify({ detail: `no route for ${method} ${url.pathname}` }), {
        status: 404,
        headers: { "Content-Type": "application/json" },
      });
    }
    const outcome = typeof route === "function" ? route(recorded) : route;
    if (outcome === undefined) {
      return new Response(JSON.stringify({ detail: "route declined" }), { status: 500 });
    }
    return new Response(JSON.stringify(outcome.body), {
      status: outcome.status ?? 200,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { fetch: fetchImpl, calls };
}
