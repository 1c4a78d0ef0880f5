import type { ErrorBody, SearchResponse } from "./types.js";

/** A non-2xx reply from the search service, carrying its error code. */
export class ServiceError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ServiceError";
  }
}

export interface SearchOptions {
  k: number;
  augment: boolean;
}

type FetchLike = (url: string, init: RequestInit) => Promise<Response>;

/** POST /search. Maps a 502 to the fixed banner wording; other failures
 * surface the service's own message when one is provided. */
export async function postSearch(
  baseUrl: string,
  query: string,
  options: SearchOptions,
  fetchImpl: FetchLike = fetch,
): Promise<SearchResponse> {
  const response = await fetchImpl(`${baseUrl}/search`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ query, k: options.k, augment: options.augment }),
  });
  if (!response.ok) {
    let code = "internal";
    let message = `search failed (${response.status})`;
    try {
      const body = (await response.json()) as ErrorBody;
      if (body?.error?.code) code = body.error.code;
      if (body?.error?.message) message = body.error.message;
    } catch {
      // keep the generic message when the error body is not JSON
    }
    if (response.status === 502) {
      throw new ServiceError(code, "embedding provider unavailable", 502);
    }
    throw new ServiceError(code, message, response.status);
  }
  return (await response.json()) as SearchResponse;
}
