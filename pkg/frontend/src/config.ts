/** API base URL resolution: query string beats a runtime global beats the
 * build-time default, so one static bundle can serve several deployments. */

export const DEFAULT_BASE_URL = "http://127.0.0.1:8080";

export function resolveBaseUrl(
  runtimeOverride: string | undefined,
  queryString: string,
  buildDefault: string = DEFAULT_BASE_URL,
): string {
  const fromQuery = new URLSearchParams(queryString).get("api");
  const chosen = fromQuery || runtimeOverride || buildDefault;
  return chosen.replace(/\/+$/, "");
}
