import type { AugmentedQuery, SearchResponse, SearchResultItem } from "./types.js";

/** UI state. One numeric token identifies the in-flight submission; a
 * response or failure carrying any other token is stale and ignored, so at
 * most one search can ever land. Transitions are pure: new state depends
 * only on (previous state, event). */
export interface UiSearchState {
  queryText: string;
  k: number;
  augment: boolean;
  inFlight: boolean;
  submission: number;
  results: SearchResultItem[];
  augmentedQuery: AugmentedQuery | null;
  error: string | null;
}

export const initialState: UiSearchState = {
  queryText: "",
  k: 20,
  augment: true,
  inFlight: false,
  submission: 0,
  results: [],
  augmentedQuery: null,
  error: null,
};

export type UiEvent =
  | { kind: "query-edited"; text: string }
  | { kind: "k-changed"; k: number }
  | { kind: "augment-toggled"; augment: boolean }
  | { kind: "submitted"; token: number }
  | { kind: "response-arrived"; token: number; response: SearchResponse }
  | { kind: "request-failed"; token: number; message: string };

export function reduce(state: UiSearchState, event: UiEvent): UiSearchState {
  switch (event.kind) {
    case "query-edited":
      return { ...state, queryText: event.text };
    case "k-changed":
      return { ...state, k: event.k };
    case "augment-toggled":
      return { ...state, augment: event.augment };
    case "submitted":
      // Blank queries never leave the input box.
      if (state.queryText.trim() === "") return state;
      return { ...state, inFlight: true, submission: event.token, error: null };
    case "response-arrived":
      if (event.token !== state.submission || !state.inFlight) return state;
      return {
        ...state,
        inFlight: false,
        submission: 0,
        results: event.response.results,
        augmentedQuery: event.response.augmented_query,
        error: null,
      };
    case "request-failed":
      if (event.token !== state.submission || !state.inFlight) return state;
      // Previous results stay on screen under the error banner.
      return { ...state, inFlight: false, submission: 0, error: event.message };
  }
}
