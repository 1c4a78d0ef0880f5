/** Wire types mirroring the search service's JSON bodies. */

export interface SearchResultItem {
  rank: number;
  theorem_id: string;
  name: string;
  formal_statement: string;
  informal_name: string | null;
  informal_statement: string | null;
  score: number;
  /** Not part of the /search body today; honored if the service adds it. */
  source_path?: string | null;
}

export interface AugmentedQuery {
  original: string;
  formal_statement: string;
  informal_name: string;
  informal_statement: string;
}

export interface SearchResponse {
  results: SearchResultItem[];
  augmented_query: AugmentedQuery | null;
}

export interface ErrorBody {
  error: { code: string; message: string };
}
