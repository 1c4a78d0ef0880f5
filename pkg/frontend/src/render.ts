import { escapeHtml, renderMathText } from "./math.js";
import type { AugmentedQuery, SearchResultItem } from "./types.js";

export function formatScore(score: number): string {
  return score.toFixed(3);
}

/** One result card. Pure string builder so tests can assert on the exact
 * markup without a DOM. */
export function renderResultCard(result: SearchResultItem, baseUrl: string): string {
  const formalOnly = result.informal_name === null && result.informal_statement === null;
  const title = formalOnly ? result.name : (result.informal_name ?? result.name);
  const sourceHref =
    result.source_path != null && result.source_path !== ""
      ? result.source_path
      : `${baseUrl}/theorem/${encodeURIComponent(result.theorem_id)}`;
  const parts = [
    `<article class="card" data-theorem-id="${escapeHtml(result.theorem_id)}">`,
    `<header>`,
    `<span class="rank">${result.rank}</span>`,
    `<h3>${escapeHtml(title)}</h3>`,
    formalOnly ? `<span class="badge">formal only</span>` : ``,
    `<span class="score">${formatScore(result.score)}</span>`,
    `</header>`,
    `<pre class="formal"><code>${escapeHtml(result.formal_statement)}</code></pre>`,
    `<button class="copy" type="button" data-copy="${escapeHtml(result.formal_statement)}">copy</button>`,
    result.informal_statement !== null
      ? `<p class="informal">${renderMathText(result.informal_statement)}</p>`
      : ``,
    `<a class="source" href="${escapeHtml(sourceHref)}">${escapeHtml(result.theorem_id)}</a>`,
    `</article>`,
  ];
  return parts.filter((part) => part !== "").join("");
}

export function renderResults(results: SearchResultItem[], baseUrl: string): string {
  if (results.length === 0) return `<p class="empty">no results</p>`;
  return results.map((result) => renderResultCard(result, baseUrl)).join("");
}

export function renderBanner(error: string | null): string {
  if (error === null) return "";
  return `<div class="banner" role="alert">${escapeHtml(error)}</div>`;
}

/** Collapsed by default; present whenever augmentation ran. */
export function renderAugmentedPanel(aq: AugmentedQuery | null): string {
  if (aq === null) return "";
  return [
    `<details class="augmented">`,
    `<summary>augmented query</summary>`,
    `<dl>`,
    `<dt>original</dt><dd>${escapeHtml(aq.original)}</dd>`,
    `<dt>formal</dt><dd><pre><code>${escapeHtml(aq.formal_statement)}</code></pre></dd>`,
    `<dt>name</dt><dd>${escapeHtml(aq.informal_name)}</dd>`,
    `<dt>statement</dt><dd>${renderMathText(aq.informal_statement)}</dd>`,
    `</dl>`,
    `</details>`,
  ].join("");
}
