export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

const MATH_SEGMENT = /\$([^$\n]+)\$|\\\(([\s\S]+?)\\\)/g;

/** HTML for prose that may embed LaTeX fragments. Content between $...$ or
 * \( ... \) delimiters is wrapped in a math span (a hook for a client-side
 * typesetter); everything else, including unmatched delimiters, stays
 * verbatim. All output is escaped. */
export function renderMathText(text: string): string {
  let html = "";
  let last = 0;
  for (const match of text.matchAll(MATH_SEGMENT)) {
    const index = match.index ?? 0;
    html += escapeHtml(text.slice(last, index));
    const body = match[1] ?? match[2] ?? "";
    html += `<span class="math">${escapeHtml(body)}</span>`;
    last = index + match[0].length;
  }
  html += escapeHtml(text.slice(last));
  return html;
}
