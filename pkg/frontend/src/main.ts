import { postSearch } from "./api.js";
import { resolveBaseUrl } from "./config.js";
import { renderAugmentedPanel, renderBanner, renderResults } from "./render.js";
import { initialState, reduce, type UiEvent, type UiSearchState } from "./state.js";

declare global {
  interface Window {
    THEOREMSEARCH_BASE_URL?: string;
  }
}

const baseUrl = resolveBaseUrl(window.THEOREMSEARCH_BASE_URL, window.location.search);

let state: UiSearchState = initialState;
let tokenCounter = 0;

const form = document.querySelector<HTMLFormElement>("#search-form")!;
const input = document.querySelector<HTMLInputElement>("#query")!;
const kSelect = document.querySelector<HTMLSelectElement>("#k")!;
const augmentToggle = document.querySelector<HTMLInputElement>("#augment")!;
const resultsHost = document.querySelector<HTMLElement>("#results")!;
const bannerHost = document.querySelector<HTMLElement>("#banner")!;
const augmentedHost = document.querySelector<HTMLElement>("#augmented")!;

function apply(event: UiEvent): void {
  state = reduce(state, event);
  draw();
}

function draw(): void {
  document.body.classList.toggle("loading", state.inFlight);
  bannerHost.innerHTML = renderBanner(state.error);
  resultsHost.innerHTML = renderResults(state.results, baseUrl);
  augmentedHost.innerHTML = renderAugmentedPanel(state.augmentedQuery);
}

form.addEventListener("submit", (raised) => {
  raised.preventDefault();
  apply({ kind: "query-edited", text: input.value });
  if (state.queryText.trim() === "") return;
  const token = ++tokenCounter;
  apply({ kind: "submitted", token });
  postSearch(baseUrl, state.queryText, { k: state.k, augment: state.augment })
    .then((response) => apply({ kind: "response-arrived", token, response }))
    .catch((failure: unknown) => {
      const message =
        failure instanceof Error ? failure.message : "search service unreachable";
      apply({ kind: "request-failed", token, message });
    });
});

kSelect.addEventListener("change", () => {
  apply({ kind: "k-changed", k: Number(kSelect.value) });
});

augmentToggle.addEventListener("change", () => {
  apply({ kind: "augment-toggled", augment: augmentToggle.checked });
});

resultsHost.addEventListener("click", (raised) => {
  const target = raised.target as HTMLElement;
  if (target.matches("button.copy")) {
    void navigator.clipboard.writeText(target.dataset.copy ?? "");
  }
});

kSelect.value = String(state.k);
augmentToggle.checked = state.augment;
draw();
