/**
 * Word-cloud presentation. The service sends each cloud as a rank-ordered
 * term list (heaviest first); display weight is derived from rank here so
 * the server stays presentation-free. Layout jitter is seeded from the
 * session token, making a given session's clouds render identically on
 * every refresh.
 */

export type PlacedTerm = {
  term: string;
  /** font size in px */
  size: number;
  /** vertical offset in px, cosmetic jitter */
  offset: number;
};

const MAX_SIZE = 28;
const MIN_SIZE = 12;

/** 32-bit FNV-1a, for turning a session token into a PRNG seed. */
export function hashString(s: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < s.length; i++) {
    h ^= s.charCodeAt(i);
    h = Math.imul(h, 0x01000193);
  }
  return h >>> 0;
}

/** mulberry32 — tiny deterministic PRNG, plenty for cosmetic jitter. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/**
 * Assign sizes by rank (heaviest term largest) and a small seeded vertical
 * jitter, then shuffle display order with the same PRNG. Same seed, same
 * terms -> identical layout.
 */
export function layoutCloud(terms: readonly string[], seed: string): PlacedTerm[] {
  const rand = mulberry32(hashString(seed));
  const n = terms.length;
  const placed = terms.map((term, rank) => {
    const t = n > 1 ? rank / (n - 1) : 0;
    return {
      term,
      size: Math.round(MAX_SIZE - t * (MAX_SIZE - MIN_SIZE)),
      offset: Math.round((rand() - 0.5) * 8),
    };
  });
  // Fisher–Yates with the seeded PRNG
  for (let i = placed.length - 1; i > 0; i--) {
    const j = Math.floor(rand() * (i + 1));
    [placed[i], placed[j]] = [placed[j], placed[i]];
  }
  return placed;
}

export function renderCloud(terms: readonly string[], seed: string): HTMLElement {
  const container = document.createElement("div");
  container.className = "wordcloud";
  for (const placed of layoutCloud(terms, seed)) {
    const span = document.createElement("span");
    span.className = "cloud-term";
    span.textContent = placed.term;
    span.style.fontSize = `${placed.size}px`;
    span.style.position = "relative";
    span.style.top = `${placed.offset}px`;
    container.appendChild(span);
  }
  return container;
}
