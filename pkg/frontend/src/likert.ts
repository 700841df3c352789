/**
 * The seven response levels, ordered from strongest preference for list A
 * to strongest preference for list B. The wire values must match the
 * service's enum exactly; the labels are only for display.
 */
export const LIKERT_LEVELS = [
  "A-great",
  "A-moderate",
  "A-slight",
  "none",
  "B-slight",
  "B-moderate",
  "B-great",
] as const;

export type LikertLevel = (typeof LIKERT_LEVELS)[number];

export const LIKERT_LABELS: Record<LikertLevel, string> = {
  "A-great": "Great preference for A",
  "A-moderate": "Moderate preference for A",
  "A-slight": "Slight preference for A",
  none: "No preference",
  "B-slight": "Slight preference for B",
  "B-moderate": "Moderate preference for B",
  "B-great": "Great preference for B",
};

export function isLikertLevel(value: string): value is LikertLevel {
  return (LIKERT_LEVELS as readonly string[]).includes(value);
}
