import type { MatchStatus } from "./types.js";

/** Badge color is a pure function of the match status, nothing else. */
export const BADGE_COLORS: Record<MatchStatus, string> = {
  NONE: "#8a8f98",
  PENDING: "#e8a33d",
  AMBIGUOUS: "#d0555b",
  MATCHED_AUTO: "#4c9fd8",
  MATCHED_MANUAL: "#4caf6e",
};

export function badgeColor(status: MatchStatus): string {
  return BADGE_COLORS[status];
}

export function badgeElement(doc: Document, status: MatchStatus): HTMLElement {
  const badge = doc.createElement("span");
  badge.className = "badge";
  badge.dataset.status = status;
  badge.style.backgroundColor = badgeColor(status);
  badge.title = status;
  return badge;
}
