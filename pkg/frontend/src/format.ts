/** Small display helpers shared by the app shell. */

export function formatNumber(value: number | null | undefined, digits = 4): string {
  if (value === null || value === undefined || !isFinite(value)) return "—";
  return value.toFixed(digits);
}

export function formatVector(xs: number[], digits = 3): string {
  if (xs.length <= 8) {
    return "[" + xs.map((v) => v.toFixed(digits)).join(", ") + "]";
  }
  const head = xs.slice(0, 6).map((v) => v.toFixed(digits)).join(", ");
  return `[${head}, … ${xs.length - 6} more]`;
}

export function statusLabel(status: string): string {
  switch (status) {
    case "ready_to_propose":
      return "ready — ask for the next proposal";
    case "awaiting_observation":
      return "awaiting observation";
    case "completed":
      return "completed";
    case "failed":
      return "failed";
    default:
      return status;
  }
}

/** Convert the safety form entry into an API result payload. */
export function buildResult(
  objective: number,
  safety: { kind: "numeric"; value: number } | { kind: "rating"; value: string },
): { y_f: number; y_g?: number; rating?: string } {
  if (safety.kind === "numeric") {
    return { y_f: objective, y_g: safety.value };
  }
  return { y_f: objective, rating: safety.value };
}
