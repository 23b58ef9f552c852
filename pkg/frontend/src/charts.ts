/** Dependency-free SVG line charts for metric trajectories.
 *
 * Pure string builders so the rendering is unit-testable in node; the app
 * drops the markup into innerHTML.
 */

export interface ChartOptions {
  width?: number;
  height?: number;
  padding?: number;
  stroke?: string;
  label?: string;
}

/** Map a series onto pixel coordinates; nulls split the polyline. */
export function polylineSegments(
  values: (number | null)[],
  width: number,
  height: number,
  padding: number,
): string[] {
  const finite = values.filter((v): v is number => v !== null && isFinite(v));
  if (finite.length === 0) return [];
  let lo = Math.min(...finite);
  let hi = Math.max(...finite);
  if (hi === lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  const spanX = Math.max(values.length - 1, 1);
  const x = (i: number) => padding + (i / spanX) * (width - 2 * padding);
  const y = (v: number) =>
    height - padding - ((v - lo) / (hi - lo)) * (height - 2 * padding);

  const segments: string[] = [];
  let current: string[] = [];
  values.forEach((v, i) => {
    if (v === null || !isFinite(v)) {
      if (current.length > 0) segments.push(current.join(" "));
      current = [];
    } else {
      current.push(`${x(i).toFixed(2)},${y(v).toFixed(2)}`);
    }
  });
  if (current.length > 0) segments.push(current.join(" "));
  return segments;
}

export function lineChart(
  values: (number | null)[],
  options: ChartOptions = {},
): string {
  const width = options.width ?? 320;
  const height = options.height ?? 96;
  const padding = options.padding ?? 8;
  const stroke = options.stroke ?? "#2b6cb0";
  const segments = polylineSegments(values, width, height, padding);
  const body =
    segments.length === 0
      ? `<text x="${width / 2}" y="${height / 2}" text-anchor="middle" class="chart-empty">no data</text>`
      : segments
          .map(
            (pts) =>
              `<polyline points="${pts}" fill="none" stroke="${stroke}" stroke-width="1.5"/>`,
          )
          .join("");
  const label = options.label
    ? `<text x="${padding}" y="${padding + 4}" class="chart-label">${options.label}</text>`
    : "";
  return (
    `<svg viewBox="0 0 ${width} ${height}" width="${width}" height="${height}" role="img">` +
    label +
    body +
    `</svg>`
  );
}

/** Pull one metric column out of the trajectory rows. */
export function metricSeries<T extends object>(
  rows: T[],
  key: keyof T & string,
): (number | null)[] {
  return rows.map((row) => {
    const v = row[key] as unknown;
    return typeof v === "number" && isFinite(v) ? v : null;
  });
}
