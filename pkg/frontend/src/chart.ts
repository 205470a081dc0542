/**
 * Pure chart view-models: the DOM layer only turns these into SVG
 * elements, so tests can assert that rendered values are exactly the
 * service's numbers.
 */

export interface ChartSeries {
  name: string;
  values: number[];
  color: string;
  /** SVG polyline points string */
  points: string;
}

export interface ChartMarker {
  x: number;
  label: string;
  type: string;
}

export interface ChartViewModel {
  width: number;
  height: number;
  min: number;
  max: number;
  series: ChartSeries[];
  markers: ChartMarker[];
}

const PALETTE = ["#2563eb", "#dc2626", "#059669", "#d97706", "#7c3aed"];

export function linePoints(
  values: number[],
  min: number,
  max: number,
  width: number,
  height: number,
  pad = 8,
): string {
  if (values.length === 0) return "";
  const span = max - min || 1;
  const innerW = width - 2 * pad;
  const innerH = height - 2 * pad;
  const step = values.length > 1 ? innerW / (values.length - 1) : 0;
  return values
    .map((v, i) => {
      const x = pad + i * step;
      const y = pad + innerH * (1 - (v - min) / span);
      return `${x.toFixed(2)},${y.toFixed(2)}`;
    })
    .join(" ");
}

export function buildChart(
  seriesList: { name: string; values: number[] }[],
  markers: { index: number; label: string; type: string }[] = [],
  width = 640,
  height = 240,
): ChartViewModel {
  const all = seriesList.flatMap((s) => s.values);
  const min = all.length ? Math.min(...all) : 0;
  const max = all.length ? Math.max(...all) : 1;
  const longest = Math.max(1, ...seriesList.map((s) => s.values.length));
  const pad = 8;
  const step = longest > 1 ? (width - 2 * pad) / (longest - 1) : 0;
  return {
    width,
    height,
    min,
    max,
    series: seriesList.map((s, i) => ({
      name: s.name,
      values: s.values.slice(),
      color: PALETTE[i % PALETTE.length] as string,
      points: linePoints(s.values, min, max, width, height, pad),
    })),
    markers: markers.map((m) => ({ x: pad + m.index * step, label: m.label, type: m.type })),
  };
}

export interface DeltaBadge {
  text: string;
  sign: "positive" | "negative" | "zero";
}

/** "+37.0%"-style badge for a percent delta straight off the wire. */
export function deltaBadge(deltaPercent: number): DeltaBadge {
  const rounded = Math.round(deltaPercent * 10) / 10;
  const sign = rounded > 0 ? "positive" : rounded < 0 ? "negative" : "zero";
  const prefix = rounded > 0 ? "+" : "";
  return { text: `${prefix}${rounded.toFixed(1)}%`, sign };
}
