export interface ChartSpec {
  width: number;
  height: number;
  pad: number;
}

export interface ChartGeometry {
  /** svg polyline points, one vertex per generation, no downsampling */
  points: string;
  /** vertices of generations flagged converged, for marker dots */
  markers: { x: number; y: number }[];
  xTicks: { px: number; label: string }[];
  yTicks: { py: number; label: string }[];
}

function mapper(domainMin: number, domainMax: number, rangeMin: number, rangeMax: number) {
  const span = domainMax - domainMin;
  if (span === 0) return () => (rangeMin + rangeMax) / 2;
  return (v: number) => rangeMin + ((v - domainMin) / span) * (rangeMax - rangeMin);
}

function tickLabel(v: number): string {
  if (v === 0) return "0";
  const magnitude = Math.abs(v);
  if (magnitude >= 1000 || magnitude < 0.01) return v.toExponential(1);
  return String(Math.round(v * 100) / 100);
}

/**
 * Pure chart math: generations on x, raw values on y. The y domain is the
 * exact data range with 5% headroom; a flat series draws a centered line.
 */
export function chartGeometry(
  generations: number[],
  values: number[],
  spec: ChartSpec,
  converged?: boolean[],
): ChartGeometry {
  if (generations.length !== values.length) throw new Error("series length mismatch");
  if (generations.length === 0) return { points: "", markers: [], xTicks: [], yTicks: [] };

  const g0 = generations[0]!;
  const gN = generations[generations.length - 1]!;
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  const headroom = (hi - lo) * 0.05;
  lo -= headroom;
  hi += headroom;

  const toX = mapper(g0, gN, spec.pad, spec.width - spec.pad);
  const toY = mapper(lo, hi, spec.height - spec.pad, spec.pad); // svg y grows downward

  const pts: string[] = [];
  const markers: { x: number; y: number }[] = [];
  for (let i = 0; i < generations.length; i++) {
    const x = toX(generations[i]!);
    const y = toY(values[i]!);
    pts.push(`${round2(x)},${round2(y)}`);
    if (converged?.[i]) markers.push({ x: round2(x), y: round2(y) });
  }

  const xTicks: { px: number; label: string }[] = [];
  const stride = Math.max(1, Math.ceil((gN - g0) / 6));
  for (let g = g0; g <= gN; g += stride) {
    xTicks.push({ px: round2(toX(g)), label: String(g) });
  }
  const yTicks: { py: number; label: string }[] = [];
  for (let i = 0; i <= 3; i++) {
    const v = lo + ((hi - lo) * i) / 3;
    yTicks.push({ py: round2(toY(v)), label: tickLabel(v) });
  }

  return { points: pts.join(" "), markers, xTicks, yTicks };
}

function round2(v: number): number {
  return Math.round(v * 100) / 100;
}

/** Chart geometry -> SVG inner markup. */
export function chartSvg(geom: ChartGeometry, spec: ChartSpec): string {
  const parts: string[] = [];
  for (const t of geom.yTicks) {
    parts.push(`<line class="grid" x1="${spec.pad}" y1="${t.py}" x2="${spec.width - spec.pad}" y2="${t.py}"/>`);
    parts.push(`<text class="tick" x="${spec.pad - 4}" y="${t.py + 3}" text-anchor="end">${t.label}</text>`);
  }
  for (const t of geom.xTicks) {
    parts.push(`<text class="tick" x="${t.px}" y="${spec.height - 4}" text-anchor="middle">${t.label}</text>`);
  }
  if (geom.points) parts.push(`<polyline class="trace" points="${geom.points}"/>`);
  for (const m of geom.markers) {
    parts.push(`<circle class="converged" cx="${m.x}" cy="${m.y}" r="2.5"/>`);
  }
  return parts.join("");
}
