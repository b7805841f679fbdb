/** Shared SVG plumbing: fixed canvas, scales, ticks, axes, legends.
 * Everything here is a pure function of its inputs, so repeated renders of
 * the same data produce byte-identical files. */

export const WIDTH = 840;
export const HEIGHT = 520;

export interface Frame {
  left: number;
  top: number;
  right: number;
  bottom: number;
}

/** Plot area in canvas coordinates; the right gutter holds the legend. */
export const FRAME: Frame = { left: 72, top: 44, right: 660, bottom: 462 };

/** Color-blind-safe categorical palette. */
export const PALETTE = [
  "#4477aa", "#ee6677", "#228833", "#ccbb44",
  "#66ccee", "#aa3377", "#bbbbbb",
];

export type Scale = (value: number) => number;

export function linearScale(
  d0: number, d1: number, r0: number, r1: number): Scale {
  const span = d1 - d0 === 0 ? 1 : d1 - d0;
  return (value) => r0 + ((value - d0) / span) * (r1 - r0);
}

export function logScale(
  d0: number, d1: number, r0: number, r1: number): Scale {
  const inner = linearScale(Math.log10(d0), Math.log10(d1), r0, r1);
  return (value) => inner(Math.log10(value));
}

/** Tick positions at multiples of 1, 2, or 5 times a power of ten. */
export function niceTicks(min: number, max: number, count = 6): number[] {
  if (min === max) {
    return [min];
  }
  const rawStep = (max - min) / Math.max(1, count - 1);
  const power = Math.pow(10, Math.floor(Math.log10(rawStep)));
  const candidates = [1, 2, 5, 10].map((m) => m * power);
  const step = candidates.find((c) => c >= rawStep) ?? candidates[3];
  const ticks: number[] = [];
  for (let v = Math.ceil(min / step) * step; v <= max + step * 1e-9; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

/** Powers of ten covering [min, max], thinned to at most 12 labels. */
export function logTicks(min: number, max: number): number[] {
  const lo = Math.floor(Math.log10(min));
  const hi = Math.ceil(Math.log10(max));
  const stride = Math.max(1, Math.ceil((hi - lo + 1) / 12));
  const ticks: number[] = [];
  for (let e = lo; e <= hi; e += stride) {
    ticks.push(Math.pow(10, e));
  }
  return ticks;
}

/** Compact deterministic number formatting for tick and legend labels. */
export function fmt(value: number): string {
  if (value === 0) {
    return "0";
  }
  const abs = Math.abs(value);
  if (abs >= 0.001 && abs < 100000) {
    return String(Number(value.toPrecision(4)));
  }
  return value.toExponential(2).replace(/e\+?(-?)/, "e$1");
}

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function polylinePath(points: Array<[number, number]>): string {
  return points
    .map(([x, y], i) => `${i === 0 ? "M" : "L"}${x.toFixed(2)} ${y.toFixed(2)}`)
    .join(" ");
}

export function axisBottom(
  scale: Scale, ticks: number[], label: string): string {
  const parts: string[] = [];
  const y = FRAME.bottom;
  parts.push(`<line x1="${FRAME.left}" y1="${y}" x2="${FRAME.right}" ` +
    `y2="${y}" stroke="#333333" stroke-width="1"/>`);
  for (const tick of ticks) {
    const x = scale(tick).toFixed(2);
    parts.push(`<line x1="${x}" y1="${y}" x2="${x}" y2="${y + 5}" ` +
      `stroke="#333333" stroke-width="1"/>`);
    parts.push(`<text x="${x}" y="${y + 19}" text-anchor="middle" ` +
      `font-size="12">${esc(fmt(tick))}</text>`);
  }
  const cx = (FRAME.left + FRAME.right) / 2;
  parts.push(`<text x="${cx}" y="${y + 40}" text-anchor="middle" ` +
    `font-size="13">${esc(label)}</text>`);
  return parts.join("\n");
}

export function axisLeft(
  scale: Scale, ticks: number[], label: string): string {
  const parts: string[] = [];
  const x = FRAME.left;
  parts.push(`<line x1="${x}" y1="${FRAME.top}" x2="${x}" ` +
    `y2="${FRAME.bottom}" stroke="#333333" stroke-width="1"/>`);
  for (const tick of ticks) {
    const y = scale(tick).toFixed(2);
    parts.push(`<line x1="${x - 5}" y1="${y}" x2="${x}" y2="${y}" ` +
      `stroke="#333333" stroke-width="1"/>`);
    parts.push(`<line x1="${x}" y1="${y}" x2="${FRAME.right}" y2="${y}" ` +
      `stroke="#dddddd" stroke-width="0.5"/>`);
    parts.push(`<text x="${x - 8}" y="${y}" text-anchor="end" ` +
      `dominant-baseline="middle" font-size="12">${esc(fmt(tick))}</text>`);
  }
  const cy = (FRAME.top + FRAME.bottom) / 2;
  parts.push(`<text x="18" y="${cy}" text-anchor="middle" font-size="13" ` +
    `transform="rotate(-90 18 ${cy})">${esc(label)}</text>`);
  return parts.join("\n");
}

export interface LegendEntry {
  label: string;
  color: string;
}

export function legend(entries: LegendEntry[]): string {
  const x = FRAME.right + 16;
  const parts: string[] = [];
  entries.forEach((entry, i) => {
    const y = FRAME.top + 10 + i * 22;
    parts.push(`<rect x="${x}" y="${y - 9}" width="14" height="14" ` +
      `fill="${entry.color}"/>`);
    parts.push(`<text x="${x + 20}" y="${y + 3}" font-size="12">` +
      `${esc(entry.label)}</text>`);
  });
  return parts.join("\n");
}

export function svgDocument(title: string, body: string): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" ` +
    `height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" ` +
    `font-family="Helvetica, Arial, sans-serif">`,
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>`,
    `<text x="${WIDTH / 2}" y="26" text-anchor="middle" font-size="15">` +
    `${esc(title)}</text>`,
    body,
    `</svg>`,
    ``,
  ].join("\n");
}
