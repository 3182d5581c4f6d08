import { Scale, tickLabel } from "./scales.js";

/** Deterministic SVG assembly: fixed canvas, no timestamps, rounded coords. */

export const WIDTH = 640;
export const HEIGHT = 480;
export const MARGIN = { top: 36, right: 24, bottom: 52, left: 72 };

export const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
  "#7f7f7f",
];

const fmt = (value: number): string => {
  const rounded = Math.round(value * 100) / 100;
  return Object.is(rounded, -0) ? "0" : String(rounded);
};

export class Panel {
  private parts: string[] = [];

  constructor(readonly title: string) {}

  raw(fragment: string): void {
    this.parts.push(fragment);
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string,
       dashed = false, width = 1): void {
    const dash = dashed ? ' stroke-dasharray="6 4"' : "";
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}"` +
        ` stroke="${stroke}" stroke-width="${width}"${dash}/>`
    );
  }

  polyline(points: Array<[number, number]>, stroke: string, dashed = false): void {
    if (points.length === 0) return;
    const path = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    const dash = dashed ? ' stroke-dasharray="6 4"' : "";
    this.parts.push(
      `<polyline points="${path}" fill="none" stroke="${stroke}" stroke-width="1.5"${dash}/>`
    );
  }

  circle(x: number, y: number, r: number, fill: string): void {
    this.parts.push(`<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${r}" fill="${fill}"/>`);
  }

  rect(x: number, y: number, w: number, h: number, fill: string): void {
    this.parts.push(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}"` +
        ` fill="${fill}" stroke="#333" stroke-width="0.5"/>`
    );
  }

  text(x: number, y: number, content: string, options: {
    size?: number; anchor?: string; fill?: string; rotate?: boolean;
  } = {}): void {
    const { size = 12, anchor = "start", fill = "#222", rotate = false } = options;
    const transform = rotate ? ` transform="rotate(-90 ${fmt(x)} ${fmt(y)})"` : "";
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" font-size="${size}"` +
        ` font-family="sans-serif" text-anchor="${anchor}" fill="${fill}"${transform}>` +
        `${escapeXml(content)}</text>`
    );
  }

  axes(x: Scale, y: Scale, xLabel: string, yLabel: string): void {
    const left = MARGIN.left;
    const right = WIDTH - MARGIN.right;
    const top = MARGIN.top;
    const bottom = HEIGHT - MARGIN.bottom;
    this.line(left, bottom, right, bottom, "#333");
    this.line(left, top, left, bottom, "#333");
    for (const tick of x.ticks()) {
      const px = x(tick);
      if (px < left - 0.5 || px > right + 0.5) continue;
      this.line(px, bottom, px, bottom + 5, "#333");
      this.text(px, bottom + 18, tickLabel(tick), { anchor: "middle", size: 11 });
    }
    for (const tick of y.ticks()) {
      const py = y(tick);
      if (py < top - 0.5 || py > bottom + 0.5) continue;
      this.line(left - 5, py, left, py, "#333");
      this.text(left - 8, py + 4, tickLabel(tick), { anchor: "end", size: 11 });
      this.line(left, py, right, py, "#eee");
    }
    this.text((left + right) / 2, HEIGHT - 12, xLabel, { anchor: "middle" });
    this.text(18, (top + bottom) / 2, yLabel, { anchor: "middle", rotate: true });
  }

  legend(entries: Array<{ label: string; color: string; dashed?: boolean }>): void {
    const x = WIDTH - MARGIN.right - 150;
    let y = MARGIN.top + 8;
    for (const entry of entries) {
      this.line(x, y - 4, x + 22, y - 4, entry.color, entry.dashed ?? false, 2);
      this.text(x + 28, y, entry.label, { size: 11 });
      y += 16;
    }
  }

  note(message: string): void {
    this.text(WIDTH / 2, HEIGHT / 2, message, { anchor: "middle", fill: "#888" });
  }

  render(): string {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}"` +
      ` viewBox="0 0 ${WIDTH} ${HEIGHT}">` +
      `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>` +
      `<text x="${WIDTH / 2}" y="20" font-size="14" font-family="sans-serif"` +
      ` text-anchor="middle" fill="#111">${escapeXml(this.title)}</text>` +
      this.parts.join("") +
      `</svg>\n`
    );
  }
}

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}

export function plotArea(): { left: number; right: number; top: number; bottom: number } {
  return {
    left: MARGIN.left,
    right: WIDTH - MARGIN.right,
    top: MARGIN.top,
    bottom: HEIGHT - MARGIN.bottom,
  };
}
