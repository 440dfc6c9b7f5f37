// Tiny dependency-free chart helpers. Percentages are always recomputed
// from the raw counts the API delivers, never taken from server-side
// percentage fields, so rendering cannot disagree with the data by a
// rounding step.

export interface Segment {
  label: string;
  count: number;
  percent: number;
}

export function shareSegments(counts: Record<string, number>): Segment[] {
  const total = Object.values(counts).reduce((a, b) => a + b, 0);
  return Object.entries(counts)
    .sort(([a], [b]) => a.localeCompare(b))
    .map(([label, count]) => ({
      label,
      count,
      percent: total > 0 ? (100 * count) / total : 0,
    }));
}

export function barChartSvg(segments: Segment[], width = 360, barHeight = 22): string {
  if (segments.length === 0) {
    return `<svg class="chart" width="${width}" height="20"><text x="0" y="14" class="chart-empty">no data</text></svg>`;
  }
  const labelWidth = 110;
  const gap = 6;
  const height = segments.length * (barHeight + gap);
  const maxBar = width - labelWidth - 70;
  const rows = segments.map((segment, i) => {
    const y = i * (barHeight + gap);
    const w = Math.max(1, Math.round((segment.percent / 100) * maxBar));
    const text = `${segment.percent.toFixed(1)}% (${segment.count})`;
    return (
      `<text x="0" y="${y + barHeight - 6}" class="chart-label">${escapeXml(segment.label)}</text>` +
      `<rect x="${labelWidth}" y="${y}" width="${w}" height="${barHeight}" rx="3" class="chart-bar"></rect>` +
      `<text x="${labelWidth + w + 6}" y="${y + barHeight - 6}" class="chart-value">${text}</text>`
    );
  });
  return `<svg class="chart" width="${width}" height="${height}" role="img">${rows.join("")}</svg>`;
}

/** Jobs-per-day activity strip; days sorted ascending. */
export function activitySvg(byDay: Record<string, number>, width = 360, height = 80): string {
  const days = Object.keys(byDay).sort();
  if (days.length === 0) {
    return `<svg class="chart" width="${width}" height="20"><text x="0" y="14" class="chart-empty">no activity</text></svg>`;
  }
  const max = Math.max(...days.map((d) => byDay[d]));
  const slot = Math.max(8, Math.floor(width / days.length));
  const bars = days.map((day, i) => {
    const value = byDay[day];
    const h = Math.max(2, Math.round(((height - 18) * value) / max));
    const x = i * slot;
    return (
      `<rect x="${x}" y="${height - 16 - h}" width="${slot - 3}" height="${h}" rx="2" class="chart-bar">` +
      `<title>${day}: ${value}</title></rect>`
    );
  });
  const firstLabel = `<text x="0" y="${height - 3}" class="chart-label">${days[0]}</text>`;
  const lastLabel = days.length > 1
    ? `<text x="${(days.length - 1) * slot}" y="${height - 3}" class="chart-label">${days[days.length - 1]}</text>`
    : "";
  return `<svg class="chart" width="${Math.max(width, days.length * slot)}" height="${height}" role="img">${bars.join("")}${firstLabel}${lastLabel}</svg>`;
}

export function progressPercent(tried: number, total: number): number {
  if (total <= 0) return 0;
  return Math.min(100, (100 * tried) / total);
}

function escapeXml(text: string): string {
  return text.replace(/[<>&"']/g, (c) =>
    ({ "<": "&lt;", ">": "&gt;", "&": "&amp;", '"': "&quot;", "'": "&#39;" })[c]!,
  );
}
