/** Pure view builders: every displayed number comes straight from a service
 * response field (raw value kept in data-value attributes); no nutritional
 * arithmetic happens on the client. */

import type { RecommendResponse } from './types.js';

export function fmt(value: number, decimals = 1): string {
  const fixed = value.toFixed(decimals);
  return fixed.endsWith('.0') ? fixed.slice(0, -2) : fixed;
}

function escapeHtml(text: string): string {
  return text.replace(/[&<>"]/g, (c) => ({ '&': '&amp;', '<': '&lt;', '>': '&gt;', '"': '&quot;' })[c]!);
}

export function renderBundleTable(response: RecommendResponse): string {
  const rows = response.items
    .map(
      (item) => `
    <tr data-product="${escapeHtml(item.product_id)}">
      <td class="name">${escapeHtml(item.name)}</td>
      <td class="qty" data-value="${item.quantity}">${item.quantity}</td>
      <td class="cal" data-value="${item.cal}">${fmt(item.cal)}</td>
      <td class="prot" data-value="${item.prot}">${fmt(item.prot)}</td>
    </tr>`,
    )
    .join('');
  return `
  <table class="bundle">
    <thead><tr><th>Item</th><th>Qty</th><th>kcal/serving</th><th>Protein g</th></tr></thead>
    <tbody>${rows}</tbody>
    <tfoot>
      <tr>
        <td>Totals</td>
        <td></td>
        <td class="total-cal" data-value="${response.totals.cal}">${fmt(response.totals.cal)}</td>
        <td class="total-prot" data-value="${response.totals.prot}">${fmt(response.totals.prot)}</td>
      </tr>
    </tfoot>
  </table>`;
}

export interface GaugeModel {
  actual: number;
  target: number;
  bandLow: number;
  bandHigh: number;
  scale: number;
  barPct: number;
  bandLeftPct: number;
  bandWidthPct: number;
  within: boolean;
}

/** Geometry for one actual-vs-target bar with the tolerance band shaded.
 * The band edges use the service-reported tolerance, not a client constant. */
export function gaugeModel(actual: number, target: number, tolerance: number): GaugeModel {
  const bandLow = target * (1 - tolerance);
  const bandHigh = target * (1 + tolerance);
  const scale = Math.max(actual, bandHigh) * 1.15;
  return {
    actual,
    target,
    bandLow,
    bandHigh,
    scale,
    barPct: (100 * actual) / scale,
    bandLeftPct: (100 * bandLow) / scale,
    bandWidthPct: (100 * (bandHigh - bandLow)) / scale,
    within: actual >= bandLow && actual <= bandHigh,
  };
}

export function renderGauge(label: string, unit: string, model: GaugeModel): string {
  const stateClass = model.within ? 'in-band' : 'out-of-band';
  return `
  <div class="gauge ${stateClass}" data-label="${label}">
    <div class="gauge-header">
      <span>${label}</span>
      <span class="gauge-numbers">
        <b class="actual" data-value="${model.actual}">${fmt(model.actual)}</b>
        / target <span class="target" data-value="${model.target}">${fmt(model.target)}</span> ${unit}
      </span>
    </div>
    <div class="gauge-track">
      <div class="gauge-band" style="left:${model.bandLeftPct.toFixed(2)}%;width:${model.bandWidthPct.toFixed(2)}%"></div>
      <div class="gauge-bar" style="width:${Math.min(100, model.barPct).toFixed(2)}%"></div>
    </div>
  </div>`;
}

export function renderBadge(success: boolean): string {
  return success
    ? '<span class="badge ok" data-success="true">within targets</span>'
    : '<span class="badge fail" data-success="false">outside tolerance</span>';
}

export function renderTraceSparkline(trace: number[], width = 220, height = 48): string {
  if (trace.length === 0) return '<svg class="trace"></svg>';
  const low = Math.min(...trace);
  const high = Math.max(...trace);
  const span = high - low || 1;
  const points = trace
    .map((value, i) => {
      const x = (i / Math.max(1, trace.length - 1)) * width;
      const y = height - ((value - low) / span) * (height - 4) - 2;
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    })
    .join(' ');
  return `<svg class="trace" viewBox="0 0 ${width} ${height}" preserveAspectRatio="none">
    <polyline fill="none" stroke-width="1.5" points="${points}"></polyline>
  </svg>`;
}

export function renderResultPanel(response: RecommendResponse, title: string): string {
  const calories = gaugeModel(response.totals.cal, response.targets.tdee, response.tolerance);
  const protein = gaugeModel(response.totals.prot, response.targets.protein_target, response.tolerance);
  return `
  <section class="result">
    <header>
      <h3>${title}</h3>
      ${renderBadge(response.success)}
      <span class="seed">seed ${response.seed}</span>
    </header>
    ${renderGauge('Calories', 'kcal', calories)}
    ${renderGauge('Protein', 'g', protein)}
    ${renderBundleTable(response)}
    <footer>
      <span class="energy" data-value="${response.energy.l_opt}">energy ${response.energy.l_opt.toFixed(4)}</span>
      ${renderTraceSparkline(response.trace)}
    </footer>
  </section>`;
}

export function renderErrors(errors: { field: string; message: string }[]): string {
  return errors
    .map((e) => `<p class="field-error" data-field="${escapeHtml(e.field)}">${escapeHtml(e.message)}</p>`)
    .join('');
}
