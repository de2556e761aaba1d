import { describe, expect, it } from 'vitest';

import { fmt, gaugeModel, renderBadge, renderBundleTable, renderResultPanel, renderTraceSparkline } from '../src/render.js';
import type { RecommendResponse } from '../src/types.js';

export const MOCK_RESPONSE: RecommendResponse = {
  targets: { rmr: 1780, tdee: 2136, protein_target: 128, eps_cal: 256.32, eps_prot: 15.36 },
  items: [
    { product_id: 'p1', name: 'Sunrise rolled oats value size', quantity: 3, cal: 150, prot: 5.5 },
    { product_id: 'p2', name: 'Lakeside egg whites original', quantity: 2, cal: 120, prot: 24.1 },
  ],
  totals: { cal: 690, prot: 64.7, carb: 80, fat: 12 },
  energy: { l_phys: 0.02, l_des: 0.11, l_opt: -0.09 },
  success: true,
  tolerance: 0.12,
  alpha: 0.1,
  beta: 1.0,
  k: 8,
  quantity_max: 3,
  iterations: 5000,
  seed: 77,
  trace: [1.0, 0.4, 0.1, -0.05, -0.09],
  cold_start: true,
};

describe('bundle table', () => {
  it('renders one row per item with the exact wire values', () => {
    const html = renderBundleTable(MOCK_RESPONSE);
    expect(html.match(/<tr data-product=/g)).toHaveLength(2);
    expect(html).toContain('Sunrise rolled oats value size');
    expect(html).toContain('data-value="3"');
    expect(html).toContain('data-value="150"');
    expect(html).toContain('data-value="24.1"');
    expect(html).toContain('class="total-cal" data-value="690"');
    expect(html).toContain('class="total-prot" data-value="64.7"');
  });

  it('escapes markup in names', () => {
    const tricky = {
      ...MOCK_RESPONSE,
      items: [{ product_id: 'x', name: 'a<b>&"c', quantity: 1, cal: 1, prot: 1 }],
    };
    const html = renderBundleTable(tricky);
    expect(html).toContain('a&lt;b&gt;&amp;&quot;c');
    expect(html).not.toContain('<b>&');
  });
});

describe('gauges', () => {
  it('band edges use the service tolerance verbatim', () => {
    const model = gaugeModel(2000, 2136, 0.12);
    expect(model.bandLow).toBeCloseTo(2136 * 0.88, 10);
    expect(model.bandHigh).toBeCloseTo(2136 * 1.12, 10);
    expect(model.within).toBe(true);
  });

  it('flags values outside the band', () => {
    expect(gaugeModel(1000, 2136, 0.12).within).toBe(false);
    expect(gaugeModel(2136 * 1.121, 2136, 0.12).within).toBe(false);
    expect(gaugeModel(2136 * 1.12, 2136, 0.12).within).toBe(true);
  });

  it('bar and band stay inside the track', () => {
    const model = gaugeModel(5000, 2136, 0.12);
    expect(model.barPct).toBeLessThanOrEqual(100);
    expect(model.bandLeftPct + model.bandWidthPct).toBeLessThanOrEqual(100);
  });
});

describe('badge and sparkline', () => {
  it('badge reflects the success flag only', () => {
    expect(renderBadge(true)).toContain('data-success="true"');
    expect(renderBadge(false)).toContain('data-success="false"');
  });

  it('sparkline has one point per trace sample', () => {
    const svg = renderTraceSparkline([3, 2, 1]);
    expect(svg.match(/points="([^"]+)"/)![1].split(' ')).toHaveLength(3);
  });
});

describe('result panel', () => {
  it('contains table, two gauges, badge and trace with mocked values', () => {
    const html = renderResultPanel(MOCK_RESPONSE, 'latest run');
    expect(html).toContain('latest run');
    expect(html).toContain('data-label="Calories"');
    expect(html).toContain('data-label="Protein"');
    expect(html).toContain(`data-value="${MOCK_RESPONSE.totals.cal}"`);
    expect(html).toContain(`data-value="${MOCK_RESPONSE.targets.tdee}"`);
    expect(html).toContain(`data-value="${MOCK_RESPONSE.targets.protein_target}"`);
    expect(html).toContain('data-success="true"');
    expect(html).toContain('seed 77');
    expect(html).toContain('<svg class="trace"');
  });
});

describe('number formatting', () => {
  it('keeps one decimal and trims trailing zero', () => {
    expect(fmt(2136)).toBe('2136');
    expect(fmt(64.7)).toBe('64.7');
    expect(fmt(64.75)).toBe('64.8');
  });
});
