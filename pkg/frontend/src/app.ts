/** Controller for the what-if loop: validate, call the service, keep the
 * last two results side by side. DOM-free so the whole flow is testable
 * against a mocked client. */

import { ApiClient, ApiError } from './api.js';
import { renderErrors, renderResultPanel } from './render.js';
import type { ConfigDoc, Overrides, RecommendResponse } from './types.js';
import { validateProfile } from './validate.js';

export interface RawForm {
  age: string;
  sex: string;
  weight: string;
  height: string;
  activity: string;
  goal: string;
  overrides: Overrides;
}

export interface ViewState {
  controlsHtml?: string;
  errorsHtml: string;
  bannerHtml: string;
  resultsHtml: string;
  pending: boolean;
}

export interface SliderSpec {
  id: string;
  label: string;
  min: number;
  max: number;
  step: number;
  value: number;
}

/** Slider setup comes from /api/config; nothing here is hard-coded. */
export function slidersFromConfig(config: ConfigDoc): SliderSpec[] {
  return [
    { id: 'alpha', label: 'preference weight', min: config.ranges.alpha.min,
      max: config.ranges.alpha.max, step: 0.01, value: config.alpha },
    { id: 'tolerance', label: 'tolerance', min: config.ranges.tolerance.min,
      max: config.ranges.tolerance.max, step: 0.01, value: config.tolerance },
    { id: 'k', label: 'bundle size', min: config.ranges.k.min,
      max: config.ranges.k.max, step: 1, value: config.k },
    { id: 'quantity_max', label: 'max quantity', min: config.ranges.quantity_max.min,
      max: config.ranges.quantity_max.max, step: 1, value: config.quantity_max },
  ];
}

export class WhatIfApp {
  private history: RecommendResponse[] = [];
  state: ViewState = { errorsHtml: '', bannerHtml: '', resultsHtml: '', pending: false };

  constructor(
    private readonly api: ApiClient,
    private readonly onChange: (state: ViewState) => void = () => {},
  ) {}

  private update(partial: Partial<ViewState>): void {
    this.state = { ...this.state, ...partial };
    this.onChange(this.state);
  }

  async loadDefaults(): Promise<SliderSpec[] | null> {
    try {
      const config = await this.api.config();
      return slidersFromConfig(config);
    } catch {
      this.update({ bannerHtml: '<div class="banner">service unreachable; defaults unavailable</div>' });
      return null;
    }
  }

  /** Validate locally; only a clean profile produces a request. */
  async submit(form: RawForm): Promise<void> {
    if (this.state.pending) return;
    const { profile, errors } = validateProfile(form);
    if (!profile) {
      this.update({ errorsHtml: renderErrors(errors) });
      return;
    }
    this.update({ errorsHtml: '', bannerHtml: '', pending: true });
    try {
      const response = await this.api.recommend({ profile, overrides: form.overrides });
      this.history.push(response);
      this.history = this.history.slice(-2);
      this.update({ pending: false, resultsHtml: this.renderHistory() });
    } catch (error) {
      if (error instanceof ApiError && error.status === 400) {
        this.update({ pending: false, errorsHtml: renderErrors(error.fieldErrors) });
      } else if (error instanceof ApiError && error.status === 503) {
        this.update({
          pending: false,
          bannerHtml: '<div class="banner">service is warming up, retry shortly</div>',
        });
      } else {
        this.update({ pending: false, bannerHtml: '<div class="banner">request failed</div>' });
      }
    }
  }

  lastResults(): RecommendResponse[] {
    return [...this.history];
  }

  private renderHistory(): string {
    const titles = this.history.length === 2 ? ['previous run', 'latest run'] : ['latest run'];
    return this.history.map((resp, i) => renderResultPanel(resp, titles[i])).join('\n');
  }
}
