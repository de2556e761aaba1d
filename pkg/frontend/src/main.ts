/** DOM shell: binds the form and controls to the controller. */

import { httpClient } from './api.js';
import { SliderSpec, WhatIfApp } from './app.js';
import type { Overrides } from './types.js';

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

const app = new WhatIfApp(httpClient(), (state) => {
  byId('errors').innerHTML = state.errorsHtml;
  byId('banner').innerHTML = state.bannerHtml;
  byId('results').innerHTML = state.resultsHtml;
  byId<HTMLButtonElement>('submit').disabled = state.pending;
  for (const input of document.querySelectorAll<HTMLInputElement>('#profile input, #profile select')) {
    input.disabled = state.pending;
  }
});

function sliderMarkup(spec: SliderSpec): string {
  return `
  <label class="slider">
    <span>${spec.label}: <output id="${spec.id}-out">${spec.value}</output></span>
    <input type="range" id="${spec.id}" min="${spec.min}" max="${spec.max}"
           step="${spec.step}" value="${spec.value}" />
  </label>`;
}

function currentOverrides(): Overrides {
  return {
    alpha: Number(byId<HTMLInputElement>('alpha').value),
    tolerance: Number(byId<HTMLInputElement>('tolerance').value),
    k: Number(byId<HTMLInputElement>('k').value),
    quantity_max: Number(byId<HTMLInputElement>('quantity_max').value),
  };
}

async function boot(): Promise<void> {
  const sliders = await app.loadDefaults();
  if (sliders) {
    byId('controls').innerHTML = sliders.map(sliderMarkup).join('');
    for (const spec of sliders) {
      const input = byId<HTMLInputElement>(spec.id);
      input.addEventListener('input', () => {
        byId<HTMLOutputElement>(`${spec.id}-out`).value = input.value;
      });
    }
  }
  byId<HTMLFormElement>('profile').addEventListener('submit', (event) => {
    event.preventDefault();
    void app.submit({
      age: byId<HTMLInputElement>('age').value,
      sex: byId<HTMLSelectElement>('sex').value,
      weight: byId<HTMLInputElement>('weight').value,
      height: byId<HTMLInputElement>('height').value,
      activity: byId<HTMLSelectElement>('activity').value,
      goal: byId<HTMLSelectElement>('goal').value,
      overrides: currentOverrides(),
    });
  });
}

void boot();
