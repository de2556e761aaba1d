/** Thin service client. Injectable so tests can mock the wire. */

import type { ConfigDoc, FieldError, RecommendRequest, RecommendResponse } from './types.js';

export interface ApiClient {
  health(): Promise<{ ready: boolean }>;
  config(): Promise<ConfigDoc>;
  recommend(request: RecommendRequest): Promise<RecommendResponse>;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly fieldErrors: FieldError[] = [],
  ) {
    super(`service responded ${status}`);
  }
}

export function httpClient(base = ''): ApiClient {
  async function getJson<T>(path: string): Promise<T> {
    const response = await fetch(base + path);
    if (!response.ok) throw new ApiError(response.status);
    return response.json() as Promise<T>;
  }
  return {
    health: () => getJson('/api/health'),
    config: () => getJson<ConfigDoc>('/api/config'),
    recommend: async (request: RecommendRequest) => {
      const response = await fetch(base + '/api/recommend', {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify(request),
      });
      if (response.status === 400) {
        const body = (await response.json()) as { errors: FieldError[] };
        throw new ApiError(400, body.errors);
      }
      if (!response.ok) throw new ApiError(response.status);
      return response.json() as Promise<RecommendResponse>;
    },
  };
}
