/** Client-side profile validation; bounds mirror the service exactly so an
 * invalid profile never produces a network request. */

import type { FieldError, Profile } from './types.js';

export const PROFILE_BOUNDS = {
  age: { min: 13, max: 100 },
  weight: { min: 30, max: 250 },
  height: { min: 120, max: 230 },
} as const;

const SEXES = ['male', 'female'];
const ACTIVITIES = ['sedentary', 'light', 'moderate', 'active', 'very_active'];
const GOALS = ['loss', 'maintenance', 'gain'];

export function validateProfile(raw: {
  age: string;
  sex: string;
  weight: string;
  height: string;
  activity: string;
  goal: string;
}): { profile?: Profile; errors: FieldError[] } {
  const errors: FieldError[] = [];

  const age = Number(raw.age);
  if (!Number.isInteger(age) || age < PROFILE_BOUNDS.age.min || age > PROFILE_BOUNDS.age.max) {
    errors.push({ field: 'age', message: `age must be an integer in ${PROFILE_BOUNDS.age.min}..${PROFILE_BOUNDS.age.max}` });
  }
  const weight = Number(raw.weight);
  if (!Number.isFinite(weight) || weight < PROFILE_BOUNDS.weight.min || weight > PROFILE_BOUNDS.weight.max) {
    errors.push({ field: 'weight', message: `weight must be ${PROFILE_BOUNDS.weight.min}..${PROFILE_BOUNDS.weight.max} kg` });
  }
  const height = Number(raw.height);
  if (!Number.isFinite(height) || height < PROFILE_BOUNDS.height.min || height > PROFILE_BOUNDS.height.max) {
    errors.push({ field: 'height', message: `height must be ${PROFILE_BOUNDS.height.min}..${PROFILE_BOUNDS.height.max} cm` });
  }
  if (!SEXES.includes(raw.sex)) errors.push({ field: 'sex', message: 'choose a sex' });
  if (!ACTIVITIES.includes(raw.activity)) errors.push({ field: 'activity', message: 'choose an activity level' });
  if (!GOALS.includes(raw.goal)) errors.push({ field: 'goal', message: 'choose a goal' });

  if (errors.length > 0) return { errors };
  return {
    profile: {
      age,
      sex: raw.sex as Profile['sex'],
      weight,
      height,
      activity: raw.activity as Profile['activity'],
      goal: raw.goal as Profile['goal'],
    },
    errors: [],
  };
}
