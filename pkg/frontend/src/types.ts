/** Wire types mirrored from the recommendation service. */

export type Sex = 'male' | 'female';
export type Activity = 'sedentary' | 'light' | 'moderate' | 'active' | 'very_active';
export type Goal = 'loss' | 'maintenance' | 'gain';

export interface Profile {
  age: number;
  sex: Sex;
  weight: number;
  height: number;
  activity: Activity;
  goal: Goal;
}

export interface Overrides {
  alpha: number;
  tolerance: number;
  k: number;
  quantity_max: number;
}

export interface RecommendRequest {
  profile: Profile;
  overrides: Overrides;
}

export interface BundleItem {
  product_id: string;
  name: string;
  quantity: number;
  cal: number;
  prot: number;
}

export interface Targets {
  rmr: number;
  tdee: number;
  protein_target: number;
  eps_cal: number;
  eps_prot: number;
}

export interface RecommendResponse {
  targets: Targets;
  items: BundleItem[];
  totals: { cal: number; prot: number; carb: number; fat: number };
  energy: { l_phys: number; l_des: number; l_opt: number };
  success: boolean;
  tolerance: number;
  alpha: number;
  beta: number;
  k: number;
  quantity_max: number;
  iterations: number;
  seed: number;
  trace: number[];
  cold_start: boolean;
}

export interface Range {
  min: number;
  max: number;
}

export interface ConfigDoc {
  lambda: number;
  alpha: number;
  beta: number;
  theta_sim: number;
  tolerance: number;
  k: number;
  quantity_max: number;
  quantity_domain: number[];
  iterations: number;
  ranges: {
    alpha: Range;
    tolerance: Range;
    k: Range;
    quantity_max: Range;
  };
}

export interface FieldError {
  field: string;
  message: string;
}
