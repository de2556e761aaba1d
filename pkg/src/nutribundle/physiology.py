"""Personalized nutrition baselines: resting metabolic rate, daily energy
expenditure, protein targets, and the tolerance bands used everywhere else.

All functions are pure and deterministic given a profile.
"""

from dataclasses import dataclass

from .catalog import UserProfile

# Standard five-level activity ladder.
ACTIVITY_MULTIPLIERS = {
    "sedentary": 1.2,
    "light": 1.375,
    "moderate": 1.55,
    "active": 1.725,
    "very_active": 1.9,
}

# Daily calorie adjustment per goal, kcal.
GOAL_ADJUSTMENTS = {"loss": -500.0, "maintenance": 0.0, "gain": 300.0}

# Protein coefficient per goal, g per kg bodyweight.
PROTEIN_PER_KG = {"loss": 1.2, "maintenance": 0.8, "gain": 1.6}

# Tolerance bands are a fixed fraction of each target.
TOLERANCE_FRACTION = 0.12


@dataclass(frozen=True)
class PhysioTargets:
    """Daily targets for one user; eps_* are the compliance half-widths."""

    rmr: float
    tdee: float
    protein_target: float
    eps_cal: float
    eps_prot: float


def rmr(profile: UserProfile) -> float:
    """Resting metabolic rate via Mifflin-St Jeor, kcal/day."""
    base = 10.0 * profile.weight + 6.25 * profile.height - 5.0 * profile.age
    return base + (5.0 if profile.sex == "male" else -161.0)


def tdee(profile: UserProfile) -> float:
    """Total daily energy expenditure: RMR scaled by activity, shifted by goal."""
    return rmr(profile) * ACTIVITY_MULTIPLIERS[profile.activity] + GOAL_ADJUSTMENTS[profile.goal]


def protein_target(profile: UserProfile) -> float:
    """Daily protein target in grams, proportional to bodyweight."""
    return profile.weight * PROTEIN_PER_KG[profile.goal]


def targets(profile: UserProfile) -> PhysioTargets:
    t = tdee(profile)
    p = protein_target(profile)
    return PhysioTargets(
        rmr=rmr(profile),
        tdee=t,
        protein_target=p,
        eps_cal=TOLERANCE_FRACTION * t,
        eps_prot=TOLERANCE_FRACTION * p,
    )
