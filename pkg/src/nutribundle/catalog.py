"""Data model, CSV ingestion, validation, and synthetic data generation.

The synthetic generator stands in for proprietary purchase/nutrition dumps.
It is fully seeded and produces a catalog where every product name is a
noisy paraphrase of exactly one reference food, so the product->food
resolution step can be scored against known ground truth.
"""

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

SEXES = ("male", "female")
ACTIVITIES = ("sedentary", "light", "moderate", "active", "very_active")
GOALS = ("loss", "maintenance", "gain")

NUTRIENT_FIELDS = ("cal", "prot", "carb", "fat", "sugar", "sodium")


class DataFormatError(ValueError):
    """Raised when a CSV file does not match the documented schema."""


@dataclass(frozen=True)
class NutrientVector:
    """Per-serving nutrient record: kcal, grams, grams, grams, grams, mg."""

    cal: float
    prot: float
    carb: float
    fat: float
    sugar: float
    sodium: float

    def as_array(self) -> np.ndarray:
        return np.array([self.cal, self.prot, self.carb, self.fat, self.sugar, self.sodium])

    def check(self) -> list[str]:
        out = []
        for name in NUTRIENT_FIELDS:
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                out.append(f"nutrient {name}={v!r} must be finite and >= 0")
        return out


@dataclass(frozen=True)
class Product:
    id: str
    name: str
    department: str

    def check(self) -> list[str]:
        out = []
        if not self.id:
            out.append("product id is empty")
        if not self.name.strip():
            out.append(f"product {self.id!r} has an empty name")
        return out


@dataclass(frozen=True)
class ReferenceFood:
    id: str
    description: str
    nutrients: NutrientVector

    def check(self) -> list[str]:
        out = []
        if not self.id:
            out.append("food id is empty")
        if not self.description.strip():
            out.append(f"food {self.id!r} has an empty description")
        out.extend(f"food {self.id!r}: {v}" for v in self.nutrients.check())
        return out


@dataclass(frozen=True)
class UserProfile:
    id: str
    age: int
    sex: str
    weight: float  # kg
    height: float  # cm
    activity: str
    goal: str

    def check(self) -> list[str]:
        out = []
        if not (13 <= self.age <= 100):
            out.append(f"user {self.id!r}: age {self.age} outside [13, 100]")
        if self.sex not in SEXES:
            out.append(f"user {self.id!r}: sex {self.sex!r} not one of {SEXES}")
        if not (30 <= self.weight <= 250):
            out.append(f"user {self.id!r}: weight {self.weight} outside [30, 250]")
        if not (120 <= self.height <= 230):
            out.append(f"user {self.id!r}: height {self.height} outside [120, 230]")
        if self.activity not in ACTIVITIES:
            out.append(f"user {self.id!r}: activity {self.activity!r} not one of {ACTIVITIES}")
        if self.goal not in GOALS:
            out.append(f"user {self.id!r}: goal {self.goal!r} not one of {GOALS}")
        return out


@dataclass(frozen=True)
class PurchaseRecord:
    user_id: str
    product_id: str


@dataclass
class Dataset:
    """Immutable-by-convention container with id->index lookups.

    ``truth`` holds the generator's product_id -> food_id ground-truth map;
    it is metadata for evaluation only and is never serialized.
    """

    products: list[Product]
    foods: list[ReferenceFood]
    users: list[UserProfile]
    purchases: list[PurchaseRecord]
    truth: dict[str, str] | None = None

    product_index: dict[str, int] = field(init=False, repr=False)
    food_index: dict[str, int] = field(init=False, repr=False)
    user_index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.product_index = {p.id: i for i, p in enumerate(self.products)}
        self.food_index = {f.id: i for i, f in enumerate(self.foods)}
        self.user_index = {u.id: i for i, u in enumerate(self.users)}

    def purchases_by_user(self) -> dict[int, set[int]]:
        out: dict[int, set[int]] = {i: set() for i in range(len(self.users))}
        for rec in self.purchases:
            out[self.user_index[rec.user_id]].add(self.product_index[rec.product_id])
        return out


# ---------------------------------------------------------------------------
# CSV schemas

CSV_HEADERS = {
    "products": ["product_id", "name", "department"],
    "foods": ["food_id", "description", "cal", "prot", "carb", "fat", "sugar", "sodium"],
    "users": ["user_id", "age", "sex", "weight_kg", "height_cm", "activity", "goal"],
    "purchases": ["user_id", "product_id"],
}

CSV_FILENAMES = {kind: f"{kind}.csv" for kind in CSV_HEADERS}


def _parse_float(value: str, column: str, line: int):
    try:
        return float(value)
    except ValueError:
        raise DataFormatError(f"line {line}: column {column!r} has unparseable value {value!r}")


def _parse_int(value: str, column: str, line: int):
    try:
        return int(value)
    except ValueError:
        raise DataFormatError(f"line {line}: column {column!r} has unparseable value {value!r}")


def load_csv(path: str, kind: str) -> list:
    """Load one entity CSV; raises DataFormatError on any schema violation."""
    if kind not in CSV_HEADERS:
        raise ValueError(f"unknown entity kind {kind!r}")
    if not os.path.exists(path):
        raise DataFormatError(f"file not found: {path}")
    expected = CSV_HEADERS[kind]
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file, expected header {expected}")
        if header != expected:
            missing = [c for c in expected if c not in header]
            extra = [c for c in header if c not in expected]
            raise DataFormatError(
                f"{path}: header mismatch, missing columns {missing}, unexpected {extra}"
            )
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected):
                raise DataFormatError(f"{path} line {line_no}: expected {len(expected)} fields, got {len(row)}")
            rec = _parse_row(kind, row, line_no)
            problems = rec.check() if hasattr(rec, "check") else []
            if problems:
                raise DataFormatError(f"{path} line {line_no}: " + "; ".join(problems))
            records.append(rec)
    return records


def _parse_row(kind: str, row: list[str], line: int):
    if kind == "products":
        return Product(id=row[0], name=row[1], department=row[2])
    if kind == "foods":
        nv = NutrientVector(*(_parse_float(row[i], CSV_HEADERS["foods"][i], line) for i in range(2, 8)))
        return ReferenceFood(id=row[0], description=row[1], nutrients=nv)
    if kind == "users":
        return UserProfile(
            id=row[0],
            age=_parse_int(row[1], "age", line),
            sex=row[2],
            weight=_parse_float(row[3], "weight_kg", line),
            height=_parse_float(row[4], "height_cm", line),
            activity=row[5],
            goal=row[6],
        )
    return PurchaseRecord(user_id=row[0], product_id=row[1])


def load_dataset(data_dir: str) -> Dataset:
    """Load the four entity CSVs from a directory into a Dataset."""
    parts = {kind: load_csv(os.path.join(data_dir, name), kind) for kind, name in CSV_FILENAMES.items()}
    return Dataset(
        products=parts["products"],
        foods=parts["foods"],
        users=parts["users"],
        purchases=parts["purchases"],
    )


def _fmt(v) -> str:
    # %g keeps integral floats short ("145" not "145.0") and round-trips the
    # one-decimal values the generator produces.
    return f"{v:g}"


def write_dataset(dataset: Dataset, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    tables = {
        "products": [[p.id, p.name, p.department] for p in dataset.products],
        "foods": [
            [f.id, f.description] + [_fmt(getattr(f.nutrients, n)) for n in NUTRIENT_FIELDS]
            for f in dataset.foods
        ],
        "users": [
            [u.id, str(u.age), u.sex, _fmt(u.weight), _fmt(u.height), u.activity, u.goal]
            for u in dataset.users
        ],
        "purchases": [[r.user_id, r.product_id] for r in dataset.purchases],
    }
    for kind, rows in tables.items():
        with open(os.path.join(out_dir, CSV_FILENAMES[kind]), "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADERS[kind])
            writer.writerows(rows)


# ---------------------------------------------------------------------------
# Validation

def validate(dataset: Dataset) -> list[str]:
    """Return all invariant violations; empty list means the dataset is sound."""
    violations: list[str] = []
    for group, records in (("product", dataset.products), ("food", dataset.foods), ("user", dataset.users)):
        seen: set[str] = set()
        for rec in records:
            if rec.id in seen:
                violations.append(f"duplicate {group} id {rec.id!r}")
            seen.add(rec.id)
            violations.extend(rec.check())
    pair_seen: set[tuple[str, str]] = set()
    for rec in dataset.purchases:
        if rec.user_id not in dataset.user_index:
            violations.append(f"purchase references unknown user id {rec.user_id!r}")
        if rec.product_id not in dataset.product_index:
            violations.append(f"purchase references unknown product id {rec.product_id!r}")
        pair = (rec.user_id, rec.product_id)
        if pair in pair_seen:
            violations.append(f"duplicate purchase pair {pair!r}")
        pair_seen.add(pair)
    if dataset.truth is not None:
        for pid, fid in dataset.truth.items():
            if fid not in dataset.food_index:
                violations.append(f"ground-truth map for {pid!r} references unknown food {fid!r}")
    return violations


# ---------------------------------------------------------------------------
# Synthetic generation
#
# Five nutrient archetypes; per-serving macros are drawn per archetype and
# calories derived as 4p + 4c + 9f, which keeps every serving under ~195
# kcal. Combined with the cohort's TDEE window below, a single serving of
# each of 8 items can never reach a daily calorie target, while quantities
# in {1,2,3} always can; that contrast is exactly what the evaluation bench
# is meant to expose.

_ARCHETYPES = ("lean_protein", "starch", "fat_dense", "sugary", "mixed")

# (prot_lo, prot_hi, carb_lo, carb_hi, fat_lo, fat_hi); derived calories stay
# in roughly [70, 195] kcal per serving for every archetype.
_MACRO_RANGES = {
    "lean_protein": (16, 28, 0, 4, 1, 6),
    "starch": (3, 7, 22, 36, 0, 2),
    "fat_dense": (2, 6, 2, 8, 10, 15),
    "sugary": (0, 2, 28, 42, 0, 2),
    "mixed": (6, 12, 10, 20, 3, 6),
}

_SODIUM_RANGES = {
    "lean_protein": (40, 400),
    "starch": (0, 300),
    "fat_dense": (0, 250),
    "sugary": (5, 150),
    "mixed": (100, 500),
}

_FOOD_BASES = {
    "lean_protein": [
        "chicken breast", "turkey breast", "tuna steak", "cod fillet", "tilapia fillet",
        "shrimp", "egg whites", "greek yogurt", "cottage cheese", "pork tenderloin",
        "sirloin steak", "salmon fillet",
    ],
    "starch": [
        "brown rice", "whole wheat bread", "rolled oats", "penne pasta", "flour tortilla",
        "russet potato", "sweet potato", "quinoa", "couscous", "bagel",
        "english muffin", "jasmine rice",
    ],
    "fat_dense": [
        "almond butter", "peanut butter", "olive oil", "cheddar cheese", "walnuts",
        "cashews", "avocado", "sunflower seeds", "cream cheese", "brie cheese",
        "pistachios", "tahini",
    ],
    "sugary": [
        "cola soda", "orange juice", "gummy candy", "chocolate cookies", "frosted cereal",
        "strawberry jam", "vanilla ice cream", "sports drink", "caramel popcorn", "fruit punch",
        "honey granola", "blueberry muffin",
    ],
    "mixed": [
        "beef chili", "chicken burrito", "vegetable lasagna", "pepperoni pizza", "ramen bowl",
        "beef meatballs", "chicken pot pie", "tuna salad", "egg fried rice", "bean stew",
        "turkey sandwich", "shrimp stir fry",
    ],
}

_FOOD_MODIFIERS = [
    "classic", "roasted", "smoked", "organic", "frozen", "baked",
    "spicy", "honey glazed", "garden", "country", "golden", "rustic",
]

_FOOD_PREPS = ["ready to eat", "single serving", "per portion", "standard cut", "plain"]

_DEPARTMENTS = {
    "lean_protein": ["meat & seafood", "dairy & eggs"],
    "starch": ["bakery", "pantry"],
    "fat_dense": ["snacks", "pantry"],
    "sugary": ["beverages", "snacks"],
    "mixed": ["frozen", "deli"],
}

_BRANDS = [
    "Sunrise", "Valley Farms", "Hearthstone", "Blue Meadow", "Nordica",
    "Prairie Gold", "Everfresh", "Cascadia", "Homestead", "Lakeside",
    "Redwood", "Harvest Moon", "Clearwater", "Stonebridge", "Willow Creek", "Amberly",
]

_QUALIFIERS = [
    "family pack", "value size", "premium", "select", "original",
    "deluxe", "signature", "fresh pick", "daily", "choice", "reserve", "prime",
]

# Cohort calorie window: keeps every user's target reachable with 8 items at
# quantities 1..3 and unreachable with 8 single servings.
_TDEE_WINDOW = (1800.0, 3400.0)

# Required protein density (g per 100 kcal) floor: below this the calorie
# target can only be met by near-zero-protein bundles, which no plausible
# catalog supports at scale.
_MIN_PROTEIN_DENSITY = 2.2

# Archetype preference priors by goal; jittered per user, floored so every
# user retains some appetite for every archetype.
_GOAL_PRIORS = {
    "gain": {"lean_protein": 0.34, "mixed": 0.22, "starch": 0.18, "fat_dense": 0.16, "sugary": 0.10},
    "loss": {"lean_protein": 0.30, "mixed": 0.24, "starch": 0.18, "sugary": 0.14, "fat_dense": 0.14},
    "maintenance": {"starch": 0.26, "sugary": 0.22, "mixed": 0.22, "fat_dense": 0.16, "lean_protein": 0.14},
}


def _make_food(rng: np.random.Generator, idx: int, archetype: str) -> ReferenceFood:
    bases = _FOOD_BASES[archetype]
    combo = idx // len(_ARCHETYPES)
    base = bases[combo % len(bases)]
    modifier = _FOOD_MODIFIERS[(combo // len(bases)) % len(_FOOD_MODIFIERS)]
    prep = _FOOD_PREPS[int(rng.integers(len(_FOOD_PREPS)))]
    plo, phi, clo, chi, flo, fhi = _MACRO_RANGES[archetype]
    prot = round(float(rng.uniform(plo, phi)), 1)
    carb = round(float(rng.uniform(clo, chi)), 1)
    fat = round(float(rng.uniform(flo, fhi)), 1)
    if archetype == "sugary":
        sugar = round(float(rng.uniform(12, max(12.0, min(30.0, carb)))), 1)
    else:
        hi = {"lean_protein": 2, "starch": 5, "fat_dense": 3, "mixed": 8}[archetype]
        sugar = round(float(rng.uniform(0, min(hi, carb) if carb > 0 else 0)), 1)
    slo, shi = _SODIUM_RANGES[archetype]
    sodium = float(rng.integers(slo, shi + 1))
    cal = round(4 * prot + 4 * carb + 9 * fat)
    nv = NutrientVector(cal=float(cal), prot=prot, carb=carb, fat=fat, sugar=sugar, sodium=sodium)
    return ReferenceFood(id=f"f{idx}", description=f"{modifier} {base}, {prep}", nutrients=nv)


def _sample_user(rng: np.random.Generator, idx: int) -> UserProfile:
    from . import physiology  # local import: physiology depends on this module

    for _ in range(1000):
        profile = UserProfile(
            id=f"u{idx}",
            age=int(rng.integers(22, 56)),
            sex=SEXES[int(rng.integers(2))],
            weight=round(float(rng.uniform(58, 104)), 1),
            height=round(float(rng.uniform(156, 192)), 1),
            activity=ACTIVITIES[int(rng.integers(len(ACTIVITIES)))],
            goal=GOALS[int(rng.integers(len(GOALS)))],
        )
        energy = physiology.tdee(profile)
        density = 100.0 * physiology.protein_target(profile) / energy
        if _TDEE_WINDOW[0] <= energy <= _TDEE_WINDOW[1] and density >= _MIN_PROTEIN_DENSITY:
            return profile
    raise RuntimeError("could not sample a profile inside the cohort calorie window")


def generate_synthetic(
    seed: int,
    n_products: int,
    n_foods: int,
    n_users: int,
    purchases_per_user: int,
) -> Dataset:
    """Build a deterministic synthetic dataset with known product->food truth."""
    counts = {"n_products": n_products, "n_foods": n_foods, "n_users": n_users,
              "purchases_per_user": purchases_per_user}
    for name, value in counts.items():
        if value < 1:
            raise ValueError(f"{name} must be >= 1, got {value}")
    if n_foods < 10:
        raise ValueError(f"n_foods must be >= 10 so all archetypes appear, got {n_foods}")
    if purchases_per_user > n_products:
        raise ValueError("purchases_per_user cannot exceed n_products")

    rng = np.random.Generator(np.random.PCG64(seed))

    foods = [_make_food(rng, i, _ARCHETYPES[i % len(_ARCHETYPES)]) for i in range(n_foods)]
    food_archetype = {f.id: _ARCHETYPES[i % len(_ARCHETYPES)] for i, f in enumerate(foods)}

    products: list[Product] = []
    truth: dict[str, str] = {}
    for i in range(n_products):
        food_idx = int(rng.integers(n_foods))
        food = foods[food_idx]
        archetype = food_archetype[food.id]
        core = food.description.split(",")[0]
        brand = _BRANDS[int(rng.integers(len(_BRANDS)))]
        qualifier = _QUALIFIERS[int(rng.integers(len(_QUALIFIERS)))]
        dept_options = _DEPARTMENTS[archetype]
        department = dept_options[int(rng.integers(len(dept_options)))]
        pid = f"p{i}"
        products.append(Product(id=pid, name=f"{brand} {core} {qualifier}", department=department))
        truth[pid] = food.id

    users = [_sample_user(rng, i) for i in range(n_users)]

    product_archetypes = np.array(
        [_ARCHETYPES.index(food_archetype[truth[p.id]]) for p in products]
    )
    food_pos = {f.id: i for i, f in enumerate(foods)}
    product_food = np.array([food_pos[truth[p.id]] for p in products])
    food_archetype_idx = np.array(
        [_ARCHETYPES.index(food_archetype[f.id]) for f in foods]
    )
    purchases: list[PurchaseRecord] = []
    n_favorites = min(n_foods, max(6, purchases_per_user // 2))
    for user in users:
        prior = _GOAL_PRIORS[user.goal]
        weights = np.array([prior[a] for a in _ARCHETYPES]) * rng.uniform(0.6, 1.4, size=len(_ARCHETYPES))
        weights = np.maximum(weights / weights.sum(), 0.08)
        weights /= weights.sum()
        # Shoppers rebuy a personal set of foods across brands, keeping one
        # staple from every archetype plus a second carb staple each from
        # the starch and sugary shelves; the rest of the basket is
        # archetype-weighted noise.
        favorites: list[int] = []
        staple_counts = {"lean_protein": 1, "starch": 2, "fat_dense": 1, "sugary": 2, "mixed": 1}
        for a, arch in enumerate(_ARCHETYPES):
            members = np.flatnonzero(food_archetype_idx == a)
            take = min(staple_counts[arch], members.size)
            favorites.extend(int(f) for f in rng.choice(members, size=take, replace=False))
        remaining = np.setdiff1d(np.arange(n_foods), np.array(favorites))
        if len(favorites) < n_favorites and remaining.size:
            food_w = weights[food_archetype_idx[remaining]]
            extra = rng.choice(
                remaining,
                size=min(n_favorites - len(favorites), remaining.size),
                replace=False,
                p=food_w / food_w.sum(),
            )
            favorites.extend(int(f) for f in extra)
        fav_mask = np.isin(product_food, np.array(favorites))
        arch_w = weights[product_archetypes]
        per_product = 0.2 * arch_w / arch_w.sum()
        if fav_mask.any():
            per_product = per_product + 0.8 * fav_mask / fav_mask.sum()
        per_product = per_product / per_product.sum()
        chosen = rng.choice(n_products, size=purchases_per_user, replace=False, p=per_product)
        for j in sorted(int(c) for c in chosen):
            purchases.append(PurchaseRecord(user_id=user.id, product_id=products[j].id))

    return Dataset(products=products, foods=foods, users=users, purchases=purchases, truth=truth)
