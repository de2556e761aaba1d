"""HTTP JSON service over frozen artifacts: one-shot recommendation with
what-if overrides, plus health and config endpoints for the bundled UI."""

import os

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field
from typing import Literal

from .catalog import UserProfile
from .runtime import Artifacts, RecommendOptions, config_defaults, recommend_for_profile, request_seed


class ProfileModel(BaseModel):
    age: int = Field(ge=13, le=100)
    sex: Literal["male", "female"]
    weight: float = Field(ge=30, le=250, description="kg")
    height: float = Field(ge=120, le=230, description="cm")
    activity: Literal["sedentary", "light", "moderate", "active", "very_active"]
    goal: Literal["loss", "maintenance", "gain"]


class OverridesModel(BaseModel):
    alpha: float | None = Field(default=None, ge=0.0, le=0.5)
    beta: float | None = Field(default=None, ge=0.0)
    k: int | None = Field(default=None, ge=5, le=10)
    tolerance: float | None = Field(default=None, ge=0.05, le=0.20)
    seed: int | None = None
    quantity_max: int | None = Field(default=None, ge=1, le=3)


class RecommendRequest(BaseModel):
    profile: ProfileModel
    overrides: OverridesModel | None = None


class TargetsModel(BaseModel):
    rmr: float
    tdee: float
    protein_target: float
    eps_cal: float
    eps_prot: float


class ItemModel(BaseModel):
    product_id: str
    name: str
    quantity: int
    cal: float
    prot: float


class TotalsModel(BaseModel):
    cal: float
    prot: float
    carb: float
    fat: float


class EnergyModel(BaseModel):
    l_phys: float
    l_des: float
    l_opt: float


class RecommendResponse(BaseModel):
    targets: TargetsModel
    items: list[ItemModel]
    totals: TotalsModel
    energy: EnergyModel
    success: bool
    tolerance: float
    alpha: float
    beta: float
    k: int
    quantity_max: int
    iterations: int
    seed: int
    trace: list[float]
    cold_start: bool


def create_app(artifacts: Artifacts | None = None, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="nutribundle", version="0.1.0")
    app.state.artifacts = artifacts

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        errors = [
            {"field": ".".join(str(p) for p in err["loc"] if p != "body"), "message": err["msg"]}
            for err in exc.errors()
        ]
        return JSONResponse(status_code=400, content={"errors": errors})

    @app.get("/api/health")
    def health():
        art: Artifacts | None = app.state.artifacts
        if art is None:
            return {"ready": False}
        return {
            "ready": True,
            "products": len(art.dataset.products),
            "foods": len(art.dataset.foods),
            "users": len(art.dataset.users),
            "checkpoint_hash": art.checkpoint_hash,
        }

    @app.get("/api/config")
    def config():
        return config_defaults()

    @app.post("/api/recommend", response_model=RecommendResponse)
    def recommend(body: RecommendRequest):
        art: Artifacts | None = app.state.artifacts
        if art is None:
            return JSONResponse(status_code=503, content={"error": "artifacts not loaded"})
        overrides = body.overrides or OverridesModel()
        defaults = RecommendOptions()
        seed = overrides.seed
        if seed is None:
            seed = request_seed(body.model_dump(mode="json"))
        options = RecommendOptions(
            alpha=defaults.alpha if overrides.alpha is None else overrides.alpha,
            beta=defaults.beta if overrides.beta is None else overrides.beta,
            k=defaults.k if overrides.k is None else overrides.k,
            quantity_max=defaults.quantity_max if overrides.quantity_max is None else overrides.quantity_max,
            tolerance=defaults.tolerance if overrides.tolerance is None else overrides.tolerance,
            iterations=defaults.iterations,
            seed=seed,
        )
        profile = UserProfile(
            id="request",
            age=body.profile.age,
            sex=body.profile.sex,
            weight=body.profile.weight,
            height=body.profile.height,
            activity=body.profile.activity,
            goal=body.profile.goal,
        )
        report = recommend_for_profile(art, profile, options)
        report.pop("profile")
        return report

    if ui_dir and os.path.isdir(ui_dir):
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app
