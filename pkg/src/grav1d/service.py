"""HTTP service exposing the library.

A thin FastAPI layer: every endpoint validates a pydantic request model,
calls into the library, and returns exact-rational payloads (all numbers are
"num/den" strings; series use the canonical sparse JSON schema from
``series``).  The command-line front end talks to this app in-process.
"""

from __future__ import annotations

from typing import List, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .series import QQ, Series, TruncationSpec, rat_str
from .partition import (
    recommended_spec,
    closed_form_Z,
    free_energy,
    correlator,
    admissible_keys,
)
from . import graphs, icoords, npoint, spectral
from .verify import VerifyConfig, run_suites, report_to_dict

__all__ = ["app"]

app = FastAPI(title="grav1d", version="0.1.0")


class RunConfig(BaseModel):
    kmax: int = Field(6, ge=0)
    dmax: int = Field(6, ge=0)
    gmax: int = Field(3, ge=0)

    def spec(self) -> TruncationSpec:
        return recommended_spec(self.kmax, self.dmax, self.gmax)


class CorrelatorRow(BaseModel):
    indices: List[int]
    genus: int
    value: str


class CorrelatorResponse(BaseModel):
    rows: List[CorrelatorRow]


class SeriesResponse(BaseModel):
    name: str
    payload: dict


class SeriesRequest(RunConfig):
    which: str = "F"  # Z | F | I0 | Ik | W
    k: Optional[int] = None  # coupling index for Ik
    n: int = 1  # number of points for W
    order: int = 3  # slot order for W
    hat: bool = False  # w-expansion instead of z-expansion


class NPointRequest(RunConfig):
    n: int = Field(1, ge=1, le=6)
    order: int = Field(3, ge=0, le=12)
    hat: bool = False
    genus: Optional[int] = None


class GraphsRequest(RunConfig):
    max_edges: int = Field(4, ge=0, le=5)
    tree_degree: int = Field(5, ge=1, le=6)


class SpectralRequest(RunConfig):
    mmax: int = Field(4, ge=-1)
    catalan_count: int = Field(6, ge=1, le=12)


class VerifyRequest(RunConfig):
    suites: List[str] = []


class CheckRow(BaseModel):
    suite: str
    name: str
    ok: bool
    detail: str


class VerifyResponse(BaseModel):
    config: dict
    suites: List[str]
    ok: bool
    checks: List[CheckRow]


@app.post("/correlators", response_model=CorrelatorResponse)
def correlators_endpoint(cfg: RunConfig) -> CorrelatorResponse:
    F = free_energy(closed_form_Z(cfg.spec()))
    rows = []
    for key in admissible_keys(cfg.kmax, cfg.dmax, cfg.gmax):
        rows.append(
            CorrelatorRow(
                indices=list(key.indices),
                genus=key.genus,
                value=rat_str(correlator(key, F)),
            )
        )
    return CorrelatorResponse(rows=rows)


@app.post("/free-energy", response_model=SeriesResponse)
def free_energy_endpoint(cfg: RunConfig) -> SeriesResponse:
    F = free_energy(closed_form_Z(cfg.spec()))
    return SeriesResponse(name="F", payload=F.to_dict())


@app.post("/series", response_model=SeriesResponse)
def series_endpoint(req: SeriesRequest) -> SeriesResponse:
    spec = req.spec()
    which = req.which
    if which == "Z":
        return SeriesResponse(name="Z", payload=closed_form_Z(spec).to_dict())
    if which == "F":
        return SeriesResponse(
            name="F", payload=free_energy(closed_form_Z(spec)).to_dict()
        )
    if which == "I0":
        return SeriesResponse(
            name="I0", payload=icoords.compute_I(spec).I[0].to_dict()
        )
    if which == "Ik":
        k = req.k
        if k is None or not 0 <= k <= spec.kmax:
            raise HTTPException(422, detail="Ik needs 0 <= k <= kmax")
        return SeriesResponse(
            name=f"I{k}", payload=icoords.compute_I(spec).I[k].to_dict()
        )
    if which == "W":
        wspec = npoint.widened(spec)
        F = free_energy(closed_form_Z(wspec))
        W = npoint.multi_point(wspec, req.n, req.order, F=F, hat=req.hat)
        return SeriesResponse(name=f"W{req.n}", payload=W.to_dict())
    raise HTTPException(422, detail=f"unknown series target {which!r}")


@app.post("/icoords", response_model=SeriesResponse)
def icoords_endpoint(req: SeriesRequest) -> SeriesResponse:
    spec = req.spec()
    bundle = icoords.compute_I(spec)
    k = req.k if req.k is not None else 0
    if not 0 <= k <= spec.kmax:
        raise HTTPException(422, detail="need 0 <= k <= kmax")
    return SeriesResponse(name=f"I{k}", payload=bundle.I[k].to_dict())


@app.post("/npoint", response_model=SeriesResponse)
def npoint_endpoint(req: NPointRequest) -> SeriesResponse:
    spec = req.spec()
    wspec = npoint.widened(spec)
    F = free_energy(closed_form_Z(wspec))
    W = npoint.multi_point(wspec, req.n, req.order, F=F, hat=req.hat)
    name = f"W{req.n}" + ("_hat" if req.hat else "")
    if req.genus is not None:
        W = npoint.genus_part(W, req.genus)
        name += f"_g{req.genus}"
    return SeriesResponse(name=name, payload=W.to_dict())


@app.post("/graphs", response_model=VerifyResponse)
def graphs_endpoint(req: GraphsRequest) -> VerifyResponse:
    residuals = graphs.oracle_compare(
        req.spec(), max_edges=req.max_edges, tree_degree=req.tree_degree
    )
    checks = [
        CheckRow(suite="graphs", name=name, ok=res.is_zero(), detail="")
        for name, res in residuals.items()
    ]
    return VerifyResponse(
        config=req.model_dump(),
        suites=["graphs"],
        ok=all(c.ok for c in checks),
        checks=checks,
    )


@app.post("/spectral", response_model=VerifyResponse)
def spectral_endpoint(req: SpectralRequest) -> VerifyResponse:
    spec = req.spec()
    checks = [
        CheckRow(
            suite="spectral",
            name="squared_deformation",
            ok=spectral.deformation_residual(spec).is_zero(),
            detail="",
        )
    ]
    cat = spectral.catalan_reversion(req.catalan_count)
    checks.append(
        CheckRow(
            suite="spectral",
            name="catalan_reversion",
            ok=cat == spectral.signed_catalan_coefficients(req.catalan_count),
            detail=",".join(rat_str(QQ(c)) for c in cat),
        )
    )
    for m in range(-1, req.mmax + 1):
        checks.append(
            CheckRow(
                suite="spectral",
                name=f"quadratic_field_on_Z_{m}",
                ok=spectral.quantized_z_residual(spec, m).is_zero(),
                detail=f"normalization {rat_str(spectral.NORMALIZATION)}",
            )
        )
    return VerifyResponse(
        config=req.model_dump(),
        suites=["spectral"],
        ok=all(c.ok for c in checks),
        checks=checks,
    )


@app.post("/verify", response_model=VerifyResponse)
def verify_endpoint(req: VerifyRequest) -> VerifyResponse:
    cfg = VerifyConfig(
        kmax=req.kmax, dmax=req.dmax, gmax=req.gmax, suites=tuple(req.suites)
    )
    try:
        results = run_suites(cfg)
    except KeyError as exc:
        raise HTTPException(422, detail=str(exc))
    report = report_to_dict(cfg, results)
    return VerifyResponse(**report)
