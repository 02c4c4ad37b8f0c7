from typing import Any, Dict

from fastapi import APIRouter, Depends, HTTPException

from app.api import deps
from app.core.exceptions import InvalidArgumentError, NumericalError
from app.schemas.base import ResponseWrapper
from app.schemas.models import RationalTime
from app.services.algebraic_service import algebraic_service
from app.services.export_service import export_service

router = APIRouter()


@router.get("/{M}/{p}/{q}", response_model=ResponseWrapper[Dict[str, Any]])
def exact_polygon(time: RationalTime = Depends(deps.get_rational_time)):
    """The aligned skew polygon at t_pq, in the same layout as the JSON file export."""
    try:
        residual = algebraic_service.closure_residual(time)
        polygon = algebraic_service.build_polygon(time)
    except InvalidArgumentError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except NumericalError as e:
        raise HTTPException(status_code=422, detail=str(e))

    warnings = []
    gap = algebraic_service.closure_gap(polygon)
    if gap > 1e-10:
        warnings.append(f"polygon closes only to {gap:.3e}")
    payload = export_service.polygon_payload(polygon)
    payload["closure_residual"] = residual
    payload["sides"] = algebraic_service.distinct_sides(polygon)
    payload["coefficients"] = [c.model_dump() for c in algebraic_service.delta_train(time).coefficient_values()]
    return ResponseWrapper(data=payload, warnings=warnings)
