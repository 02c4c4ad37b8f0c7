from fastapi import APIRouter, Depends, HTTPException
from pydantic import BaseModel

from app.api import deps
from app.core.config import settings
from app.core.exceptions import InvalidArgumentError
from app.schemas.base import ResponseWrapper
from app.schemas.models import ComplexValue, GaussArgs
from app.services.gauss_sum_service import gauss_sum_service

router = APIRouter()


class GaussReport(BaseModel):
    a: int
    b: int
    c: int
    direct: ComplexValue
    closed: ComplexValue
    magnitude: float
    agree: bool


@router.get("", response_model=ResponseWrapper[GaussReport])
def gauss_sum(args: GaussArgs = Depends(deps.get_gauss_args)):
    try:
        closed = gauss_sum_service.gauss_sum_closed(args)
        magnitude = gauss_sum_service.gauss_magnitude(args)
    except InvalidArgumentError as e:
        raise HTTPException(status_code=400, detail=str(e))
    direct = gauss_sum_service.gauss_sum_direct(args)
    agree = abs(direct.to_complex() - closed.to_complex()) < settings.GAUSS_TOLERANCE
    report = GaussReport(a=args.a, b=args.b, c=args.c, direct=direct, closed=closed,
                         magnitude=magnitude, agree=agree)
    return ResponseWrapper(data=report, warnings=[] if agree else ["closed form disagrees with direct sum"])
