from fastapi import HTTPException
from pydantic import ValidationError

from app.schemas.models import GaussArgs, RationalTime

# Path/query validation shared by the endpoints; bad input becomes a 400


def get_gauss_args(a: int, b: int, c: int) -> GaussArgs:
    try:
        return GaussArgs(a=a, b=b, c=c)
    except ValidationError as e:
        raise HTTPException(status_code=400, detail=e.errors()[0]["msg"])


def get_rational_time(M: int, p: int, q: int) -> RationalTime:
    try:
        return RationalTime(M=M, p=p, q=q)
    except ValidationError as e:
        raise HTTPException(status_code=400, detail=e.errors()[0]["msg"])
