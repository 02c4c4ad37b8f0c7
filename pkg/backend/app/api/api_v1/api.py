from fastapi import APIRouter
from app.api.api_v1.endpoints import algebraic, gauss, reproduce

api_router = APIRouter()
api_router.include_router(gauss.router, prefix="/gauss", tags=["gauss"])
api_router.include_router(algebraic.router, prefix="/algebraic", tags=["algebraic"])
api_router.include_router(reproduce.router, prefix="/reproduce", tags=["reproduce"])
