import asyncio
import logging
import sys

from app.core.config import settings
from app.services.orchestrator import TARGETS, orchestrator

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    filename='reproduce.log',
    filemode='w'
)
logger = logging.getLogger(__name__)

async def main(scale: str = "desk") -> int:
    failed = []
    for target in TARGETS:
        logger.info(f"--- STARTING {target} ({scale}) ---")
        try:
            report = await orchestrator.reproduce(f"{target}-{scale}", target, scale, settings.OUT_DIR)
        except Exception as e:
            logger.error(f"{target} failed: {e}")
            failed.append(target)
            continue
        if not report["passed"]:
            failed.append(target)
        logger.info(f"--- COMPLETED {target}: {'passed' if report['passed'] else 'FAILED'} ---")

    if failed:
        logger.error(f"Targets with failures: {', '.join(failed)}")
        return 4
    return 0

if __name__ == "__main__":
    sys.exit(asyncio.run(main(sys.argv[1] if len(sys.argv) > 1 else "desk")))
