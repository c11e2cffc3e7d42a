import asyncio
import logging

import numpy as np
import pandas as pd

from core.errors import EXIT_OK, InvalidInputError
from core.invariant import InvariantRequest, spectral_invariant
from utils.numerics import BumpFunction
from utils.report_writer import ReportWriter


class ForwardCommand:
    """Spectral invariant of the configured profile for one (alpha, bump) pair"""

    def __init__(self):
        self.logger = logging.getLogger(__name__)

    def _resolve(self, config, args):
        settings = config.forward
        alpha = getattr(args, "alpha", None)
        if alpha is None:
            alpha = settings.alpha if settings.alpha is not None else [0.0] * config.n
        if len(alpha) != config.n:
            raise InvalidInputError(f"--alpha has {len(alpha)} entries, expected n = {config.n}")
        center = getattr(args, "center", None)
        width = getattr(args, "width", None)
        center = settings.center if center is None else center
        width = settings.width if width is None else width
        return np.asarray(alpha, dtype=float), float(center), float(width)

    async def run(self, config, args):
        alpha, center, width = self._resolve(config, args)
        profile = config.build_profile()
        scheme = config.forward.scheme
        q = config.quadrature
        budget = q.panels_for(config.n) if scheme == "tensor_duffy" else q.mc_samples

        request = InvariantRequest(profile, alpha, BumpFunction(center, width), scheme=scheme, budget=budget,
                                   seed=config.seed, workers=q.workers, batch_size=q.mc_batch)
        result = await asyncio.to_thread(spectral_invariant, request)
        self.logger.info(f"✅ Invariant for alpha={alpha.tolist()}: {result.value:.12g} ± {result.error:.2e}")

        writer = ReportWriter(config.output_dir)
        row = {
            "alpha": " ".join(f"{a:.15g}" for a in alpha),
            "c": center,
            "w": width,
            "value": result.value,
            "error_estimate": result.error,
        }
        writer.write_csv("forward.csv", pd.DataFrame([row]))
        writer.write_manifest("forward", config.manifest(), {**row, "scheme": scheme, "budget": budget})
        return {"success": True, "response": f"{result.value:.12g}", "exit_code": EXIT_OK}
