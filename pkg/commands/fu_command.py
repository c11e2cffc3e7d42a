import asyncio
import logging

import numpy as np

from core.errors import EXIT_OK
from core.reconstruct import fu_curve, fu_forward
from utils.report_writer import ReportWriter, fu_frame


class FuCommand:
    """f_u of the configured profile, on the uniform s_1 grid or at the configured nu values"""

    def __init__(self):
        self.logger = logging.getLogger(__name__)

    async def run(self, config, args):
        profile = config.build_profile()
        grids = config.grids
        nu_values = config.fu.nu

        if nu_values:
            # one independent transform per nu, gathered in input order
            values = await asyncio.gather(*[
                asyncio.to_thread(fu_forward, profile, nu, grids.abel_N) for nu in nu_values
            ])
            nu = np.asarray(nu_values, dtype=float)
            frame = fu_frame(1.0 - 4.0 / nu, values, nu=nu)
        else:
            curve = await asyncio.to_thread(fu_curve, profile, grids.abel_N, grids.s_max)
            frame = fu_frame(curve.nodes, curve.values)

        writer = ReportWriter(config.output_dir)
        path = writer.write_csv("fu.csv", frame)
        writer.write_manifest("fu", config.manifest(), {"rows": len(frame), "grid": "nu_list" if nu_values else "uniform_s1"})
        self.logger.info(f"✅ f_u on {len(frame)} points, range [{frame['f_u'].min():.6g}, {frame['f_u'].max():.6g}]")
        return {"success": True, "response": f"Wrote {len(frame)} f_u values to {path}", "exit_code": EXIT_OK}
