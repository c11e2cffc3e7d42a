import asyncio
import logging

from core.errors import EXIT_OK, ToleranceError, exit_code_for
from core.reconstruct import fu_curve, reconstruct_profile
from commands.reconstruct_command import summary_line
from utils.report_writer import ReportWriter


class RoundtripCommand:
    """f_u of the configured profile, inverted back to h'' and compared with it"""

    def __init__(self):
        self.logger = logging.getLogger(__name__)

    async def run(self, config, args):
        profile = config.build_profile()
        grids = config.grids
        tolerance = config.tolerances.roundtrip

        fu_data = await asyncio.to_thread(fu_curve, profile, grids.abel_N, grids.s_max)
        scale = getattr(args, "fu_scale", None)
        if scale is not None and scale != 1.0:
            self.logger.warning(f"⚠️ Scaling f_u by {scale} before inversion")
            fu_data = fu_data.scaled(scale)

        report = await asyncio.to_thread(
            reconstruct_profile, fu_data, config.n, profile, config.tolerances.error_window, grids.smooth_inverse,
        )
        passed = report.sup_error <= tolerance

        writer = ReportWriter(config.output_dir)
        writer.write_csv("roundtrip.csv", report.to_frame())
        writer.write_manifest("roundtrip", config.manifest(),
                              {**report.summary(), "tolerance": tolerance, "fu_scale": scale or 1.0, "passed": passed})

        line = summary_line(report)
        if passed:
            self.logger.info(f"✅ Round trip within tolerance {tolerance:g}")
            return {"success": True, "response": f"PASS {line}", "exit_code": EXIT_OK}
        failure = ToleranceError(f"Round trip sup error {report.sup_error:.3g} exceeds tolerance {tolerance:g}")
        self.logger.error(f"❌ {failure}")
        return {"success": False, "response": f"FAIL {line}", "exit_code": exit_code_for(failure)}
