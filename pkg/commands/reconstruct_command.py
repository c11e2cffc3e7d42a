import asyncio
import logging

from core.errors import EXIT_OK, InvalidInputError
from core.reconstruct import reconstruct_profile
from utils.report_writer import ReportWriter, read_fu_csv


def summary_line(report) -> str:
    s = report.summary()
    return (f"sup_error={s['sup_error']:.6g} l2_error={s['l2_error']:.6g} "
            f"N={s['N']} n={s['n']} nu_max={s['nu_max']:.6g}")


class ReconstructCommand:
    """h'' from an f_u table written by the fu command"""

    def __init__(self):
        self.logger = logging.getLogger(__name__)

    async def run(self, config, args):
        path = getattr(args, "fu_csv", None)
        if path is None:
            raise InvalidInputError("reconstruct needs --fu-csv PATH")
        fu_data = read_fu_csv(path)
        reference = None if getattr(args, "no_reference", False) else config.build_profile()

        report = await asyncio.to_thread(
            reconstruct_profile, fu_data, config.n, reference, config.tolerances.error_window,
            config.grids.smooth_inverse,
        )
        self.logger.warning(f"⚠️ mu in [0, {report.uncovered[1]:.3e}) is not covered; "
                            f"h'' extrapolated at {', '.join(report.extrapolated)}")

        writer = ReportWriter(config.output_dir)
        writer.write_csv("reconstruction.csv", report.to_frame())
        writer.write_manifest("reconstruct", config.manifest(), {**report.summary(), "fu_csv": str(path)})
        return {"success": True, "response": summary_line(report), "exit_code": EXIT_OK}
