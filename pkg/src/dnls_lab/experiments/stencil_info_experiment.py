import logging
from typing import Any

from dnls_lab.experiments.base_experiment import BaseExperiment
from dnls_lab.lattice import dst_coefficients, stencil_symbol_analysis
from dnls_lab.utils.field_io import write_json

logger = logging.getLogger(__name__)

DEFAULT_MAX_ORDER = 4


def stencil_info(order: int) -> dict[str, Any]:
    stencil = dst_coefficients(order)
    analysis = stencil_symbol_analysis(stencil)
    return {
        "order": order,
        "coefficients": list(stencil.coefficients),
        "consistency_order": analysis.consistency_order,
        "stability_alpha": analysis.stability_alpha,
        "unstable": analysis.unstable,
    }


class StencilInfoExperiment(BaseExperiment):
    @property
    def name(self) -> str:
        return "stencil-info"

    @property
    def description(self) -> str:
        return "Coefficients, consistency order and stability constant of the centred stencils of orders 1..n."

    @property
    def parameters(self) -> list[str]:
        return ["stencil_order", "output_dir"]

    async def run(self, **kwargs) -> dict[str, Any]:
        max_order = self.config.stencil_order or DEFAULT_MAX_ORDER
        stencils = [stencil_info(n) for n in range(1, max_order + 1)]
        path = await write_json(self.output_dir / "stencils.json", {"stencils": stencils})
        return {
            "status": "success",
            "experiment": self.name,
            "stencils": [
                f"n={s['order']}: order {s['consistency_order']}, alpha={s['stability_alpha']:.6f}, a=({', '.join(f'{a:.6g}' for a in s['coefficients'])})" for s in stencils
            ],
            "output": str(path),
        }
