"""Fixed experiment configurations shared by scripts/ and the acceptance tests.

Each field benchmark pins the family, amplitude, cells and lambda grid, so the sample cache
written by a script is exactly what the tests read back.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional

from .cache import SampleCache
from .oscint import DEFAULT_CONFIG, Amplitude, QuadratureConfig
from .phase import DPhase
from . import randol as R


@dataclass(frozen=True)
class FieldBenchmark:
    name: str
    family: object
    gamma: float
    n_gauge: float
    j_min: int
    j_max: int
    cells_per_annulus: int
    lgrid: R.LambdaGrid
    amplitude: Amplitude
    cfg: QuadratureConfig = DEFAULT_CONFIG
    note: str = ""

    @property
    def sgrid(self) -> R.SGrid:
        return R.SGrid.quasi_polar(self.n_gauge, self.j_min, self.j_max, self.cells_per_annulus)

    def run(self, cache: Optional[SampleCache] = None, workers: int = 1, progress=None) -> R.MaximalField:
        return R.maximal_field(self.family, self.gamma, self.sgrid, self.lgrid, self.cfg, self.amplitude,
                               cache, workers, progress)


# LA model with sign -1: no caustics, the blow-up is the rho^-(n-1)/(2n) tail alone
LA = DPhase.model(3, -1)
# x1 (x2 - x1^2)^2 + x1^7: m = 2, n = 7
NLA = DPhase.normal_form(7, 2)

FIELDS: Dict[str, FieldBenchmark] = {b.name: b for b in [
    FieldBenchmark("la_growth", LA, 1.0, 3, 2, 8, 8, R.LambdaGrid(2.0, 13, 16), Amplitude(0.5),
                   note="growth of the per-annulus max over j = 2..8"),
    FieldBenchmark("la_probe", LA, 1.0, 3, 5, 10, 8, R.LambdaGrid(2.0, 14, 16), Amplitude(0.5),
                   note="annuli whose critical points sit inside the amplitude plateau"),
    FieldBenchmark("la_probe_coarse", LA, 1.0, 3, 5, 10, 4, R.LambdaGrid(2.0, 14, 16), Amplitude(0.5),
                   note="half the cells of la_probe (refinement check)"),
    FieldBenchmark("nla_probe", NLA, 1.0, 5, 5, 13, 8, R.LambdaGrid(2.0, 15, 8),
                   Amplitude((0.5, 0.4), shear=(1.0, 2)),
                   note="cutoff in the adapted coordinates (x1, x2 - x1^2); the argmax stays below 2^15"),
]}

# decay at s = 0: lambda in {2^6, ..., 2^16}
DECAY_LAMBDAS = tuple(2.0 ** k for k in range(6, 17))
DECAY_AMPLITUDE = Amplitude(0.5)

GAMMA_SWEEP = (0.7, 0.8, 0.9, 1.0)

EXCEPTIONAL = dict(m=2, gamma=1.0)
