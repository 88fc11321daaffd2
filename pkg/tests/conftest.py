import numpy as np
import pytest

from adiabaton import FieldState, Gaussian, MediumSpec, TauGrid, sample_envelope


@pytest.fixture(scope="session")
def fig2_grid() -> TauGrid:
    return TauGrid(-40.0, 40.0, 4096)


@pytest.fixture(scope="session")
def fig2_fields(fig2_grid) -> FieldState:
    return FieldState(
        zeta=0.0,
        g_p=sample_envelope(Gaussian(20.0, 0.0, 1.0), fig2_grid),
        g_c=sample_envelope(Gaussian(20.0, 0.0, 10.0), fig2_grid),
    )


@pytest.fixture(scope="session")
def unit_medium() -> MediumSpec:
    return MediumSpec(kappa_c=1.0)


def rel_l2(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / np.linalg.norm(a))
