import math

import pytest

from pbchaos import PhaseState, SystemParams


@pytest.fixture(scope="session")
def weak_params():
    """Weakly nonlinear junction, moderate drive (section-gallery regime)."""
    return SystemParams(lam=0.7, epsilon=-0.11, drive_amp=0.2, drive_freq=1.5,
                        n_atoms=700)


@pytest.fixture(scope="session")
def mixed_params():
    """Above the self-trapping bifurcation, mixed phase space."""
    return SystemParams(lam=1.5, epsilon=-0.07, drive_amp=0.07, drive_freq=1.6,
                        n_atoms=700)


@pytest.fixture(scope="session")
def weak_center():
    return PhaseState(0.55, math.pi)


@pytest.fixture(scope="session")
def mixed_center():
    return PhaseState(0.0, 2.51)
