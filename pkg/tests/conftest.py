import numpy as np
import pytest

from transmonsim.device import ChainSpec, TransmonSpec


@pytest.fixture
def single_transmon():
    """Flux-tunable transmon with the reference design parameters."""
    return TransmonSpec(josephson_energy_ghz=20.0, total_capacitance_ff=91.0, flux=0.0)


@pytest.fixture
def two_transmon_device():
    """Capacitively coupled pair: E_J/h = 22 and 19 GHz, 91 fF, C_c = 0.5 fF."""
    return ChainSpec(
        (
            TransmonSpec(22.0, 91.0, 0.0),
            TransmonSpec(19.0, 91.0, 0.0),
        ),
        coupling_capacitances_ff=(0.5,),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
