import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdcsim.experiment import Mode, build_topology
from qdcsim.theory import OracleParams, quantum_intensities, wheeler_intensities
from qdcsim.wave import detector_intensities, propagate

angle = st.floats(-7, 7, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(angle, angle, angle, angle)
def test_wired_network_reproduces_closed_form(alpha, phi, d0, d1):
    p = OracleParams(alpha, phi, d0, d1)
    for mode, oracle in ((Mode.WHEELER, wheeler_intensities), (Mode.QUANTUM, quantum_intensities)):
        got = detector_intensities(build_topology(mode, alpha, phi, d0, d1))
        assert got == pytest.approx(oracle(p), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(angle, angle)
def test_dump_ports_stay_dark(alpha, phi):
    for mode in Mode:
        out = propagate(build_topology(mode, alpha, phi))
        dumps = sum(v for k, v in out.items() if k.startswith("DUMP_"))
        assert dumps == pytest.approx(0.0, abs=1e-12)
        assert sum(out.values()) == pytest.approx(1.0, abs=1e-12)
