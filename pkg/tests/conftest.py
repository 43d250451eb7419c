import numpy as np
import pytest

from nlsefd import ComplexField, GridSpec


def random_field(grid: GridSpec, seed: int = 0, amp: float = 0.05, precision="double") -> ComplexField:
    """Unit background plus small noise; smooth enough for nonlinear runs."""
    rng = np.random.default_rng(seed)
    z = 1.0 + amp * (rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape))
    return ComplexField.from_complex(grid, z, precision)


def field_bytes(psi: ComplexField) -> bytes:
    return psi.re.tobytes() + psi.im.tobytes()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE = {}


def record(criterion: int, ok: bool, detail: str) -> bool:
    """Remember one acceptance outcome for the end-of-session summary."""
    ACCEPTANCE[criterion] = (ok, detail)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
