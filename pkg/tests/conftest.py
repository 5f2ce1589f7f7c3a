import random
from dataclasses import dataclass

import pytest

from olevbill.cspa import Cspa, init_msk
from olevbill.dmv import Dmv, SystemParams, TrmState, init_system
from olevbill.plate import PlateState
from olevbill.revocation import RevocationAuthorities


@dataclass
class Setup:
    rng: random.Random
    params: SystemParams
    shares: list
    ras: RevocationAuthorities
    dmv: Dmv
    cspa: Cspa

    def vehicle(self, n: int = 4, vehicle_id: bytes | None = None) -> tuple[bytes, TrmState]:
        vid = vehicle_id or self.rng.randbytes(8)
        trm = self.dmv.provision_trm(vid, n, self.rng)
        self.dmv.escrow_keys(trm, self.rng)
        self.cspa.enroll(trm.x_obu, trm.password)
        return vid, trm

    def plate(self, index: int = 3, t: float = 0.0) -> PlateState:
        plate = PlateState(index, self.params.dmv_public)
        self.sync(plate, t)
        return plate

    def sync(self, plate: PlateState, t: float = 0.0) -> None:
        plate.msk = self.cspa.epoch_at(t).msk
        plate.roster = self.cspa.roster()

    def register(self, trm: TrmState, t: float = 0.0) -> tuple[bytes, bytes]:
        return self.cspa.register_dma(trm.password, trm.x_obu, self.cspa.epoch_at(t))


def make_setup(seed: int = 0, j: int = 5, t: int = 3) -> Setup:
    rng = random.Random(seed)
    params, shares = init_system(j, t, rng)
    ras = RevocationAuthorities.from_shares(shares, t)
    dmv = Dmv(params, escrow_sink=ras.deposit)
    epochs = init_msk(rng.randbytes(64), 4, 100.0)
    cspa = Cspa(rng.randbytes(64), epochs, params.dmv_public, random.Random(seed + 1))
    return Setup(rng, params, shares, ras, dmv, cspa)


@pytest.fixture
def setup() -> Setup:
    return make_setup()


_criteria: dict[int, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or not (report.when == "call" or report.failed):
        return
    number, title = marker.args
    failed = report.failed or _criteria.get(number, (title, "PASS"))[1] == "FAIL"
    _criteria[number] = (title, "FAIL" if failed else "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, status = _criteria[number]
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {title}")
