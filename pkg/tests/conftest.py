import random

import pytest

from passkeylab.authenticator import Authenticator, CtapRequest
from passkeylab.relying_party import RelyingParty
from passkeylab.structures import CREATE, GET, ClientData
from passkeylab.transcript import Transcript


class Bench:
    """An RP and an authenticator wired together directly, no network."""

    def __init__(self, seed=0, rp_id="linear.app"):
        self.transcript = Transcript()
        self.rp = RelyingParty(rp_id, rng=random.Random(f"{seed}:rp"), transcript=self.transcript)
        self.auth = Authenticator(pin="1234", rng=random.Random(f"{seed}:auth"), transcript=self.transcript)
        self.rp.create_account("alice", owner="victim")

    def register(self, user="alice", auth=None):
        auth = auth or self.auth
        cid, ch, _ = self.rp.begin_registration(user)
        cd = ClientData(CREATE, ch.encoded, self.rp.origin)
        auth.unlock(auth.pin)
        resp = auth.make_credential(CtapRequest("make_credential", self.rp.rp_id, cd.digest(), user_handle=user))
        return self.rp.finish_registration(cid, cd, {
            "credential_id": resp.credential_id,
            "public_key": resp.public_key,
            "authenticator_data": resp.authenticator_data,
        })

    def assert_(self, user=None, auth=None, origin=None):
        """Begin a login and have the authenticator sign it; returns finish args."""
        auth = auth or self.auth
        cid, ch = self.rp.begin_authentication(user)
        cd = ClientData(GET, ch.encoded, origin or self.rp.origin)
        auth.unlock(auth.pin)
        resp = auth.get_assertion(CtapRequest("get_assertion", self.rp.rp_id, cd.digest()))
        return [cid, cd, resp.authenticator_data, resp.credential_id, resp.user_handle, resp.signature]

    def login(self, **kw):
        return self.rp.finish_authentication(*self.assert_(**kw))


@pytest.fixture
def bench():
    return Bench()


# -- acceptance reporting ---------------------------------------------------

_CRITERIA: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or not (rep.when == "call" or rep.failed):
        return
    number, title = marker.args
    _CRITERIA[number] = (title, "PASS" if rep.passed else "FAIL", getattr(item, "criterion_detail", ""))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, status, detail = _CRITERIA[number]
        line = f"criterion {number}: {status}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
