import random

import pytest

from passkeylab import crypto
from passkeylab.authenticator import (
    Authenticator,
    CtapRequest,
    CtapResponse,
    Infection,
    InfectionMode,
    infected_credential_id,
)
from passkeylab.crypto import Seed, SeedOrigin
from passkeylab.errors import DuplicateCredentialId, NoCredential, NotUnlocked, UserDeclined, WrongPin
from passkeylab.structures import AuthenticatorData, signed_payload

from conftest import Bench

SEED = Seed(bytes(range(32)), SeedOrigin.ATTACKER_KNOWN)
CDH = bytes(32)


class Decliner:
    approves_authenticator_prompts = False


def mc(auth, rp_id="linear.app", user="alice"):
    auth.unlock(auth.pin)
    return auth.make_credential(CtapRequest("make_credential", rp_id, CDH, user_handle=user))


def ga(auth, rp_id="linear.app", cdh=CDH):
    auth.unlock(auth.pin)
    return auth.get_assertion(CtapRequest("get_assertion", rp_id, cdh))


def test_locked_until_pin():
    auth = Authenticator()
    with pytest.raises(NotUnlocked):
        auth.make_credential(CtapRequest("make_credential", "linear.app", CDH))


def test_wrong_pin():
    auth = Authenticator(pin="1234")
    with pytest.raises(WrongPin):
        auth.unlock("0000")
    assert auth.locked


def test_relocks_after_each_operation():
    auth = Authenticator()
    mc(auth)
    with pytest.raises(NotUnlocked):
        auth.get_assertion(CtapRequest("get_assertion", "linear.app", CDH))


def test_user_decline():
    auth = Authenticator(user=Decliner())
    auth.unlock("1234")
    with pytest.raises(UserDeclined):
        auth.make_credential(CtapRequest("make_credential", "linear.app", CDH))


def test_no_credential_for_other_rp():
    auth = Authenticator()
    mc(auth)
    with pytest.raises(NoCredential):
        ga(auth, "evil.example")


def test_assertion_signs_auth_data_and_hash():
    auth = Authenticator(rng=random.Random(1))
    made = mc(auth)
    cdh = crypto.hash(b"client data")
    resp = ga(auth, cdh=cdh)
    assert crypto.verify(made.public_key, signed_payload(resp.authenticator_data, cdh), resp.signature)
    ad = AuthenticatorData.from_bytes(resp.authenticator_data)
    assert ad.rp_id_hash == crypto.hash(b"linear.app")
    assert ad.user_present and ad.user_verified
    assert ad.sign_count == 1


def test_counter_strictly_increases():
    auth = Authenticator()
    mc(auth)
    counts = [AuthenticatorData.from_bytes(ga(auth).authenticator_data).sign_count for _ in range(20)]
    assert counts == list(range(1, 21))


def test_fixed_infection_reuses_one_credential():
    auth = Authenticator(infection=Infection(SEED, InfectionMode.FIXED))
    a, b = mc(auth), mc(auth)
    assert a.credential_id == b.credential_id == infected_credential_id(SEED, 0)
    assert a.public_key == b.public_key == crypto.derive_seeded_keypair(SEED, 0).public_key


def test_indexed_infection_walks_indices():
    auth = Authenticator(infection=Infection(SEED, InfectionMode.INDEXED))
    got = [mc(auth).credential_id for _ in range(3)]
    assert got == [infected_credential_id(SEED, i) for i in range(3)]


def test_clone_from_seed_matches_infected_device():
    victim = Authenticator(infection=Infection(SEED, InfectionMode.FIXED))
    made = mc(victim)
    clone = Authenticator.cloned_from_seed(SEED, rp_id="linear.app", user_handle="alice")
    assert clone.public_credentials()[0]["public_key"] == made.public_key


def test_fixed_infection_hits_duplicate_id_at_rp():
    b = Bench()
    b.auth.infection = Infection(SEED, InfectionMode.FIXED)
    b.register()
    with pytest.raises(DuplicateCredentialId):
        b.register()


def test_wire_round_trip():
    req = CtapRequest("get_assertion", "linear.app", CDH, user_handle="u", allow_credentials=(b"a", b"b"))
    assert CtapRequest.from_message(req.to_message()) == req
    resp = CtapResponse(b"id", b"ad", public_key=b"pk", signature=b"s", user_handle="u")
    assert CtapResponse.from_message(resp.to_message()) == resp


def test_allow_list_filters():
    auth = Authenticator()
    first = mc(auth)
    mc(auth)
    auth.unlock("1234")
    resp = auth.get_assertion(CtapRequest("get_assertion", "linear.app", CDH, allow_credentials=(first.credential_id,)))
    assert resp.credential_id == first.credential_id


def test_private_key_never_in_responses():
    auth = Authenticator(rng=random.Random(7))
    made = mc(auth)
    resp = ga(auth)
    sk = auth._key_audit()[0]
    for msg in (made.to_message(), resp.to_message()):
        assert sk.hex() not in repr(msg)
    assert sk not in made.authenticator_data + resp.authenticator_data + resp.signature
