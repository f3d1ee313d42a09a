import hashlib
import random

import pytest

from passkeylab import crypto
from passkeylab.crypto import Seed, SeedOrigin

import ed25519_ref as ref

ZERO_SEED = Seed(bytes(32), SeedOrigin.ATTACKER_KNOWN)

# frozen from the pure-Python reference; see test_zero_seed_matches_reference
ZERO_SEED_PRIVATE_0 = "6db65fd59fd356f6729140571b5bcd6bb3b83492a16e1bf0a3884442fc3c8a0e"
ZERO_SEED_PUBLIC_0 = "36dc5611bd7fceb76b8a6ce996ab8782699b1e2f9f599a7e0aeeb66ae31bb127"

# published Ed25519 vector (public domain test suite)
KAT_SECRET = bytes.fromhex("7834095954aaa92c523a413fb6fa6be1d70f39305ae17012597d32599b8b6b2f")
KAT_PUBLIC = bytes.fromhex("8f58d8bfb192d1d7e0c3998a8d5cb5effc922a0d7080e83be027ebf61495fd16")
KAT_MESSAGE = b"ahoj\n"
KAT_SIGNATURE = bytes.fromhex(
    "ce1e15adc31747157d4460c17fb8ba45f36d0bbf51f9bb6bb9a1d24e448d9e8c"
    "366f7a8b5e2c69ba902e954619d8c18a47c56e4a289e8117ae9069717d846a01"
)


def test_known_answer_vector():
    kp = crypto.keypair_from_private(KAT_SECRET)
    assert kp.public_key == KAT_PUBLIC
    assert crypto.sign(KAT_SECRET, KAT_MESSAGE).bytes == KAT_SIGNATURE
    assert crypto.verify(KAT_PUBLIC, KAT_MESSAGE, KAT_SIGNATURE)


def test_reference_oracle_agrees_with_vector():
    assert ref.public_key(KAT_SECRET) == KAT_PUBLIC
    assert ref.sign(KAT_SECRET, KAT_MESSAGE) == KAT_SIGNATURE


def test_zero_seed_golden():
    kp = crypto.derive_seeded_keypair(ZERO_SEED, 0)
    assert kp.private_key.hex() == ZERO_SEED_PRIVATE_0
    assert kp.public_key.hex() == ZERO_SEED_PUBLIC_0


def test_zero_seed_matches_reference():
    private = hashlib.sha256(bytes(32) + (0).to_bytes(4, "big")).digest()
    assert private.hex() == ZERO_SEED_PRIVATE_0
    assert ref.public_key(private).hex() == ZERO_SEED_PUBLIC_0


@pytest.mark.parametrize("i", range(5))
def test_sign_matches_reference(i):
    rng = random.Random(i)
    kp = crypto.generate_keypair(rng)
    msg = rng.randbytes(1 + i * 13)
    sig = crypto.sign(kp.private_key, msg)
    assert sig.bytes == ref.sign(kp.private_key, msg)
    assert ref.verify(kp.public_key, msg, sig.bytes)


def test_distinct_keys_from_fresh_randomness():
    rng = random.Random(2024)
    keys = {crypto.generate_keypair(rng).public_key for _ in range(10_000)}
    assert len(keys) == 10_000


def test_seeded_derivation_is_injective_over_indices():
    keys = {crypto.derive_seeded_keypair(ZERO_SEED, i).public_key for i in range(1000)}
    assert len(keys) == 1000


def test_seeded_derivation_is_reproducible():
    seed = Seed(bytes(range(32)), SeedOrigin.ATTACKER_KNOWN)
    assert crypto.derive_seeded_keypair(seed, 7) == crypto.derive_seeded_keypair(seed, 7)


def test_same_rng_state_gives_same_keypair():
    a, b = random.Random(5), random.Random(5)
    assert crypto.generate_keypair(a) == crypto.generate_keypair(b)


def test_single_bit_flips_break_verification():
    kp = crypto.generate_keypair(random.Random(9))
    msg = b"authenticator-data||client-data-hash"
    sig = crypto.sign(kp.private_key, msg).bytes
    for bit in range(len(sig) * 8):
        flipped = bytearray(sig)
        flipped[bit // 8] ^= 1 << (bit % 8)
        assert not crypto.verify(kp.public_key, msg, bytes(flipped)), bit


def test_distinct_messages_distinct_signatures():
    rng = random.Random(3)
    kp = crypto.generate_keypair(rng)
    for _ in range(100):
        m1 = rng.randbytes(32)
        m2 = rng.randbytes(32)
        if m1 == m2:
            continue
        assert crypto.sign(kp.private_key, m1).bytes != crypto.sign(kp.private_key, m2).bytes


def test_wrong_key_rejected():
    rng = random.Random(4)
    a, b = crypto.generate_keypair(rng), crypto.generate_keypair(rng)
    sig = crypto.sign(a.private_key, b"m")
    assert not crypto.verify(b.public_key, b"m", sig)


def test_empty_message_refused():
    with pytest.raises(ValueError):
        crypto.sign(bytes(32), b"")


def test_malformed_inputs_do_not_verify():
    kp = crypto.generate_keypair(random.Random(1))
    sig = crypto.sign(kp.private_key, b"m").bytes
    assert not crypto.verify(kp.public_key[:31], b"m", sig)
    assert not crypto.verify(kp.public_key, b"m", sig[:63])


def test_seed_must_be_32_bytes():
    with pytest.raises(ValueError):
        Seed(b"short", SeedOrigin.FRESH_RANDOM)


def test_secrets_stay_out_of_repr():
    kp = crypto.derive_seeded_keypair(ZERO_SEED, 0)
    assert kp.private_key.hex() not in repr(kp)
    assert bytes(32).hex() not in repr(ZERO_SEED)
