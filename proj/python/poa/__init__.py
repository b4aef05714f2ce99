# Copyright (C) 2026 The poa authors
# SPDX-License-Identifier: Apache-2.0
"""Proof-of-authorship for latent generative models: seeds, adjudication, studies."""

import json as _json

from . import _poa
from ._poa import (
    PoaError,
    __version__,
    hmac_sha3_256,
    required_samples,
    sample_gaussian,
    sha3_256,
    similarity,
)

__all__ = [
    "PoaError",
    "Surrogate",
    "__version__",
    "adjudicate",
    "canonical_kappa_bytes",
    "derive_seed",
    "fit_gennorm",
    "generate",
    "hmac_sha3_256",
    "judge",
    "ks_distance",
    "required_samples",
    "run_cli",
    "sample_gaussian",
    "sha3_256",
    "similarity",
    "tail_prob",
]

Surrogate = _poa.Surrogate


def canonical_kappa_bytes(kappa: dict) -> bytes:
    return _poa.canonical_kappa_bytes(_json.dumps(kappa))


def derive_seed(identity_id: bytes, kappa: dict) -> bytes:
    return _poa.derive_seed(identity_id, _json.dumps(kappa))


def fit_gennorm(samples) -> dict:
    return _json.loads(_poa.fit_gennorm(samples))


def tail_prob(params: dict, threshold: float) -> float:
    return _poa.tail_prob(_json.dumps(params), threshold)


def ks_distance(samples, params: dict) -> float:
    return _poa.ks_distance(samples, _json.dumps(params))


def generate(backend, meta: dict, e_digest: bytes, seed: bytes):
    return backend.generate(_json.dumps(meta), e_digest, seed)


def adjudicate(backend, identity_id: bytes, kappa: dict, contested, alpha: float, delta: float,
               transform: dict | None = None, parallelism: int = 1) -> dict:
    text = backend.adjudicate(identity_id, _json.dumps(kappa), contested, alpha, delta,
                              _json.dumps(transform) if transform else "", parallelism)
    return _json.loads(text)


def judge(report: dict, p_r: float) -> dict:
    return _json.loads(_poa.judge(_json.dumps(report), p_r))


def run_cli(args):
    """Runs one poa command line in-process; returns (exit_code, stdout, stderr)."""
    if not hasattr(_poa, "run_cli"):
        raise RuntimeError("this build has no command-line support")
    return _poa.run_cli(list(args))
