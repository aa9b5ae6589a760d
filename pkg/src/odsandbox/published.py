"""Hyperparameters selected per biased dataset in the published experiments.

Deep tables map ``(outlier_mode, bias_kind)`` to ``{beta: (num_layers,
input_decay, epochs, lr, weight_decay, dropout)}``; FairOD tables map to
``{beta: (alpha, gamma)}``. The undefined ``threshold`` entry of the original
dumps is dropped.
"""

from __future__ import annotations

from .autoencoder import DeepHP

PUBLISHED_DEEP = {
    ('clustered', 'size'): {
        0.01: (4, 2.0, 100, 0.001, 1e-05, 0.0),
        0.05: (4, 1.0, 250, 0.0001, 1e-05, 0.0),
        0.1: (4, 2.5, 250, 0.001, 0.0, 0.0),
        0.2: (4, 1.0, 250, 0.0001, 1e-05, 0.0),
        0.4: (4, 1.0, 250, 0.0001, 1e-05, 0.0),
        0.6: (2, 2.5, 100, 0.001, 0.0, 0.0),
        0.8: (4, 1.0, 100, 0.001, 0.0, 0.2),
    },
    ('clustered', 'underrep'): {
        0.01: (4, 2.0, 100, 0.001, 0.0, 0.0),
        0.05: (4, 2.0, 100, 0.001, 0.0, 0.0),
        0.1: (4, 1.0, 250, 0.0001, 0.0, 0.0),
        0.2: (4, 2.0, 250, 0.001, 1e-05, 0.0),
        0.4: (4, 1.0, 250, 0.0001, 1e-05, 0.0),
        0.6: (4, 1.0, 100, 0.001, 1e-05, 0.2),
        0.8: (4, 1.0, 250, 0.0001, 1e-05, 0.0),
    },
    ('clustered', 'variance'): {
        0.0: (4, 2.5, 100, 0.001, 0.0, 0.0),
        0.05: (4, 2.0, 100, 0.001, 0.0, 0.0),
        0.1: (4, 2.0, 100, 0.001, 0.0, 0.0),
        0.2: (2, 1.0, 250, 0.0001, 1e-05, 0.0),
        0.5: (4, 2.0, 100, 0.001, 0.0, 0.0),
        1.0: (4, 2.0, 100, 0.001, 0.0, 0.0),
        2.0: (4, 2.0, 100, 0.001, 0.0, 0.0),
        4.0: (4, 1.0, 250, 0.0001, 1e-05, 0.0),
        6.0: (4, 1.0, 250, 0.0001, 1e-05, 0.0),
    },
    ('clustered', 'obfuscation'): {
        0.0: (4, 2.0, 100, 0.001, 1e-05, 0.0),
        0.05: (4, 2.5, 250, 0.001, 0.0, 0.0),
        0.1: (4, 1.5, 250, 0.0001, 1e-05, 0.0),
        0.2: (4, 1.5, 250, 0.0001, 0.0, 0.0),
        0.3: (2, 2.0, 250, 0.0001, 1e-05, 0.0),
        0.4: (4, 1.0, 250, 0.0001, 1e-05, 0.0),
    },
    ('scattered', 'size'): {
        0.01: (2, 1.5, 250, 0.001, 1e-05, 0.0),
        0.05: (2, 1.0, 250, 0.001, 0.0, 0.0),
        0.1: (2, 1.5, 250, 0.001, 1e-05, 0.0),
        0.2: (2, 1.0, 250, 0.001, 1e-05, 0.0),
        0.4: (2, 1.0, 250, 0.001, 0.0, 0.0),
        0.6: (2, 1.0, 250, 0.001, 1e-05, 0.0),
        0.8: (2, 1.0, 250, 0.001, 1e-05, 0.0),
    },
    ('scattered', 'underrep'): {
        0.01: (2, 1.0, 250, 0.001, 1e-05, 0.0),
        0.05: (2, 1.0, 250, 0.001, 0.0, 0.0),
        0.1: (2, 1.5, 250, 0.001, 1e-05, 0.0),
        0.2: (2, 1.0, 250, 0.001, 1e-05, 0.0),
        0.4: (2, 1.0, 250, 0.001, 0.0, 0.0),
        0.6: (2, 1.5, 250, 0.001, 1e-05, 0.0),
        0.8: (2, 1.5, 250, 0.001, 1e-05, 0.0),
    },
    ('scattered', 'variance'): {
        0.0: (2, 1.0, 250, 0.001, 0.0, 0.0),
        0.05: (2, 1.0, 250, 0.001, 0.0, 0.0),
        0.1: (2, 1.5, 250, 0.001, 1e-05, 0.0),
        0.2: (2, 1.5, 250, 0.001, 0.0, 0.0),
        0.5: (2, 1.5, 250, 0.001, 1e-05, 0.0),
        1.0: (2, 1.5, 250, 0.001, 0.0, 0.0),
        1.5: (2, 1.0, 250, 0.001, 0.0, 0.0),
        2.0: (2, 1.5, 250, 0.001, 1e-05, 0.0),
        3.0: (2, 1.5, 250, 0.001, 0.0, 0.0),
    },
    ('scattered', 'obfuscation'): {
        0.05: (2, 1.5, 250, 0.001, 1e-05, 0.0),
        0.1: (2, 1.5, 250, 0.001, 1e-05, 0.0),
        0.15: (2, 1.0, 250, 0.001, 1e-05, 0.0),
        0.2: (2, 1.0, 250, 0.001, 1e-05, 0.0),
        0.3: (2, 1.0, 250, 0.001, 1e-05, 0.0),
        0.4: (2, 1.0, 250, 0.001, 1e-05, 0.0),
    },
}

PUBLISHED_FAIR = {
    ('clustered', 'size'): {
        0.01: (0.01, 0.8),
        0.05: (0.05, 0.5),
        0.1: (0.5, 0.8),
        0.2: (0.01, 0.5),
        0.4: (0.01, 0.8),
        0.6: (0.05, 0.5),
        0.8: (0.01, 0.8),
    },
    ('clustered', 'underrep'): {
        0.01: (0.01, 0.01),
        0.05: (0.01, 0.2),
        0.1: (0.2, 0.01),
        0.2: (0.8, 0.8),
        0.4: (0.5, 0.01),
        0.6: (0.5, 0.01),
        0.8: (0.05, 0.01),
    },
    ('clustered', 'variance'): {
        0.0: (0.01, 0.01),
        0.05: (0.01, 0.01),
        0.1: (0.01, 0.01),
        0.2: (0.01, 0.01),
        0.5: (0.01, 0.01),
        1.0: (0.01, 0.01),
        2.0: (0.01, 0.01),
        4.0: (0.05, 0.8),
        6.0: (0.8, 0.2),
    },
    ('clustered', 'obfuscation'): {
        0.0: (0.05, 0.01),
        0.05: (0.05, 0.01),
        0.1: (0.2, 0.01),
        0.2: (0.05, 0.01),
        0.3: (0.2, 0.01),
        0.4: (0.05, 0.2),
    },
    ('scattered', 'size'): {
        0.01: (0.5, 0.01),
        0.05: (0.01, 0.01),
        0.1: (0.01, 0.01),
        0.2: (0.01, 0.01),
        0.4: (0.2, 0.01),
        0.6: (0.2, 0.01),
        0.8: (0.05, 0.01),
    },
    ('scattered', 'underrep'): {
        0.01: (0.5, 0.01),
        0.05: (0.05, 0.01),
        0.1: (0.01, 0.5),
        0.2: (0.05, 0.01),
        0.4: (0.5, 0.5),
        0.6: (0.01, 0.01),
        0.8: (0.8, 0.8),
    },
    ('scattered', 'variance'): {
        0.0: (0.8, 0.01),
        0.05: (0.01, 0.01),
        0.1: (0.01, 0.01),
        0.2: (0.01, 0.5),
        0.5: (0.05, 0.01),
        1.0: (0.01, 0.01),
        1.5: (0.5, 0.01),
        2.0: (0.01, 0.01),
        3.0: (0.01, 0.01),
    },
    ('scattered', 'obfuscation'): {
        0.05: (0.01, 0.01),
        0.1: (0.01, 0.01),
        0.15: (0.5, 0.01),
        0.2: (0.8, 0.01),
        0.3: (0.8, 0.01),
        0.4: (0.8, 0.01),
    },
}

# measurement-bias scenarios without their own table borrow the variance table,
# whose beta = 0 row is the unbiased dataset
_FALLBACK_KIND = "variance"


def _table(table: dict, mode: str, kind: str) -> dict:
    return table.get((mode, kind)) or table[(mode, _FALLBACK_KIND)]


def _ordered(table: dict, beta: float) -> list:
    """Distinct entries, the one closest to ``beta`` first, then in table order."""
    nearest = min(table, key=lambda b: (abs(b - beta), b))
    out = [table[nearest]]
    for value in table.values():
        if value not in out:
            out.append(value)
    return out


def published_deep_candidates(mode: str, kind: str, beta: float) -> list[DeepHP]:
    return [DeepHP(*row) for row in _ordered(_table(PUBLISHED_DEEP, mode, kind), beta)]


def published_fair_weights(mode: str, kind: str, beta: float) -> list[tuple[float, float]]:
    return _ordered(_table(PUBLISHED_FAIR, mode, kind), beta)
