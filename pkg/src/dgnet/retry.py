"""Resample-on-failure decorator for noisy computations."""

from __future__ import annotations

import functools
import logging

import jax

from dgnet.errors import NonPhysicalStateError

logger = logging.getLogger(__name__)


def with_resample(func):
    """Decorator: re-draw the noise of a failing randomized evaluation.

    The wrapped function must take its PRNG key as the keyword argument
    ``key``. When it raises NonPhysicalStateError the key is advanced with
    ``jax.random.split`` and the call repeated, up to
    ``settings.retry.max_resamples`` extra attempts (read at call time).
    The last error is re-raised when every attempt fails.
    """

    @functools.wraps(func)
    def wrapper(*args, key, **kwargs):
        from dgnet.settings import get_settings
        max_resamples = get_settings().retry.max_resamples

        last_exc = None
        for attempt in range(max_resamples + 1):
            try:
                return func(*args, key=key, **kwargs)
            except NonPhysicalStateError as exc:
                last_exc = exc
                if attempt < max_resamples:
                    logger.warning(
                        "Resample %d/%d for %s: %s",
                        attempt + 1, max_resamples, func.__name__, exc,
                    )
                    key = jax.random.split(key)[1]
        raise last_exc

    return wrapper
