import os


def _debug_flag_enabled(flag: str) -> bool:
    flag_value = os.getenv(flag)
    return flag_value is not None and (flag_value == "1" or flag_value.lower() == "true")


DISABLE_TRACING = _debug_flag_enabled("KGP_DISABLE_TRACING")
"""Tracing is on by default and exports to the `kgp.tracing` logger. Set this flag to turn every
trace and span into a no-op.
"""

CHECK_ENERGY_FORMS = not _debug_flag_enabled("KGP_SKIP_ENERGY_CROSS_CHECK")
"""By default every energy evaluation is cross-checked against the undecomposed form of the
functional. Set this flag to skip the second evaluation.
"""
