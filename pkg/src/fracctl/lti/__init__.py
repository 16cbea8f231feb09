"""Integer- and fractional-order LTI systems: representation, analysis, simulation."""

from .analysis import (
    H2UndefinedError,
    IntegratingSystemError,
    dc_gain,
    freq_response,
    h2_from_samples,
    h2_grid,
    h2_norm,
    is_stable,
    minreal,
)
from .approx import oustaloup, pade_delay, rationalize
from .discrete import tustin_c2d, tustin_d2c
from .polynomial import Polynomial
from .serialize import (
    CsvFormatError,
    Signals,
    dump_system,
    load_system,
    read_signals_csv,
    system_from_dict,
    system_to_dict,
    write_signals_csv,
)
from .statespace import ClosedLoop, ImproperSystemError, StateSpace, closed_loop, realize, simulate
from .systems import FractionalTf, FrequencyResponse, RationalTf

__all__ = [
    "ClosedLoop",
    "CsvFormatError",
    "FractionalTf",
    "FrequencyResponse",
    "H2UndefinedError",
    "ImproperSystemError",
    "IntegratingSystemError",
    "Polynomial",
    "RationalTf",
    "Signals",
    "StateSpace",
    "closed_loop",
    "dc_gain",
    "dump_system",
    "freq_response",
    "h2_from_samples",
    "h2_grid",
    "h2_norm",
    "is_stable",
    "load_system",
    "minreal",
    "oustaloup",
    "pade_delay",
    "rationalize",
    "read_signals_csv",
    "realize",
    "simulate",
    "system_from_dict",
    "system_to_dict",
    "tustin_c2d",
    "tustin_d2c",
    "write_signals_csv",
]
