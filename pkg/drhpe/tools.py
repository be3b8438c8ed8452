"""Tools module for common resources / shared code and "utilities" in the drhpe package."""
import multiprocessing
import re
from typing import Optional, Tuple, Union

import numpy as np


def parse_num_processors(value: Union[str, int, float]) -> int:
    """Convert input value (parse if string) to number of processors.
    Args:
        value: an int, float or string; string value can be "X", "MAX" or "MAX-X"
    Returns:
        An int of the number of processors to use

    Raises:
        ValueError: Input value exceeds number of available processors
        ValueError: Input value less than 1 processors
    """
    max_processors = multiprocessing.cpu_count()
    if isinstance(value, str):
        result = value.strip().upper()
        if result == "MAX":
            return max_processors
        if re.match("^[0-9]+$", result):
            value = int(result)
        else:
            result = re.split(r"^MAX[\s]*-[\s]*", result)
            if len(result) == 2 and result[1].isdigit():
                return max(max_processors - int(result[1]), 1)
            raise ValueError(f"Input value {value} is an int or string as 'MAX-X'")

    result = int(value)
    if result > max_processors:
        raise ValueError(f"Input value {value} greater than available processors")
    if result < 1:
        raise ValueError(f"Input value {value} less than 1 processors")
    return result


def parse_rs(value: str) -> Tuple[str, Optional[float], Optional[float]]:
    """Parse the R/S proximal-matrix strategy string.

    Args:
        value: "zero", "auto", or "scaled:r,s" with r, s >= 0

    Returns:
        (kind, r, s) with r and s None unless kind is "scaled"

    Raises:
        ValueError: unrecognized strategy or negative scale
    """
    text = value.strip().lower()
    if text in ("zero", "auto"):
        return text, None, None
    match = re.match(r"^scaled\s*:\s*([^,]+),\s*([^,]+)$", text)
    if not match:
        raise ValueError(f"R/S strategy '{value}' is not zero, auto or scaled:r,s")
    r_scale, s_scale = float(match.group(1)), float(match.group(2))
    if r_scale < 0 or s_scale < 0:
        raise ValueError(f"R/S scales must be nonnegative, got {r_scale}, {s_scale}")
    return "scaled", r_scale, s_scale


def parse_grid(value: str) -> Tuple[float, ...]:
    """Parse a numeric grid given as "a,b,c" or as "start:stop:num" (inclusive linspace)."""
    text = value.strip()
    if ":" in text:
        start, stop, num = text.split(":")
        return tuple(float(v) for v in np.linspace(float(start), float(stop), int(num)))
    return tuple(float(v) for v in text.split(",") if v.strip())
