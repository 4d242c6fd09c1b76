# ebsum/utils.py
import json
import logging
import math
from fractions import Fraction
from pathlib import Path

import numpy as np
import pandas as pd
from rest_framework.renderers import JSONRenderer

from . import families
from .ebs_core import Profile
from .exceptions import InvalidArgument, UnsupportedFamily
from .serializers import ProfileSerializer

logger = logging.getLogger(__name__)

FAMILY_NAMES = (
    "binomial-n", "binomial-p", "poisson", "psd-cosh", "psd-poisson", "psd-binomial",
    "scaled-ebs", "karamata-stirling", "stirling-second",
)
GRID_SLACK = 1e-9


def parse_number(text, name="value"):
    try:
        return float(text)
    except (TypeError, ValueError):
        raise InvalidArgument(f"{name} must be a number, got {text!r}")


def parse_int(text, name="value"):
    try:
        return int(text)
    except (TypeError, ValueError):
        raise InvalidArgument(f"{name} must be an integer, got {text!r}")


def parse_probability(text):
    """"1/3" gives an exact Fraction, anything else a float."""
    if isinstance(text, (int, float, Fraction)):
        return text
    try:
        p = Fraction(text) if "/" in text else float(text)
    except (ValueError, ZeroDivisionError):
        raise InvalidArgument(f"cannot read a probability from {text!r}")
    if not 0 <= p <= 1:
        raise InvalidArgument(f"success probability {text} lies outside [0, 1]")
    return p


def profile_from_data(data):
    serializer = ProfileSerializer(data=data)
    if not serializer.is_valid():
        raise InvalidArgument(f"invalid profile: {json.dumps(serializer.errors)}")
    return serializer.save()


def parse_profile(text):
    """Profile from inline JSON, @path.json, or a shorthand.

    Shorthands: binomial:N:P, poisson:T, ks:T:N (Karamata-Stirling) and cosh:T:N.
    """
    if not text:
        raise InvalidArgument("a profile is required")
    if text.startswith("@"):
        path = Path(text[1:])
        try:
            text = path.read_text()
        except OSError as exc:
            raise InvalidArgument(f"cannot read profile file {path}: {exc}")
        return _profile_from_json(text)

    head, _, rest = text.partition(":")
    args = rest.split(":") if rest else []
    if head == "binomial" and len(args) == 2:
        n, p = parse_int(args[0], "N"), parse_probability(args[1])
        return Profile(probs=(float(p),) * n)
    if head == "poisson" and len(args) == 1:
        return Profile(lam=parse_number(args[0], "T"))
    if head == "ks" and len(args) == 2:
        return families.karamata_stirling_profile(parse_number(args[0], "T"), parse_int(args[1], "N"))
    if head == "cosh" and len(args) == 2:
        return families.cosh_profile(parse_number(args[0], "T"), parse_int(args[1], "N"))
    return _profile_from_json(text)


def _profile_from_json(text):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidArgument(f"malformed profile JSON: {exc}")
    if not isinstance(data, dict):
        raise InvalidArgument("profile JSON must be an object")
    return profile_from_data(data)


def parse_family(name, p=None, n=None, t=None, profile=None, n_max=200, tie_tol=families.DEFAULT_TIE_TOL):
    """Build a family spec from its command line name and parameters."""

    def need(value, flag):
        if value is None:
            raise InvalidArgument(f"--family {name} needs {flag}")
        return value

    if name == "binomial-n":
        return families.BinomialN(parse_probability(need(p, "--p")), tie_tol)
    if name == "binomial-p":
        return families.BinomialP(need(n, "--n"))
    if name == "poisson":
        return families.PoissonT(tie_tol)
    if name == "psd-cosh":
        return families.cosh_series()
    if name == "psd-poisson":
        return families.poisson_series()
    if name == "psd-binomial":
        return families.binomial_series(need(n, "--n"))
    if name == "scaled-ebs":
        return families.ScaledEBS(parse_profile(need(profile, "--profile")), tie_tol)
    if name == "karamata-stirling":
        return families.KaramataStirling(parse_number(need(t, "--t"), "--t"), n_max, tie_tol)
    if name == "stirling-second":
        return families.StirlingSecond(tie_tol=tie_tol)
    raise UnsupportedFamily(f"unknown family {name!r}")


def parse_tgrid(text):
    """lo:hi:step, both ends included."""
    parts = (text or "").split(":")
    if len(parts) != 3:
        raise InvalidArgument(f"grid must read lo:hi:step, got {text!r}")
    lo, hi, step = (parse_number(x, "grid bound") for x in parts)
    if not step > 0 or hi < lo or lo < 0:
        raise InvalidArgument(f"grid needs 0 <= lo <= hi and step > 0, got {text!r}")
    count = math.floor((hi - lo) / step + GRID_SLACK) + 1
    return lo + step * np.arange(count)


def render_table(rows, fmt, columns=None):
    """Rows of dicts as CSV (17 significant digits, header always) or a JSON array."""
    if fmt == "json":
        return render_json(list(rows))
    frame = pd.DataFrame(list(rows), columns=columns)
    return frame.to_csv(index=False, float_format="%.17g", lineterminator="\n")


def render_json(data):
    return JSONRenderer().render(data, renderer_context={"indent": 2}).decode() + "\n"


def write_output(stdout, text, out=None):
    if out:
        Path(out).write_text(text)
        logger.info("wrote %d bytes to %s", len(text), out)
    else:
        stdout.write(text, ending="")
