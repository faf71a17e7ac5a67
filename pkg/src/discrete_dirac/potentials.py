"""Potential ingestion: the text file format and the builtin generators.

File format: one site per line, ``n q11 q12 q21 q22`` separated by
whitespace; ``#`` starts a comment; unlisted sites are zero.
"""
import re
from pathlib import Path

import numpy as np

from .lattice import LatticeWindow, MatrixPotential, PotentialError, check_potential_entries

TAIL_TARGET = 1e-12


class PotentialFileError(PotentialError):
    def __init__(self, message, line=None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line


def parse_potential_text(text, source="<string>"):
    """Parse the text format; every error names the offending line."""
    sites = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 5:
            raise PotentialFileError(f"{source}: expected 5 fields 'n q11 q12 q21 q22', got {len(fields)}",
                                     lineno)
        try:
            n = int(fields[0])
        except ValueError:
            raise PotentialFileError(f"{source}: site index {fields[0]!r} is not an integer", lineno)
        try:
            vals = [float(x) for x in fields[1:]]
        except ValueError as exc:
            raise PotentialFileError(f"{source}: {exc}", lineno)
        if n in sites:
            raise PotentialFileError(f"{source}: site {n} listed twice", lineno)
        mat = np.array(vals).reshape(1, 2, 2)
        try:
            check_potential_entries(mat, np.array([n]))
        except PotentialError as exc:
            raise PotentialFileError(f"{source}: {exc}", lineno)
        sites[n] = mat[0]
    return MatrixPotential.from_sites(sites)


def load_potential(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise PotentialFileError(f"cannot read {path}: {exc.strerror}")
    return parse_potential_text(text, str(path))


def write_potential(Q, path):
    lines = ["# n q11 q12 q21 q22"]
    for n, q in zip(Q.window.sites, Q.entries):
        if np.any(q):
            lines.append(f"{n} {q[0, 0]:.17g} {q[0, 1]:.17g} {q[1, 0]:.17g} {q[1, 1]:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def zero():
    return MatrixPotential.zero()


def single_site(n, entries):
    """``Q_n = entries`` (four numbers ``q11 q12 q21 q22`` or a 2x2 array)."""
    return MatrixPotential.from_sites({int(n): np.asarray(entries, dtype=float).reshape(2, 2)})


def exp_decay(amplitude, rate, half_width=None, tail_target=TAIL_TARGET):
    """``Q_n = amplitude e^{-rate |n|} [[1, 1/2], [1/2, -1]]``.

    With ``half_width=None`` the window is the smallest one whose dropped
    weighted tail ``sum_{|k| > N} (1+|k|) |Q_k|`` is below ``tail_target``;
    the actual bound is stored as ``tail_bound`` either way.
    """
    if rate <= 0:
        raise PotentialError("exp_decay rate must be positive")
    shape = np.array([[1.0, 0.5], [0.5, -1.0]])
    norm = abs(amplitude) * np.linalg.norm(shape, 2)

    def tail(N):
        # sum_{k > N} (1+k) e^{-rate k}, both sides
        q = np.exp(-rate)
        a = np.exp(-rate * (N + 1))
        return 2 * norm * a * ((N + 2) - (N + 1) * q) / (1 - q) ** 2

    if half_width is None:
        half_width = 0
        while tail(half_width) >= tail_target:
            half_width += 1
            if half_width > 100_000:
                raise PotentialError("exp_decay rate too small for a finite window")
    N = int(half_width)
    window = LatticeWindow.symmetric(N)
    prof = amplitude * np.exp(-rate * np.abs(window.sites))
    return MatrixPotential(window, prof[:, None, None] * shape, tail_bound=float(tail(N)))


def seeded_random(seed, half_width, envelope_rate=0.0, scale=0.3):
    """Random symmetric-coupling potential on ``[-half_width, half_width]``.

    Entries are uniform in ``[-scale, scale]`` times ``e^{-envelope_rate |n|}``;
    ``q21`` copies ``q12``. Deterministic for a given seed.
    """
    rng = np.random.default_rng(int(seed))
    window = LatticeWindow.symmetric(int(half_width))
    q = rng.uniform(-scale, scale, size=(window.size, 2, 2))
    q[:, 1, 0] = q[:, 0, 1]
    q *= np.exp(-float(envelope_rate) * np.abs(window.sites))[:, None, None]
    return MatrixPotential(window, q)


BUILTINS = {
    "zero": zero,
    "single_site": single_site,
    "exp_decay": exp_decay,
    "seeded_random": seeded_random,
}

_SPEC = re.compile(r"^\s*([a-z_]+)\s*(?:\((.*)\))?\s*$")


def parse_builtin(spec):
    """Parse ``name(arg, ...)``; ``single_site(0, 0.3, 0.1, 0.1, -0.2)`` takes the
    site followed by the four entries."""
    m = _SPEC.match(spec)
    if not m or m.group(1) not in BUILTINS:
        raise PotentialError(f"unknown potential spec {spec!r}; builtins are {', '.join(BUILTINS)}")
    name, argtext = m.group(1), m.group(2)
    args = []
    if argtext and argtext.strip():
        for tok in argtext.replace("[", " ").replace("]", " ").split(","):
            tok = tok.strip()
            if not tok:
                continue
            try:
                args.append(float(tok))
            except ValueError:
                raise PotentialError(f"non-numeric argument {tok!r} in {spec!r}")
    try:
        if name == "single_site":
            if len(args) != 5:
                raise PotentialError("single_site needs n and four entries")
            return single_site(int(args[0]), args[1:])
        if name == "seeded_random":
            if len(args) < 2:
                raise PotentialError("seeded_random needs seed and half_width")
            return seeded_random(int(args[0]), int(args[1]), *args[2:])
        if name == "exp_decay":
            if len(args) < 2:
                raise PotentialError("exp_decay needs amplitude and rate")
            hw = None if len(args) < 3 else int(args[2])
            return exp_decay(args[0], args[1], hw)
        return zero()
    except TypeError as exc:
        raise PotentialError(f"bad arguments for {name}: {exc}")


def resolve_potential(spec):
    """A builtin spec or a path to a potential file."""
    if spec is None:
        return zero()
    if isinstance(spec, MatrixPotential):
        return spec
    text = str(spec)
    if _SPEC.match(text) and text.split("(")[0].strip() in BUILTINS:
        return parse_builtin(text)
    return load_potential(text)
