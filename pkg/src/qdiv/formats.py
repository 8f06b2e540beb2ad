"""Text formats for matrices (QMTX), channels (QCHN), sources (QSRC) and protocols (QPROTO).

All readers are strict: wrong counts, unparsable numbers, NaN/Inf entries or
trailing garbage raise MalformedInput. Writers emit 17 significant digits so a
write/read round trip is exact.
"""
from pathlib import Path

import numpy as np

from . import coding as cd
from . import converse as cv
from . import quantum as qu
from .errors import MalformedInput, QdivError

QCHN_TP_TOL = 1e-8


def _num(x):
    return format(float(x), ".17g")


class _Tokens:
    def __init__(self, text):
        self.toks = text.split()
        self.pos = 0

    def done(self):
        return self.pos >= len(self.toks)

    def peek(self):
        return None if self.done() else self.toks[self.pos]

    def next(self, what="token"):
        if self.done():
            raise MalformedInput(f"unexpected end of input, expected {what}")
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def expect(self, word):
        tok = self.next(repr(word))
        if tok != word:
            raise MalformedInput(f"expected {word!r}, found {tok!r}")

    def int(self, what="integer", minimum=1):
        tok = self.next(what)
        try:
            v = int(tok)
        except ValueError:
            raise MalformedInput(f"{what} must be an integer, found {tok!r}") from None
        if v < minimum:
            raise MalformedInput(f"{what} must be at least {minimum}, found {v}")
        return v

    def float(self, what="number"):
        tok = self.next(what)
        try:
            v = float(tok)
        except ValueError:
            raise MalformedInput(f"{what} is not a number: {tok!r}") from None
        if not np.isfinite(v):
            raise MalformedInput(f"{what} must be finite, found {tok!r}")
        return v

    def finish(self):
        if not self.done():
            raise MalformedInput(f"trailing content starting at {self.peek()!r}")


def _text(source):
    """Accept a path or the file contents themselves."""
    if isinstance(source, Path):
        return source.read_text()
    if isinstance(source, str) and "\n" not in source and Path(source).is_file():
        return Path(source).read_text()
    return str(source)


# ---------------------------------------------------------------- QMTX

def _complex_body(tk, rows, cols):
    vals = np.empty(rows * cols, dtype=complex)
    for i in range(rows * cols):
        re = tk.float("real part")
        im = tk.float("imaginary part")
        vals[i] = complex(re, im)
    return vals.reshape(rows, cols)


def _qmtx_block(tk):
    tk.expect("QMTX")
    rows, cols = tk.int("rows"), tk.int("cols")
    return _complex_body(tk, rows, cols)


def parse_qmtx(source):
    tk = _Tokens(_text(source))
    M = _qmtx_block(tk)
    tk.finish()
    return M


def format_qmtx(M):
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    if M.ndim != 2:
        raise MalformedInput("only 2-D arrays serialize as QMTX")
    lines = [f"QMTX {M.shape[0]} {M.shape[1]}"]
    for row in M:
        lines.append(" ".join(f"{_num(z.real)} {_num(z.imag)}" for z in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- QCHN

def _qchn_block(tk):
    tk.expect("QCHN")
    nk, out_dim, in_dim = tk.int("n_kraus"), tk.int("out_dim"), tk.int("in_dim")
    ops = []
    for _ in range(nk):
        # a body may repeat its own QMTX header; if so it must agree
        if tk.peek() == "QMTX":
            K = _qmtx_block(tk)
            if K.shape != (out_dim, in_dim):
                raise MalformedInput(f"Kraus block {K.shape} does not match {out_dim}x{in_dim}")
        else:
            K = _complex_body(tk, out_dim, in_dim)
        ops.append(K)
    try:
        return qu.QuantumChannel(ops, tol=QCHN_TP_TOL)
    except QdivError as exc:
        raise MalformedInput(f"invalid channel: {exc}") from None


def parse_qchn(source):
    tk = _Tokens(_text(source))
    ch = _qchn_block(tk)
    tk.finish()
    return ch


def format_qchn(channel):
    lines = [f"QCHN {len(channel.kraus)} {channel.out_dim} {channel.in_dim}"]
    for K in channel.kraus:
        for row in K:
            lines.append(" ".join(f"{_num(z.real)} {_num(z.imag)}" for z in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- QSRC

def parse_qsrc(source):
    """QSRC file to a MixedSource (one component for a memoryless source)."""
    tk = _Tokens(_text(source))
    tk.expect("QSRC")
    m, d, k = tk.int("signals"), tk.int("dim"), tk.int("components")
    states = []
    for _ in range(m):
        v = np.array([tk.float("amplitude") for _ in range(2 * d)])
        vec = v[0::2] + 1j * v[1::2]
        if np.linalg.norm(vec) <= 0:
            raise MalformedInput("signal vectors must be nonzero")
        states.append(vec)
    weights, comps = [], []
    for _ in range(k):
        weights.append(tk.float("component weight"))
        probs = [tk.float("signal probability") for _ in range(m)]
        try:
            comps.append(cd.QuantumSource(probs, states))
        except QdivError as exc:
            raise MalformedInput(f"invalid component: {exc}") from None
    tk.finish()
    try:
        return cd.MixedSource(weights, comps)
    except QdivError as exc:
        raise MalformedInput(f"invalid mixture: {exc}") from None


def format_qsrc(msrc):
    if isinstance(msrc, cd.QuantumSource):
        msrc = cd.MixedSource([1.0], [msrc])
    states = msrc.components[0].states
    m, d, k = len(states), states[0].size, len(msrc.components)
    lines = [f"QSRC {m} {d} {k}"]
    for s in states:
        lines.append(" ".join(f"{_num(z.real)} {_num(z.imag)}" for z in s))
    for t, c in zip(msrc.weights, msrc.components):
        lines.append(" ".join([_num(t)] + [_num(p) for p in c.probs]))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- QPROTO

_INT_KEYS = ("A", "B", "C", "R", "n", "Q", "T_A", "T_A_out", "L", "M_A")


def _pairs(value, key):
    out = []
    for item in value.split(","):
        parts = item.split("x")
        if len(parts) != 2:
            raise MalformedInput(f"{key} entries look like 2x1, found {item!r}")
        try:
            a, b = int(parts[0]), int(parts[1])
        except ValueError:
            raise MalformedInput(f"{key} entries must be integers, found {item!r}") from None
        out.append((a, b))
    return out


def parse_qproto(source):
    """QPROTO v1 file to a ProtocolDescriptor.

    Layout::

        QPROTO v1
        kind <kind>
        dims A=2 B=2 C=2 R=2 n=1 Q=2 T_A=1 T_A_out=1 [rounds=2x2,2x1 memory=2x2 L=2 M_A=1]
        state
        QMTX <dim> 1 ...
        [povm <count>  followed by that many QMTX blocks]
        [encoder  QCHN ...]   (one per round for feedback)
        [decoder  QCHN ...]
    """
    tk = _Tokens(_text(source))
    tk.expect("QPROTO")
    tk.expect("v1")
    tk.expect("kind")
    kind = tk.next("kind")
    if kind not in cv.KINDS:
        raise MalformedInput(f"unknown protocol kind {kind!r}")
    tk.expect("dims")
    fields = {}
    while tk.peek() is not None and "=" in tk.peek():
        key, _, value = tk.next().partition("=")
        if key in fields:
            raise MalformedInput(f"duplicate dims key {key!r}")
        if key in _INT_KEYS:
            try:
                fields[key] = int(value)
            except ValueError:
                raise MalformedInput(f"dims value for {key} must be an integer") from None
            if fields[key] < 1:
                raise MalformedInput(f"dims value for {key} must be positive")
        elif key in ("rounds", "memory"):
            fields[key] = _pairs(value, key)
        else:
            raise MalformedInput(f"unknown dims key {key!r}")
    tk.expect("state")
    vec = _qmtx_block(tk)
    povm, encs, decs = None, [], []
    while not tk.done():
        word = tk.next()
        if word == "povm" and povm is None:
            povm = [_qmtx_block(tk) for _ in range(tk.int("POVM size"))]
        elif word == "encoder":
            encs.append(_qchn_block(tk))
        elif word == "decoder":
            decs.append(_qchn_block(tk))
        else:
            raise MalformedInput(f"unexpected section {word!r}")
    dims = tuple(fields.pop(s, 1) for s in cv.SYSTEMS)
    feedback = kind == "redistribution_feedback"
    enc = encs if feedback else (encs[0] if encs else None)
    dec = decs if feedback else (decs[0] if decs else None)
    if not feedback and (len(encs) > 1 or len(decs) > 1):
        raise MalformedInput("only feedback protocols carry several encoders")
    try:
        return cv.ProtocolDescriptor(kind, vec.ravel(), dims, povm=povm, encoder=enc, decoder=dec,
                                     **fields)
    except QdivError as exc:
        raise MalformedInput(f"invalid protocol: {exc}") from None


def format_qproto(desc):
    dims = dict(zip(cv.SYSTEMS, desc.dims), n=desc.n, Q=desc.Q, T_A=desc.T_A, T_A_out=desc.T_A_out)
    if desc.kind == "measurement_compression":
        dims.update(L=desc.L, M_A=desc.M_A)
    parts = [f"{k}={v}" for k, v in dims.items()]
    if desc.kind == "redistribution_feedback":
        parts.append("rounds=" + ",".join(f"{a}x{b}" for a, b in desc.rounds))
        if desc.memory:
            parts.append("memory=" + ",".join(f"{a}x{b}" for a, b in desc.memory))
    out = ["QPROTO v1", f"kind {desc.kind}", "dims " + " ".join(parts), "state",
           format_qmtx(desc.psi.reshape(-1, 1)).rstrip("\n")]
    if desc.povm is not None:
        out.append(f"povm {len(desc.povm)}")
        out += [format_qmtx(E).rstrip("\n") for E in desc.povm]
    encs = desc.encoder if isinstance(desc.encoder, (list, tuple)) else [desc.encoder]
    decs = desc.decoder if isinstance(desc.decoder, (list, tuple)) else [desc.decoder]
    for E in encs:
        if E is not None:
            out += ["encoder", format_qchn(E).rstrip("\n")]
    for D in decs:
        if D is not None:
            out += ["decoder", format_qchn(D).rstrip("\n")]
    return "\n".join(out) + "\n"


def load(source):
    """Dispatch on the leading magic word."""
    text = _text(source)
    head = text.split(None, 1)[0] if text.strip() else ""
    readers = {"QMTX": parse_qmtx, "QCHN": parse_qchn, "QSRC": parse_qsrc, "QPROTO": parse_qproto}
    if head not in readers:
        raise MalformedInput(f"unrecognized file type {head!r}")
    return readers[head](text)
