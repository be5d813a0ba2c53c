"""Compiling Boolean predicates into exact ReLU networks.

Boolean values are encoded as +-1 reals (+1 = true).  A predicate on k bits is
a +-1 truth table indexed with coordinate 0 as the most significant bit:
index(x) = sum_j (1+x_j)/2 * 2**(k-1-j).

The compilation route is Fourier-analytic.  Every predicate expands as
P(x) = sum_S c_S * prod_{j in S} x_j with dyadic coefficients c_S (multiples
of 2**(1-k)).  Each monomial is realized by a chained product gadget

    x1 * x2 = phi(x1 + x2) + phi(-x1 - x2) - phi(x2) - phi(-x2),

exact on +-1 inputs, with later factors carried through earlier levels as
phi(x), phi(-x) pairs so that real-valued carries survive the ReLU.  The
monomial nets are then depth-aligned and linearly combined.  All constructions
here are exact over the dyadic grid: no parameter is ever rounded.

Coordinate indices in this module are 0-based everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import GridError, UserInputError
from .fixedpoint import FixedScalar
from .relunet import (
    ComplexityProfile,
    Layer,
    ReluNet,
    layer_blockdiag,
    layer_vstack,
    norm_product,
    structural_tuple,
)


# -- predicates and Fourier expansions ----------------------------------------


class Predicate:
    """A Boolean function on k bits as a +-1 truth table."""

    __slots__ = ("k", "table")

    def __init__(self, k: int, table):
        if k < 1:
            raise UserInputError(f"arity must be >= 1, got {k}")
        table = np.asarray(table, dtype=np.int8)
        if table.shape != (1 << k,):
            raise UserInputError(
                f"table must have length 2**{k} = {1 << k}, got {table.shape}")
        if not np.all(np.abs(table) == 1):
            raise UserInputError("table entries must be +-1")
        self.k = k
        self.table = table
        self.table.flags.writeable = False

    @classmethod
    def from_function(cls, k: int, fn) -> "Predicate":
        rows = []
        for idx in range(1 << k):
            bits = [(idx >> (k - 1 - j)) & 1 for j in range(k)]
            rows.append(fn(*[2 * b - 1 for b in bits]))
        return cls(k, rows)

    @classmethod
    def constant(cls, k: int, value: int) -> "Predicate":
        return cls(k, np.full(1 << k, value, dtype=np.int8))

    def index(self, x: Sequence[int]) -> int:
        if len(x) != self.k:
            raise UserInputError(f"expected {self.k} inputs")
        idx = 0
        for j, v in enumerate(x):
            if v not in (-1, 1):
                raise UserInputError("inputs must be +-1")
            idx |= ((1 + v) >> 1) << (self.k - 1 - j)
        return idx

    def evaluate(self, x: Sequence[int]) -> int:
        return int(self.table[self.index(x)])

    def evaluate_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X)
        if X.ndim != 2 or X.shape[1] != self.k:
            raise UserInputError(f"expected (n, {self.k}) inputs")
        pows = (1 << np.arange(self.k - 1, -1, -1)).astype(np.int64)
        idx = ((X > 0).astype(np.int64) @ pows)
        return self.table[idx]

    def __eq__(self, other):
        return (isinstance(other, Predicate) and other.k == self.k
                and np.array_equal(other.table, self.table))

    def __repr__(self):
        return f"Predicate(k={self.k})"


@dataclass(frozen=True)
class FourierExpansion:
    """P(x) = sum_S numerators[mask(S)] / 2**k * prod_{j in S} x_j.

    Subset masks use bit (k-1-j) for coordinate j, matching the table index
    convention, so mask arithmetic and table indices line up.
    """

    k: int
    numerators: tuple

    def __post_init__(self):
        if len(self.numerators) != (1 << self.k):
            raise UserInputError("need one numerator per subset")

    def coefficient(self, subset: Sequence[int]) -> Fraction:
        return Fraction(self.numerators[self._mask(subset)], 1 << self.k)

    def _mask(self, subset: Sequence[int]) -> int:
        mask = 0
        for j in subset:
            if not 0 <= j < self.k:
                raise UserInputError(f"coordinate {j} out of range(k={self.k})")
            bit = 1 << (self.k - 1 - j)
            if mask & bit:
                raise UserInputError("subset has a repeated coordinate")
            mask |= bit
        return mask

    def _subset(self, mask: int) -> tuple:
        return tuple(j for j in range(self.k) if mask & (1 << (self.k - 1 - j)))

    def terms(self) -> list[tuple[tuple, Fraction]]:
        """Nonzero (subset, coefficient) pairs, constant term included."""
        out = []
        for mask, num in enumerate(self.numerators):
            if num != 0:
                out.append((self._subset(mask), Fraction(num, 1 << self.k)))
        return out

    def degree(self) -> int:
        deg = 0
        for mask, num in enumerate(self.numerators):
            if num != 0:
                deg = max(deg, int(mask).bit_count())
        return deg

    def squared_mass(self) -> Fraction:
        return Fraction(sum(n * n for n in self.numerators), 1 << (2 * self.k))

    def synthesize(self) -> Predicate:
        """Inverse transform back to a truth table (must be +-1 valued)."""
        n = 1 << self.k
        t = [num * ((-1) ** (int(mask).bit_count())) for mask, num in
             enumerate(self.numerators)]
        t = _wht_inplace(t)
        table = []
        for v in t:
            if v not in (n, -n):
                raise UserInputError("expansion is not +-1 valued")
            table.append(1 if v > 0 else -1)
        return Predicate(self.k, table)


def _wht_inplace(t: list) -> list:
    n = len(t)
    h = 1
    while h < n:
        for start in range(0, n, 2 * h):
            for i in range(start, start + h):
                a, b = t[i], t[i + h]
                t[i], t[i + h] = a + b, a - b
        h *= 2
    return t


def fourier_transform(pred: Predicate) -> FourierExpansion:
    """Exact Fourier expansion of a predicate (integer butterfly transform)."""
    t = _wht_inplace([int(v) for v in pred.table])
    nums = tuple(((-1) ** (int(mask).bit_count())) * v for mask, v in enumerate(t))
    return FourierExpansion(k=pred.k, numerators=nums)


# -- monomial (parity) compilation ---------------------------------------------


def compile_parity(indices: Sequence[int], k: int) -> ReluNet:
    """Exact ReLU net for prod_{j in indices} x_j on {+-1}**k.

    Chained product gadget: level l holds the running product of the first
    l+1 factors as phi(p+y), phi(-p-y), phi(y), phi(-y), plus the remaining
    factors carried as phi(x), phi(-x) pairs.  Entries are all in {-1, 0, 1}.
    """
    idx = tuple(indices)
    if len(set(idx)) != len(idx) or not idx:
        raise UserInputError("indices must be a nonempty set of coordinates")
    if any(not 0 <= j < k for j in idx):
        raise UserInputError(f"coordinates must lie in range({k})")
    s = len(idx)
    meta = {"kind": "parity", "indices": list(idx), "k": k}
    if s == 1:
        W = np.zeros((1, k), dtype=object)
        W[0, idx[0]] = 1
        net = ReluNet([Layer.from_entries(W, [0], tau=0)], meta=meta)
        return net

    layers = []
    # level 1: pair up the first two factors, carry the rest
    w1 = 4 + 2 * (s - 2)
    rows, cols, vals = [], [], []

    def put(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v)

    put(0, idx[0], 1)
    put(0, idx[1], 1)
    put(1, idx[0], -1)
    put(1, idx[1], -1)
    put(2, idx[1], 1)
    put(3, idx[1], -1)
    for t in range(s - 2):
        put(4 + 2 * t, idx[2 + t], 1)
        put(5 + 2 * t, idx[2 + t], -1)
    layers.append(Layer.from_coo(rows, cols, vals, (w1, k),
                                 np.zeros(w1, dtype=object), 0))

    # levels 2..s-1: multiply in the next carried factor, pass the rest through
    for j in range(2, s):
        w_in = 4 + 2 * (s - j)
        w_out = 4 + 2 * (s - j - 1)
        rows, cols, vals = [], [], []
        for c, v in ((0, 1), (1, 1), (2, -1), (3, -1), (4, 1), (5, -1)):
            put(0, c, v)
            put(1, c, -v)
        put(2, 4, 1)
        put(2, 5, -1)
        put(3, 4, -1)
        put(3, 5, 1)
        for t in range(s - j - 1):
            put(4 + 2 * t, 6 + 2 * t, 1)
            put(5 + 2 * t, 7 + 2 * t, 1)
        layers.append(Layer.from_coo(rows, cols, vals, (w_out, w_in),
                                     np.zeros(w_out, dtype=object), 0))

    # output: read the product off the final gadget block
    layers.append(Layer.from_coo([0, 0, 0, 0], [0, 1, 2, 3], [1, 1, -1, -1],
                                 (1, 4), np.zeros(1, dtype=object), 0))
    return ReluNet(layers, meta=meta)


# -- structural surgery ---------------------------------------------------------


def pad_depth(net: ReluNet, target_L: int) -> ReluNet:
    """Function-preserving depth extension: v = phi(v) - phi(-v) per output."""
    L = net.profile.L
    if target_L < L:
        raise UserInputError(f"cannot reduce depth {L} -> {target_L}")
    if target_L == L:
        return net
    layers = list(net.layers)
    for _ in range(target_L - L):
        out = layers.pop()
        d = out.out_dim
        layers.append(_split_signs(out))
        rows = list(range(d)) + list(range(d))
        cols = list(range(d)) + list(range(d, 2 * d))
        vals = [1] * d + [-1] * d
        layers.append(Layer.from_coo(rows, cols, vals, (d, 2 * d),
                                     np.zeros(d, dtype=object), 0))
    Ln, Sn, taun = structural_tuple(layers)
    prof = ComplexityProfile(L=Ln, S=Sn, lam=net.profile.lam, tau=taun,
                             d_in=net.d_in, d_out=net.d_out)
    return ReluNet(layers, profile=prof, meta=net.meta)


def _split_signs(layer: Layer) -> Layer:
    """[W; -W], [b; -b]: outputs become (phi-ready) +- pairs."""
    rows = [int(r) for r in layer.rows] + [int(r) + layer.out_dim for r in layer.rows]
    cols = [int(c) for c in layer.cols] * 2
    vals = [int(v) for v in layer.vals.flat] + [-int(v) for v in layer.vals.flat]
    bm = np.array([int(v) for v in layer.bm.flat]
                  + [-int(v) for v in layer.bm.flat], dtype=object)
    return Layer.from_coo(rows, cols, vals, (2 * layer.out_dim, layer.in_dim),
                          bm, layer.tau)


def pad_size(net: ReluNet, target_S: int) -> ReluNet:
    """Add dead (all-zero) units to the last hidden layer."""
    S = net.profile.S
    if target_S < S:
        raise UserInputError(f"cannot reduce size {S} -> {target_S}")
    if target_S == S:
        return net
    if net.profile.L < 2:
        raise UserInputError("an affine net has no hidden layer to pad")
    extra = target_S - S
    layers = list(net.layers)
    h = layers[-2]
    layers[-2] = Layer.from_coo(h.rows, h.cols, h.vals,
                                (h.out_dim + extra, h.in_dim),
                                np.concatenate([h.bm,
                                                np.zeros(extra, dtype=object)]),
                                h.tau)
    out = layers[-1]
    layers[-1] = Layer.from_coo(out.rows, out.cols, out.vals,
                                (out.out_dim, out.in_dim + extra), out.bm, out.tau)
    Ln, Sn, taun = structural_tuple(layers)
    prof = ComplexityProfile(L=Ln, S=Sn, lam=net.profile.lam, tau=taun,
                             d_in=net.d_in, d_out=net.d_out)
    return ReluNet(layers, profile=prof, meta=net.meta)


def rescale_layers(net: ReluNet) -> ReluNet:
    """Balance per-layer spectral norms by powers of two, exactly.

    Layer i is scaled by 2**(d_i - t_i) with t_i ~ log2 of its norm and the
    d_i a balanced integer split of sum(t_i); biases pick up the cumulative
    exponent.  The exponents sum to zero, so the function is unchanged bit
    for bit while every layer norm lands within a constant factor of the
    geometric mean.
    """
    norms = [layer.operator_norm() for layer in net.layers]
    t = [int(round(math.log2(nv))) if nv > 0 else 0 for nv in norms]
    L = len(net.layers)
    total = sum(t)
    base, rem = divmod(total, L)
    d = [base + (1 if i < rem else 0) for i in range(L)]
    layers = []
    c = 0
    for layer, ti, di in zip(net.layers, t, d):
        e = di - ti
        c += e
        layers.append(layer.scaled(e, c))
    if c != 0:
        raise AssertionError("rescale exponents must cancel")
    Ln, Sn, taun = structural_tuple(layers)
    prof = ComplexityProfile(L=Ln, S=Sn, lam=net.profile.lam, tau=taun,
                             d_in=net.d_in, d_out=net.d_out)
    return ReluNet(layers, profile=prof, meta=net.meta)


def embed_inputs(net: ReluNet, positions: Sequence[int], d_new: int) -> ReluNet:
    """Rewire input coordinate c to coordinate positions[c] of a wider input."""
    pos = [int(p) for p in positions]
    if len(pos) != net.d_in:
        raise UserInputError(f"need {net.d_in} positions")
    if len(set(pos)) != len(pos) or any(not 0 <= p < d_new for p in pos):
        raise UserInputError("positions must be distinct and inside range(d_new)")
    first = net.layers[0]
    cols = [pos[int(c)] for c in first.cols]
    layers = [Layer.from_coo(first.rows, cols, first.vals,
                             (first.out_dim, d_new), first.bm, first.tau)]
    layers.extend(net.layers[1:])
    p = net.profile
    prof = ComplexityProfile(L=p.L, S=p.S, lam=p.lam, tau=p.tau,
                             d_in=d_new, d_out=p.d_out)
    return ReluNet(layers, profile=prof, meta=net.meta)


# -- combination and composition -------------------------------------------------


def _scale_layer(layer: Layer, q: Fraction) -> Layer:
    """Layer with weights and biases multiplied by a dyadic scalar, exactly."""
    f = FixedScalar.from_fraction(q)
    num, t = f.mantissa, f.tau
    rows, cols, vals = [], [], []
    for r, c, v in zip(layer.rows, layer.cols, layer.vals):
        nv = int(v) * num
        if nv != 0:
            rows.append(int(r))
            cols.append(int(c))
            vals.append(nv)
    bm = np.array([int(v) * num for v in layer.bm.flat], dtype=object)
    return Layer.from_coo(rows, cols, vals, layer.shape, bm, layer.tau + t)


def linear_combine(nets: Sequence[ReluNet], lambdas: Sequence,
                   bias=0) -> ReluNet:
    """sum_i lambda_i f_i(x) + bias for scalar-output nets of equal depth."""
    nets = list(nets)
    if not nets:
        raise UserInputError("nothing to combine")
    if len(nets) != len(lambdas):
        raise UserInputError("one coefficient per net")
    d_in = nets[0].d_in
    L = nets[0].profile.L
    for net in nets:
        if net.d_out != 1:
            raise UserInputError("linear_combine needs scalar outputs")
        if net.d_in != d_in or net.profile.L != L:
            raise UserInputError("nets must share input dimension and depth")
    lams = [q if isinstance(q, Fraction) else Fraction(q) if isinstance(q, int)
            else FixedScalar.from_float(float(q)).as_fraction() for q in lambdas]
    bias_q = bias if isinstance(bias, Fraction) else Fraction(bias) \
        if isinstance(bias, int) else FixedScalar.from_float(float(bias)).as_fraction()

    if L == 1:
        W = np.zeros((1, d_in), dtype=object)
        acc_b = bias_q
        for net, q in zip(nets, lams):
            dense = net.layers[0].dense_object()
            den = 1 << net.layers[0].tau
            for j in range(d_in):
                W[0, j] += q * Fraction(int(dense[0, j]), den)
            acc_b += q * Fraction(int(net.layers[0].bm[0]), den)
        layer = Layer.from_entries(W, [acc_b], check=False)
        meta = {"kind": "linear-combine", "r": len(nets)}
        return ReluNet([layer], meta=meta)

    layers = []
    for ell in range(L - 1):
        parts = [net.layers[ell] for net in nets]
        layers.append(layer_vstack(parts) if ell == 0 else layer_blockdiag(parts))
    scaled = [_scale_layer(net.layers[-1], q) for net, q in zip(nets, lams)]
    tau_out = max(s.tau for s in scaled)
    scaled = [s.retuned(tau_out) for s in scaled]
    rows, cols, vals = [], [], []
    off = 0
    acc = 0
    for s in scaled:
        for r, c, v in zip(s.rows, s.cols, s.vals):
            rows.append(0)
            cols.append(int(c) + off)
            vals.append(int(v))
        acc += int(s.bm[0])
        off += s.in_dim
    fb = FixedScalar.from_fraction(bias_q)
    tau_b = max(tau_out, fb.tau)
    acc = (acc << (tau_b - tau_out)) + (fb.mantissa << (tau_b - fb.tau))
    vals = [int(v) << (tau_b - tau_out) for v in vals]
    out = Layer.from_coo(rows, cols, vals, (1, off),
                         np.array([acc], dtype=object), tau_b)
    # merge duplicate (row, col) pairs is unnecessary: blocks are disjoint
    layers.append(out)
    meta = {"kind": "linear-combine", "r": len(nets)}
    return ReluNet(layers, meta=meta)


def stack_outputs(nets: Sequence[ReluNet]) -> ReluNet:
    """x -> (f_1(x), ..., f_r(x)) stacked into one net (depths auto-aligned)."""
    nets = list(nets)
    if not nets:
        raise UserInputError("nothing to stack")
    d_in = nets[0].d_in
    if any(net.d_in != d_in for net in nets):
        raise UserInputError("nets must share the input dimension")
    L = max(net.profile.L for net in nets)
    nets = [pad_depth(net, L) for net in nets]
    layers = []
    for ell in range(L):
        parts = [net.layers[ell] for net in nets]
        layers.append(layer_vstack(parts) if ell == 0 else layer_blockdiag(parts))
    lam = math.sqrt(sum(net.profile.lam ** 2 for net in nets)) * (1 + 1e-9)
    Ln, Sn, taun = structural_tuple(layers)
    prof = ComplexityProfile(L=Ln, S=Sn, lam=lam, tau=taun,
                             d_in=d_in, d_out=sum(net.d_out for net in nets))
    return ReluNet(layers, profile=prof,
                   meta={"kind": "stack", "parts": len(nets)})


def compose(inners: Sequence[ReluNet] | ReluNet, outer: ReluNet,
            shift=1) -> ReluNet:
    """outer(f_1(x), ..., f_r(x)) with the class-arithmetic profile.

    The junction applies phi to (inner output + shift) and subtracts the shift
    inside the outer net's first affine layer.  The result is exact on every
    input whose inner outputs are all >= -shift (shift=1 covers +-1-valued
    inners; pass shift=0 for nonnegative inners).  Profile arithmetic:

        L = L1 + L2,  S = (S1 + 1) r + S2,  tau = max(tau1, tau2),
        lam = lam1 * lam2 * sqrt(r),

    with (L1, S1, lam1) the maxima over the inner nets after depth and size
    alignment, and r the outer input dimension.
    """
    if isinstance(inners, ReluNet):
        inners = [inners]
    inners = list(inners)
    if not inners:
        raise UserInputError("need at least one inner net")
    d_in = inners[0].d_in
    if any(net.d_in != d_in for net in inners):
        raise UserInputError("inner nets must share the input dimension")
    r = sum(net.d_out for net in inners)
    if r != outer.d_in:
        raise UserInputError(
            f"outer expects {outer.d_in} inputs, inners produce {r}")
    sq = shift if isinstance(shift, Fraction) else Fraction(shift) \
        if isinstance(shift, int) else FixedScalar.from_float(float(shift)).as_fraction()
    if sq < 0:
        raise UserInputError("shift must be >= 0")
    fs = FixedScalar.from_fraction(sq)

    L1 = max(net.profile.L for net in inners)
    inners = [pad_depth(net, L1) for net in inners]
    S1 = max(net.profile.S for net in inners)
    if S1 > 0:
        inners = [pad_size(net, S1) for net in inners]
    lam1 = max(net.profile.lam for net in inners)

    layers = []
    for ell in range(L1 - 1):
        parts = [net.layers[ell] for net in inners]
        layers.append(layer_vstack(parts) if ell == 0 else layer_blockdiag(parts))

    junction_parts = [net.layers[-1] for net in inners]
    junction = (layer_vstack(junction_parts) if L1 == 1
                else layer_blockdiag(junction_parts))
    tau_j = max(junction.tau, fs.tau)
    junction = junction.retuned(tau_j)
    sm_j = fs.mantissa << (tau_j - fs.tau)
    bm = np.array([int(v) + sm_j for v in junction.bm.flat], dtype=object)
    layers.append(Layer.from_coo(junction.rows, junction.cols, junction.vals,
                                 junction.shape, bm, tau_j))

    first = outer.layers[0]
    t_new = first.tau + fs.tau
    shifted = first.retuned(t_new)
    bm = np.array([int(v) for v in shifted.bm.flat], dtype=object)
    for rr, vv in zip(first.rows, first.vals):
        bm[int(rr)] -= int(vv) * fs.mantissa
    layers.append(Layer.from_coo(shifted.rows, shifted.cols, shifted.vals,
                                 shifted.shape, bm, t_new))
    layers.extend(outer.layers[1:])

    Ln, Sn, taun = structural_tuple(layers)
    lam = lam1 * outer.profile.lam * math.sqrt(r)
    prof = ComplexityProfile(L=Ln, S=Sn, lam=lam, tau=taun,
                             d_in=d_in, d_out=outer.d_out)
    meta = {"kind": "compose", "r": r, "shift": sq,
            "exact_domain": f"inner outputs >= {-sq}"}
    return ReluNet(layers, profile=prof, meta=meta)


# -- predicate compilation --------------------------------------------------------


def compile_predicate(pred: Predicate) -> ReluNet:
    """Exact ReLU net agreeing with the predicate on all of {+-1}**k.

    Depth is max |S| over nonzero Fourier terms (1 for affine predicates),
    so degree bounds translate directly into depth bounds.
    """
    F = fourier_transform(pred)
    terms = [(S, c) for S, c in F.terms() if len(S) > 0]
    c0 = F.coefficient(())
    k = pred.k
    meta = {"kind": "predicate", "k": k,
            "terms": [[list(S), [c.numerator, c.denominator]] for S, c in F.terms()]}
    if not terms:
        W = np.zeros((1, k), dtype=object)
        net = ReluNet([Layer.from_entries(W, [c0], check=False)], meta=meta)
        return net
    L = max(len(S) for S, _ in terms)
    parts = [pad_depth(compile_parity(S, k), max(L, 1)) for S, _ in terms]
    net = linear_combine(parts, [c for _, c in terms], bias=c0)
    return ReluNet(net.layers, meta=meta)


# -- clamps and leaky conversion ---------------------------------------------------


def clamp_net(xi: Fraction | int | float, m: int = 1) -> ReluNet:
    """Entrywise clamp h(x) = phi(x/xi + 1) - phi(x/xi - 1) - 1 on m coords.

    Requires 1/xi to be a positive integer q; entries are then the integers
    {q, +-1} and the profile is (L=2, S=2m, lam=q, tau=ceil(log2 q)).
    The map is the identity scaled onto [-1, 1]: h(x) = x/xi clipped to
    [-1, 1], so it is 1/xi-Lipschitz and exact outside (-xi, xi) transitions.
    """
    q_frac = xi if isinstance(xi, Fraction) else Fraction(xi)
    inv = 1 / q_frac
    if inv.denominator != 1 or inv.numerator < 1:
        raise GridError(f"clamp needs xi = 1/q for a positive integer q, got {xi}")
    q = int(inv)
    if m < 1:
        raise UserInputError("need at least one coordinate")
    tau = max(0, (q - 1).bit_length())  # smallest tau with q <= 2**tau
    rows, cols, vals = [], [], []
    bm = []
    for i in range(m):
        rows += [2 * i, 2 * i + 1]
        cols += [i, i]
        vals += [q << tau, q << tau]
        bm += [1 << tau, -(1 << tau)]
    l1 = Layer.from_coo(rows, cols, vals, (2 * m, m),
                        np.array(bm, dtype=object), tau)
    rows, cols, vals = [], [], []
    for i in range(m):
        rows += [i, i]
        cols += [2 * i, 2 * i + 1]
        vals += [1, -1]
    l2 = Layer.from_coo(rows, cols, vals, (m, 2 * m),
                        np.array([-1] * m, dtype=object), 0)
    prof = ComplexityProfile(L=2, S=2 * m, lam=float(q), tau=tau,
                             d_in=m, d_out=m)
    return ReluNet([l1, l2], profile=prof,
                   meta={"kind": "clamp", "xi": Fraction(1, q), "m": m})


def leaky_eval_float(weights: Sequence[np.ndarray], leak: float,
                     X: np.ndarray) -> np.ndarray:
    """W_L psi(... psi(W_1 x) ...) with psi(z) = (1-leak) phi(z) - leak phi(-z).

    Note psi(z) equals (1-leak)*z for z >= 0 and leak*z for z < 0.
    """
    A = np.ascontiguousarray(np.atleast_2d(X), dtype=np.float64).T
    last = len(weights) - 1
    for i, W in enumerate(weights):
        A = np.asarray(W, dtype=np.float64) @ A
        if i < last:
            A = np.where(A > 0, (1.0 - leak) * A, leak * A)
    return A.T


def leaky_to_relu(weights: Sequence, lambda_leak) -> ReluNet:
    """Exact ReLU rewrite of the leaky-ReLU net W_L psi(... psi(W_1 x) ...).

    Each hidden layer splits into a (W, -W) pair whose phi outputs the next
    layer reads with weights (1 - leak) and -leak; widths double, depth is
    unchanged.  Weight entries must be dyadic (any float64 qualifies) and the
    leak must be dyadic in (0, 1/2].
    """
    lq = lambda_leak if isinstance(lambda_leak, Fraction) \
        else Fraction(lambda_leak) if isinstance(lambda_leak, int) \
        else FixedScalar.from_float(float(lambda_leak)).as_fraction()
    if not 0 < lq <= Fraction(1, 2):
        raise UserInputError(f"leak must lie in (0, 1/2], got {lambda_leak}")
    mats = [np.asarray(W, dtype=object) for W in weights]
    if not mats:
        raise UserInputError("need at least one weight matrix")
    for A, B in zip(mats, mats[1:]):
        if B.shape[1] != A.shape[0]:
            raise UserInputError(
                f"weight shapes do not chain: {A.shape} -> {B.shape}")
    base = [Layer.from_entries(W, np.zeros(W.shape[0], dtype=object), check=False)
            for W in mats]
    L = len(base)
    meta = {"kind": "leaky-converted", "leak": lq, "hidden_layers": L - 1}
    if L == 1:
        return ReluNet(base, meta=meta)
    one_minus = Fraction(1) - lq
    layers = []
    for i, layer in enumerate(base):
        if i > 0:
            pos = _scale_layer(layer, one_minus)
            neg = _scale_layer(layer, -lq)
            tau = max(pos.tau, neg.tau)
            pos, neg = pos.retuned(tau), neg.retuned(tau)
            rows = [int(r) for r in pos.rows] + [int(r) for r in neg.rows]
            cols = [int(c) for c in pos.cols] \
                + [int(c) + layer.in_dim for c in neg.cols]
            vals = [int(v) for v in pos.vals.flat] + [int(v) for v in neg.vals.flat]
            merged = Layer.from_coo(rows, cols, vals,
                                    (layer.out_dim, 2 * layer.in_dim),
                                    pos.bm, tau)
        else:
            merged = layer
        layers.append(merged if i == L - 1 else _split_signs(merged))
    return ReluNet(layers, meta=meta)


def affine_net(W, b=None, lam: float | None = None, check: bool = True) -> ReluNet:
    """Single-layer (L=1) net from explicit entries."""
    W = np.asarray(W, dtype=object)
    if b is None:
        b = np.zeros(W.shape[0], dtype=object)
    layer = Layer.from_entries(W, b, check=check)
    return ReluNet([layer], lam=lam, meta={"kind": "affine"})
