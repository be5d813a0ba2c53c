"""ReLU networks with exact dyadic parameters and complexity accounting.

A network is a chain of affine layers with ReLU between them:

    f(x) = W_L ( phi( ... phi(W_1 x + b_1) ... ) ) + b_L,   phi(z) = max(z, 0)

Complexity profile conventions:

* depth L   = number of weight matrices (L = 1 is an affine map),
* size  S   = total number of hidden units (the output layer is excluded,
              so L = 1 implies S = 0),
* tau       = dyadic grid resolution: every declared entry lies in
              R_tau = { a 2**-tau : |a 2**-tau| <= 2**tau },
* lam       = a claimed Lipschitz upper bound (product of per-layer spectral
              norms unless a sharper analytic bound is supplied).

Weight entries are integer mantissas at a per-layer tau, held in sparse
coordinate triplets (predicate and generator stacks are block-diagonal and
would be wasteful dense).  Exact evaluation is integer arithmetic end to end:
no rounding, no order dependence; an int64 fast path is used only when a
rigorous a-priori mantissa bound rules out overflow.  The float path uses IEEE
doubles with a fixed per-layer reduction order and is validated against the
exact path in tests, never trusted over it.

The R_tau magnitude cap |w| <= 2**tau applies to declared parameters
(`Layer.from_entries`); entries of derived constructions (compositions,
paddings) inherit validity from their inputs, and intermediate activations are
bounded by an explicit mantissa headroom instead.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import GridError, HeadroomExceeded, UserInputError
from .fixedpoint import DEFAULT_HEADROOM_BITS, FixedScalar

_INT64_SAFE_BITS = 62  # worst-case mantissa bound that guarantees no int64 overflow
_DENSE_ENTRY_LIMIT = 65536  # rows*cols above this serializes/densifies sparsely

# Guard factor applied to float-computed norm products so that claimed
# Lipschitz bounds stay valid upper bounds despite last-ulp effects.
_NORM_GUARD = 1.0 + 1e-9


@dataclass(frozen=True)
class ComplexityProfile:
    """(L, S, lam, tau, d_in, d_out) with the class-definition constraints."""

    L: int
    S: int
    lam: float
    tau: int
    d_in: int
    d_out: int

    def __post_init__(self):
        if self.L < 1:
            raise UserInputError(f"depth L must be >= 1, got {self.L}")
        if self.S < 0:
            raise UserInputError(f"size S must be >= 0, got {self.S}")
        if self.L == 1 and self.S != 0:
            raise UserInputError("an affine map (L=1) has no hidden units, S must be 0")
        if self.tau < 0:
            raise UserInputError(f"tau must be >= 0, got {self.tau}")
        if not np.isfinite(self.lam) or self.lam < 0:
            raise UserInputError(f"lambda must be finite and >= 0, got {self.lam}")
        if self.d_in < 1 or self.d_out < 1:
            raise UserInputError("d_in and d_out must be >= 1")

    def to_dict(self) -> dict:
        return {
            "L": self.L,
            "S": self.S,
            "lambda": self.lam,
            "tau": self.tau,
            "d_in": self.d_in,
            "d_out": self.d_out,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ComplexityProfile":
        return cls(L=d["L"], S=d["S"], lam=d["lambda"], tau=d["tau"],
                   d_in=d["d_in"], d_out=d["d_out"])


def _as_fraction(entry) -> Fraction:
    if isinstance(entry, FixedScalar):
        return entry.as_fraction()
    if isinstance(entry, Fraction):
        return entry
    if isinstance(entry, (int, np.integer)):
        return Fraction(int(entry))
    if isinstance(entry, (float, np.floating)):
        return Fraction(float(entry))  # exact: every finite double is dyadic
    raise GridError(f"unsupported entry type {type(entry).__name__}")


def _to_mantissa(entry, tau: int) -> int:
    """Exact mantissa of `entry` at grid resolution tau (never rounds)."""
    q = _as_fraction(entry)
    scaled = q * (1 << tau)
    if scaled.denominator != 1:
        raise GridError(f"{q} is not representable at tau={tau}")
    return scaled.numerator


def _min_tau(entry) -> int:
    """Smallest tau placing `entry` in R_tau (grid step and magnitude cap)."""
    q = _as_fraction(entry)
    den = q.denominator
    if den & (den - 1) != 0:
        raise GridError(f"{q} is not dyadic")
    tau = den.bit_length() - 1
    n = abs(q.numerator)
    if n:
        t = max(tau, n.bit_length() - den.bit_length() - 1, 0)
        while (den << t) < n:
            t += 1
        tau = t
    return tau


class Layer:
    """One affine layer: sparse integer-mantissa weights at a common tau."""

    __slots__ = ("rows", "cols", "vals", "shape", "bm", "tau",
                 "_csr64", "_csrf", "_bf")

    def __init__(self, rows, cols, vals, shape, bm, tau: int):
        if tau < 0:
            raise GridError(f"layer tau must be >= 0, got {tau}")
        self.rows = np.asarray(rows, dtype=np.int64)
        self.cols = np.asarray(cols, dtype=np.int64)
        self.vals = np.asarray(vals, dtype=object)
        if self.vals.size == 0:
            self.vals = self.vals.reshape(0)
        self.shape = (int(shape[0]), int(shape[1]))
        self.bm = np.asarray(bm, dtype=object)
        self.tau = int(tau)
        if self.bm.shape != (self.shape[0],):
            raise UserInputError(
                f"bias shape {self.bm.shape} does not match {self.shape[0]} rows")
        if not (len(self.rows) == len(self.cols) == len(self.vals)):
            raise UserInputError("ragged weight triplets")
        self._csr64 = None
        self._csrf = None
        self._bf = None

    # -- constructors --------------------------------------------------------

    @classmethod
    def from_entries(cls, W, b, tau: int | None = None, check: bool = True) -> "Layer":
        """Build from exact entries (float / int / Fraction / FixedScalar).

        With check=True (declared parameters) each entry is validated against
        the R_tau magnitude cap |w| <= 2**tau.
        """
        W = np.asarray(W, dtype=object)
        b = np.asarray(b, dtype=object)
        if W.ndim != 2 or b.ndim != 1 or b.shape[0] != W.shape[0]:
            raise UserInputError(f"bad layer shapes {W.shape} / {b.shape}")
        if tau is None:
            taus = [_min_tau(v) for v in W.flat] + [_min_tau(v) for v in b.flat]
            tau = max(taus, default=0)
        rows, cols, vals = [], [], []
        for (i, j), v in np.ndenumerate(W):
            m = _to_mantissa(v, tau)
            if m != 0:
                rows.append(i)
                cols.append(j)
                vals.append(m)
        bm = np.array([_to_mantissa(v, tau) for v in b.flat], dtype=object)
        layer = cls(rows, cols, vals, W.shape, bm, tau)
        if check:
            layer.check_declared()
        return layer

    @classmethod
    def from_coo(cls, rows, cols, vals, shape, bm, tau: int) -> "Layer":
        return cls(rows, cols, vals, shape, bm, tau)

    def check_declared(self) -> "Layer":
        cap = 1 << (2 * self.tau)  # |mantissa| <= 2**(2 tau) <=> |value| <= 2**tau
        for v in self.vals.flat:
            if abs(int(v)) > cap:
                raise GridError(
                    f"entry {v}*2^-{self.tau} exceeds the R_{self.tau} cap 2^{self.tau}")
        for v in self.bm.flat:
            if abs(int(v)) > cap:
                raise GridError(
                    f"bias {v}*2^-{self.tau} exceeds the R_{self.tau} cap 2^{self.tau}")
        return self

    # -- structure -----------------------------------------------------------

    @property
    def out_dim(self) -> int:
        return self.shape[0]

    @property
    def in_dim(self) -> int:
        return self.shape[1]

    @property
    def nnz(self) -> int:
        return len(self.vals)

    def retuned(self, new_tau: int) -> "Layer":
        """Same layer expressed on a finer grid (mantissas shifted up)."""
        if new_tau < self.tau:
            raise GridError("cannot coarsen a layer's grid")
        s = new_tau - self.tau
        if s == 0:
            return self
        vals = np.array([int(v) << s for v in self.vals.flat], dtype=object)
        bm = np.array([int(v) << s for v in self.bm.flat], dtype=object)
        return Layer(self.rows, self.cols, vals, self.shape, bm, new_tau)

    def scaled(self, exp_w: int, exp_b: int) -> "Layer":
        """Weights scaled by 2**exp_w and biases by 2**exp_b (exact)."""
        bump = max(0, -exp_w, -exp_b)
        tau = self.tau + bump
        sw, sb = exp_w + bump, exp_b + bump
        vals = np.array([int(v) << sw for v in self.vals.flat], dtype=object)
        bm = np.array([int(v) << sb for v in self.bm.flat], dtype=object)
        return Layer(self.rows, self.cols, vals, self.shape, bm, tau)

    # -- numeric views --------------------------------------------------------

    def max_abs_mantissa(self) -> int:
        mw = max((abs(int(v)) for v in self.vals.flat), default=0)
        mb = max((abs(int(v)) for v in self.bm.flat), default=0)
        return max(mw, mb)

    def fits_int64(self) -> bool:
        return self.max_abs_mantissa() < (1 << _INT64_SAFE_BITS)

    def csr_int64(self) -> sp.csr_matrix:
        if self._csr64 is None:
            if not self.fits_int64():
                raise HeadroomExceeded("layer mantissas exceed the int64 fast path")
            self._csr64 = sp.csr_matrix(
                (self.vals.astype(np.int64), (self.rows, self.cols)),
                shape=self.shape, dtype=np.int64)
        return self._csr64

    def csr_float(self) -> sp.csr_matrix:
        if self._csrf is None:
            den = 1 << self.tau
            data = np.array([float(Fraction(int(v), den)) for v in self.vals.flat],
                            dtype=np.float64)
            self._csrf = sp.csr_matrix((data, (self.rows, self.cols)),
                                       shape=self.shape, dtype=np.float64)
        return self._csrf

    def bias_float(self) -> np.ndarray:
        if self._bf is None:
            den = 1 << self.tau
            self._bf = np.array([float(Fraction(int(v), den)) for v in self.bm.flat],
                                dtype=np.float64)
        return self._bf

    def dense_float(self) -> np.ndarray:
        return self.csr_float().toarray()

    def dense_object(self) -> np.ndarray:
        W = np.zeros(self.shape, dtype=object)
        for r, c, v in zip(self.rows, self.cols, self.vals):
            W[int(r), int(c)] += int(v)
        return W

    def operator_norm(self) -> float:
        if min(self.shape) == 0:
            return 0.0
        if self.shape[0] * self.shape[1] <= _DENSE_ENTRY_LIMIT:
            return float(np.linalg.norm(self.dense_float(), 2))
        return csr_power_norm(self.csr_float())

    # -- exact application -----------------------------------------------------

    def apply_object(self, xm: list, tx: int) -> list:
        """Integer mantissas of W x + b given x mantissas at resolution tx.

        Output mantissas are at resolution (self.tau + tx).
        """
        acc = [int(b) << tx for b in self.bm.flat]
        for r, c, v in zip(self.rows, self.cols, self.vals):
            acc[int(r)] += int(v) * xm[int(c)]
        return acc

    def row_abs_sums(self) -> list:
        sums = [0] * self.shape[0]
        for r, v in zip(self.rows, self.vals):
            sums[int(r)] += abs(int(v))
        return sums


class ReluNet:
    """A ReLU network with exact parameters, a stored profile, and metadata."""

    def __init__(self, layers: Sequence[Layer], lam: float | None = None,
                 profile: ComplexityProfile | None = None, meta: dict | None = None):
        layers = list(layers)
        if not layers:
            raise UserInputError("a network needs at least one layer")
        for a, b in zip(layers, layers[1:]):
            if b.in_dim != a.out_dim:
                raise UserInputError(
                    f"layer width mismatch: {a.out_dim} -> {b.in_dim}")
        self.layers = layers
        if profile is None:
            if lam is None:
                lam = norm_product(layers)
            L, S, tau = structural_tuple(layers)
            profile = ComplexityProfile(L=L, S=S, lam=lam, tau=tau,
                                        d_in=layers[0].in_dim,
                                        d_out=layers[-1].out_dim)
        self.profile = profile
        self.meta = dict(meta or {})
        self.validate()

    # -- structure -----------------------------------------------------------

    @property
    def d_in(self) -> int:
        return self.layers[0].in_dim

    @property
    def d_out(self) -> int:
        return self.layers[-1].out_dim

    def validate(self):
        """Recompute (L, S, tau) from the layers and compare to the profile."""
        L, S, tau = structural_tuple(self.layers)
        p = self.profile
        if (L, S) != (p.L, p.S) or tau > p.tau:
            raise UserInputError(
                f"profile inconsistent: stored (L={p.L}, S={p.S}, tau={p.tau}), "
                f"recomputed (L={L}, S={S}, tau={tau})")
        if p.d_in != self.d_in or p.d_out != self.d_out:
            raise UserInputError("profile dimensions disagree with layers")

    def with_lam(self, lam: float) -> "ReluNet":
        """Same net with a (sharper, caller-justified) claimed Lipschitz bound."""
        p = self.profile
        prof = ComplexityProfile(L=p.L, S=p.S, lam=lam, tau=p.tau,
                                 d_in=p.d_in, d_out=p.d_out)
        return ReluNet(self.layers, profile=prof, meta=self.meta)

    # -- exact evaluation ------------------------------------------------------

    def eval_exact(self, x: Iterable, headroom_bits: int = DEFAULT_HEADROOM_BITS
                   ) -> list[FixedScalar]:
        xs = [v if isinstance(v, FixedScalar) else FixedScalar.from_fraction(_as_fraction(v))
              for v in x]
        if len(xs) != self.d_in:
            raise UserInputError(f"expected {self.d_in} inputs, got {len(xs)}")
        tx = max((v.tau for v in xs), default=0)
        xm = [v.mantissa << (tx - v.tau) for v in xs]
        for i, layer in enumerate(self.layers):
            acc = layer.apply_object(xm, tx)
            tx = tx + layer.tau
            worst = max((abs(v) for v in acc), default=0)
            if worst.bit_length() > headroom_bits:
                raise HeadroomExceeded(
                    f"layer {i}: mantissa needs {worst.bit_length()} bits "
                    f"(> headroom {headroom_bits})")
            if i < len(self.layers) - 1:
                xm = [v if v > 0 else 0 for v in acc]
            else:
                xm = acc
        return [FixedScalar(int(v), tx) for v in xm]

    def eval_exact_batch(self, X: np.ndarray, tau_x: int = 0,
                         headroom_bits: int = DEFAULT_HEADROOM_BITS):
        """Exact evaluation of many inputs at once.

        X: (n, d_in) integer mantissas at resolution tau_x.  Returns
        (Y, tau_out) with Y int64 mantissas when a rigorous a-priori bound
        rules out overflow, object mantissas otherwise.
        """
        X = np.asarray(X)
        if X.ndim != 2 or X.shape[1] != self.d_in:
            raise UserInputError(f"expected (n, {self.d_in}) inputs")
        in_bound = int(max((abs(int(v)) for v in X.flat), default=0))
        bounds, tau_out = self._mantissa_bounds(in_bound, tau_x)
        if max(bounds, default=0).bit_length() > headroom_bits:
            raise HeadroomExceeded(
                f"worst-case mantissa {max(bounds).bit_length()} bits "
                f"(> headroom {headroom_bits})")
        if max(bounds, default=0) < (1 << _INT64_SAFE_BITS):
            return self._eval_batch_int64(X.astype(np.int64), tau_x), tau_out
        return self._eval_batch_object(X, tau_x), tau_out

    def _mantissa_bounds(self, in_bound: int, tau_x: int) -> tuple[list[int], int]:
        bounds = []
        b = int(in_bound)
        tx = tau_x
        for layer in self.layers:
            bmax = max((abs(int(v)) for v in layer.bm.flat), default=0)
            b = max(layer.row_abs_sums(), default=0) * b + (bmax << tx)
            tx += layer.tau
            bounds.append(b)
        return bounds, tx

    def _eval_batch_int64(self, X: np.ndarray, tau_x: int) -> np.ndarray:
        A = np.ascontiguousarray(X.T)  # (d, n)
        tx = tau_x
        for i, layer in enumerate(self.layers):
            Z = layer.csr_int64().dot(A)
            Z += (layer.bm.astype(np.int64) << tx)[:, None]
            tx += layer.tau
            if i < len(self.layers) - 1:
                np.maximum(Z, 0, out=Z)
            A = Z
        return A.T

    def _eval_batch_object(self, X: np.ndarray, tau_x: int) -> np.ndarray:
        n = X.shape[0]
        out = []
        for i in range(n):
            xm = [int(v) for v in X[i]]
            tx = tau_x
            for j, layer in enumerate(self.layers):
                acc = layer.apply_object(xm, tx)
                tx += layer.tau
                if j < len(self.layers) - 1:
                    xm = [v if v > 0 else 0 for v in acc]
                else:
                    xm = acc
            out.append(xm)
        return np.array(out, dtype=object)

    def output_tau(self, tau_x: int = 0) -> int:
        return tau_x + sum(layer.tau for layer in self.layers)

    # -- float evaluation ------------------------------------------------------

    def eval_float(self, x: Sequence[float]) -> np.ndarray:
        return self.eval_float_batch(np.asarray(x, dtype=np.float64)[None, :])[0]

    def eval_float_batch(self, X: np.ndarray) -> np.ndarray:
        """IEEE-double forward pass with fixed per-layer reduction order."""
        A = np.ascontiguousarray(X, dtype=np.float64).T
        if A.ndim != 2 or A.shape[0] != self.d_in:
            raise UserInputError(f"expected (n, {self.d_in}) inputs")
        last = len(self.layers) - 1
        for i, layer in enumerate(self.layers):
            A = layer.csr_float().dot(A) + layer.bias_float()[:, None]
            if i < last:
                np.maximum(A, 0.0, out=A)
        return A.T

    def jacobian_at(self, x: np.ndarray) -> np.ndarray:
        """Exact Jacobian of the float net at x (a.e. defined, masks taken at x)."""
        a = np.asarray(x, dtype=np.float64)
        M = self.layers[0].csr_float().toarray()
        for layer_prev, layer in zip(self.layers[:-1], self.layers[1:]):
            z = layer_prev.csr_float().dot(a) + layer_prev.bias_float()
            mask = z > 0
            a = np.maximum(z, 0.0)
            M = layer.csr_float().dot(mask[:, None] * M)
        return M

    # -- serialization ---------------------------------------------------------

    SCHEMA = "relunet/1"

    def to_json_dict(self) -> dict:
        layers = []
        for layer in self.layers:
            entry = {"shape": list(layer.shape), "tau": layer.tau,
                     "biases": [{"m": int(v), "t": layer.tau} for v in layer.bm.flat]}
            if layer.shape[0] * layer.shape[1] <= _DENSE_ENTRY_LIMIT:
                dense = layer.dense_object()
                entry["weights"] = [{"m": int(v), "t": layer.tau} for v in dense.flat]
            else:
                entry["weights"] = {
                    "format": "coo",
                    "rows": [int(r) for r in layer.rows],
                    "cols": [int(c) for c in layer.cols],
                    "vals": [{"m": int(v), "t": layer.tau} for v in layer.vals.flat],
                }
            layers.append(entry)
        return {
            "schema": self.SCHEMA,
            "profile": self.profile.to_dict(),
            "layers": layers,
            "meta": _json_safe(self.meta),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ReluNet":
        if d.get("schema") != cls.SCHEMA:
            raise UserInputError(f"unsupported schema {d.get('schema')!r}")
        layers = []
        for spec in d["layers"]:
            rows_n, cols_n = spec["shape"]
            tau = spec["tau"]

            def _mant(ent):
                m, t = int(ent["m"]), int(ent["t"])
                if t > tau:
                    raise UserInputError("entry finer than its layer grid")
                return m << (tau - t)

            w = spec["weights"]
            if isinstance(w, dict):
                rows = [int(r) for r in w["rows"]]
                cols = [int(c) for c in w["cols"]]
                vals = [_mant(e) for e in w["vals"]]
            else:
                rows, cols, vals = [], [], []
                for i, ent in enumerate(w):
                    m = _mant(ent)
                    if m != 0:
                        r, c = divmod(i, cols_n)
                        rows.append(r)
                        cols.append(c)
                        vals.append(m)
            bm = np.array([_mant(e) for e in spec["biases"]], dtype=object)
            layers.append(Layer.from_coo(rows, cols, vals, (rows_n, cols_n), bm, tau))
        return cls(layers, profile=ComplexityProfile.from_dict(d["profile"]),
                   meta=d.get("meta", {}))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True, separators=(",", ":"))

    @classmethod
    def load(cls, path) -> "ReluNet":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, Fraction):
        return {"fraction": [obj.numerator, obj.denominator]}
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return _json_safe(obj.tolist())
    return obj


# -- layer combinators (exact, COO-level) --------------------------------------


def layer_vstack(layers: Sequence[Layer]) -> Layer:
    """Stack layers sharing the input space: rows concatenate."""
    if len({layer.in_dim for layer in layers}) != 1:
        raise UserInputError("vstack needs a common input dimension")
    tau = max(layer.tau for layer in layers)
    layers = [layer.retuned(tau) for layer in layers]
    rows, cols, vals, bms = [], [], [], []
    off = 0
    for layer in layers:
        rows.extend(int(r) + off for r in layer.rows)
        cols.extend(int(c) for c in layer.cols)
        vals.extend(int(v) for v in layer.vals.flat)
        bms.extend(int(v) for v in layer.bm.flat)
        off += layer.out_dim
    return Layer.from_coo(rows, cols, vals, (off, layers[0].in_dim),
                          np.array(bms, dtype=object), tau)


def layer_blockdiag(layers: Sequence[Layer]) -> Layer:
    """Block-diagonal stack: disjoint input and output blocks."""
    tau = max(layer.tau for layer in layers)
    layers = [layer.retuned(tau) for layer in layers]
    rows, cols, vals, bms = [], [], [], []
    roff = coff = 0
    for layer in layers:
        rows.extend(int(r) + roff for r in layer.rows)
        cols.extend(int(c) + coff for c in layer.cols)
        vals.extend(int(v) for v in layer.vals.flat)
        bms.extend(int(v) for v in layer.bm.flat)
        roff += layer.out_dim
        coff += layer.in_dim
    return Layer.from_coo(rows, cols, vals, (roff, coff),
                          np.array(bms, dtype=object), tau)


def structural_tuple(layers: Sequence[Layer]) -> tuple[int, int, int]:
    L = len(layers)
    S = sum(layer.out_dim for layer in layers[:-1])
    tau = max(layer.tau for layer in layers)
    return L, S, tau


def norm_product(layers: Sequence[Layer]) -> float:
    prod = 1.0
    for layer in layers:
        prod *= layer.operator_norm()
    return prod * _NORM_GUARD


def csr_power_norm(W: sp.csr_matrix, iters: int = 200, seed: int = 0) -> float:
    """Spectral norm of a sparse matrix by power iteration (deterministic start)."""
    rng = np.random.Generator(np.random.Philox(seed))
    v = rng.standard_normal(W.shape[1])
    nv = np.linalg.norm(v)
    if nv == 0.0 or W.nnz == 0:
        return 0.0
    v /= nv
    WT = W.T.tocsr()
    for _ in range(iters):
        u = W.dot(v)
        nu = np.linalg.norm(u)
        if nu == 0.0:
            return 0.0
        w = WT.dot(u / nu)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
    return float(np.linalg.norm(W.dot(v)))


def power_iteration_norm(W: np.ndarray, iters: int = 128, seed: int = 0) -> float:
    """Spectral norm estimate by power iteration (deterministic start vector)."""
    return csr_power_norm(sp.csr_matrix(np.asarray(W, dtype=np.float64)), iters, seed)


# -- spec-named module-level ops ---------------------------------------------


def eval_exact(net: ReluNet, x, headroom_bits: int = DEFAULT_HEADROOM_BITS):
    return net.eval_exact(x, headroom_bits=headroom_bits)


def eval_float(net: ReluNet, x):
    return net.eval_float(x)


def empirical_lipschitz(net: ReluNet, n_pairs: int = 64, rng=None) -> float:
    """Max secant ratio ||f(x)-f(y)|| / ||x-y|| over sampled pairs.

    Half the pairs are random Gaussian pairs; the rest are local probes along
    the top singular direction of the exact Jacobian at random anchors, which
    is what makes the estimate sharp for (piecewise) linear nets.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    if isinstance(rng, (int, np.integer)):
        rng = np.random.Generator(np.random.Philox(int(rng)))
    d = net.d_in
    best = 0.0
    n_random = max(1, n_pairs // 2)
    X = rng.standard_normal((n_random, d))
    Y = rng.standard_normal((n_random, d))
    FX = net.eval_float_batch(X)
    FY = net.eval_float_batch(Y)
    num = np.linalg.norm(FX - FY, axis=1)
    den = np.linalg.norm(X - Y, axis=1)
    ok = den > 0
    if np.any(ok):
        best = float(np.max(num[ok] / den[ok]))
    n_anchor = max(1, min(8, n_pairs - n_random))
    for _ in range(n_anchor):
        x = rng.standard_normal(d)
        J = net.jacobian_at(x)
        s = np.linalg.svd(J, compute_uv=False)
        if s.size:
            best = max(best, float(s[0]))
    return best
