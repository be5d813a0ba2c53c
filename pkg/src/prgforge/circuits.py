"""Linear threshold circuits and their exact translation to ReLU networks.

A gate computes sgn(<w, x> - b) with dyadic w and b, where sgn(0) = +1.
Circuits are DAGs over a shared input layer; wiring is index-based: indices
0..n-1 name circuit inputs and n+i names the output of gate i.  The last
declared output gate is the circuit value.

Translation to ReLU uses the clamp identity sgn(z) = h_xi(z) for |z| >= xi,
valid whenever xi is below the smallest pre-activation magnitude any gate can
see.  Each gate becomes one (phi(qz+1), phi(qz-1)) pair and consecutive layers
are merged across the (1,-1)/bias-(-1) readout, so a layered depth-D circuit
with S gates becomes a ReluNet with D+1 weight matrices and 2S hidden units.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from math import ceil

import numpy as np

from .errors import UserInputError
from .relunet import ComplexityProfile, Layer, ReluNet, norm_product

MARGIN_ENUM_FANIN = 20


def _dyadic(value) -> Fraction:
    q = value if isinstance(value, Fraction) else Fraction(value)
    if q.denominator & (q.denominator - 1):
        raise UserInputError(f"{value!r} is not dyadic")
    return q


@dataclass(frozen=True)
class Gate:
    inputs: tuple
    weights: tuple
    bias: Fraction

    def __post_init__(self):
        if len(self.inputs) != len(self.weights):
            raise UserInputError("one weight per input wire required")
        object.__setattr__(self, "inputs", tuple(int(i) for i in self.inputs))
        object.__setattr__(self, "weights",
                           tuple(_dyadic(w) for w in self.weights))
        object.__setattr__(self, "bias", _dyadic(self.bias))

    @property
    def fanin(self) -> int:
        return len(self.inputs)

    def tau(self) -> int:
        t = 0
        for q in self.weights + (self.bias,):
            t = max(t, q.denominator.bit_length() - 1)
        return t


class LtfCircuit:
    """Single-output threshold circuit; depth/size/wires read off the DAG."""

    def __init__(self, n: int, gates, output: int | None = None):
        if n < 1:
            raise UserInputError("need at least one circuit input")
        self.n = int(n)
        self.gates = tuple(g if isinstance(g, Gate) else Gate(*g)
                           for g in gates)
        if not self.gates:
            raise UserInputError("circuit needs at least one gate")
        self.output = len(self.gates) - 1 if output is None else int(output)
        if not 0 <= self.output < len(self.gates):
            raise UserInputError("output index out of range")
        for g in self.gates:
            for src in g.inputs:
                if not 0 <= src < self.n + len(self.gates):
                    raise UserInputError(f"wire source {src} out of range")
        self._order = self._topo_order()
        self._levels = self._compute_levels()

    # -- structure -------------------------------------------------------------------

    def _topo_order(self):
        n, gates = self.n, self.gates
        state = [0] * len(gates)  # 0 new, 1 open, 2 done
        order = []

        def visit(i):
            stack = [(i, 0)]
            while stack:
                node, ptr = stack.pop()
                if ptr == 0:
                    if state[node] == 1:
                        raise UserInputError("cycle detected in circuit wiring")
                    if state[node] == 2:
                        continue
                    state[node] = 1
                preds = [s - n for s in gates[node].inputs if s >= n]
                while ptr < len(preds) and state[preds[ptr]] == 2:
                    ptr += 1
                if ptr < len(preds):
                    if state[preds[ptr]] == 1:
                        raise UserInputError("cycle detected in circuit wiring")
                    stack.append((node, ptr))
                    stack.append((preds[ptr], 0))
                else:
                    state[node] = 2
                    order.append(node)

        for i in range(len(gates)):
            if state[i] == 0:
                visit(i)
        return tuple(order)

    def _compute_levels(self):
        levels = [0] * len(self.gates)
        for i in self._order:
            lv = 1
            for src in self.gates[i].inputs:
                if src >= self.n:
                    lv = max(lv, levels[src - self.n] + 1)
            levels[i] = lv
        return tuple(levels)

    @property
    def depth(self) -> int:
        return self._levels[self.output]

    @property
    def size(self) -> int:
        return len(self.gates)

    @property
    def wires(self) -> int:
        return sum(g.fanin for g in self.gates)

    def is_layered(self) -> bool:
        for i, g in enumerate(self.gates):
            want = self._levels[i] - 1
            for src in g.inputs:
                lv = 0 if src < self.n else self._levels[src - self.n]
                if lv != want:
                    return False
        return self._levels[self.output] == max(self._levels)

    # -- evaluation -------------------------------------------------------------------

    def evaluate(self, x) -> int:
        return int(self.evaluate_batch(np.asarray(x, np.int8)[None, :])[0])

    def evaluate_batch(self, X: np.ndarray) -> np.ndarray:
        """Exact sign evaluation on +-1 rows via integer-scaled arithmetic."""
        X = np.asarray(X)
        if X.ndim != 2 or X.shape[1] != self.n:
            raise UserInputError(f"expected (n_rows, {self.n}) input")
        if not np.all(np.abs(X) == 1):
            raise UserInputError("inputs must be +-1 valued")
        vals = np.empty((X.shape[0], self.n + len(self.gates)), dtype=np.int64)
        vals[:, :self.n] = X
        for i in self._order:
            g = self.gates[i]
            t = g.tau()
            z = np.zeros(X.shape[0], dtype=np.int64)
            for src, w in zip(g.inputs, g.weights):
                z += int(w * (1 << t)) * vals[:, src]
            z -= int(g.bias * (1 << t))
            vals[:, self.n + i] = np.where(z >= 0, 1, -1)
        return vals[:, self.n + self.output].astype(np.int8)

    # -- margins ----------------------------------------------------------------------

    def gate_margin(self, i: int):
        """(margin, method): smallest |<w,x>-b| over all +-1 input patterns
        when fanin permits enumeration, else the 2^-tau grid granularity
        (which assumes no pattern lands exactly on the threshold)."""
        g = self.gates[i]
        t = g.tau()
        if g.fanin == 0:
            return abs(-g.bias), "enumeration"
        if g.fanin <= MARGIN_ENUM_FANIN:
            mant = np.array([int(w * (1 << t)) for w in g.weights],
                            dtype=np.int64)
            shifts = np.arange(g.fanin - 1, -1, -1, dtype=np.uint64)
            pats = ((np.arange(1 << g.fanin, dtype=np.uint64)[:, None]
                     >> shifts) & 1).astype(np.int64) * 2 - 1
            z = pats @ mant - int(g.bias * (1 << t))
            return Fraction(int(np.min(np.abs(z))), 1 << t), "enumeration"
        return Fraction(1, 1 << t), "granularity"

    def min_margin(self):
        margin = None
        methods = set()
        for i in range(len(self.gates)):
            m, how = self.gate_margin(i)
            methods.add(how)
            margin = m if margin is None else min(margin, m)
        return margin, ("enumeration" if methods == {"enumeration"}
                        else "granularity")

    # -- serialization ----------------------------------------------------------------

    SCHEMA = "ltf-circuit/1"

    def to_json_dict(self) -> dict:
        return {
            "schema": self.SCHEMA,
            "n": self.n,
            "output": self.output,
            "gates": [{
                "inputs": list(g.inputs),
                "weights": [[w.numerator, w.denominator] for w in g.weights],
                "bias": [g.bias.numerator, g.bias.denominator],
            } for g in self.gates],
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "LtfCircuit":
        if doc.get("schema") != cls.SCHEMA:
            raise UserInputError(f"expected schema {cls.SCHEMA}")
        gates = [Gate(tuple(g["inputs"]),
                      tuple(Fraction(*w) for w in g["weights"]),
                      Fraction(*g["bias"])) for g in doc["gates"]]
        return cls(doc["n"], gates, doc.get("output"))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True,
                      separators=(",", ":"))

    @classmethod
    def load(cls, path) -> "LtfCircuit":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


def layer_circuit(c: LtfCircuit) -> LtfCircuit:
    """Insert pass-through gates (w=(1), b=0) so every wire spans exactly one
    level; the function is unchanged because sgn is the identity on +-1."""
    levels = c._levels
    relay: dict[tuple[int, int], int] = {}  # (source, level) -> gate index
    gates: list[Gate] = []
    remap: dict[int, int] = {}

    def at_level(src: int, lv: int) -> int:
        src_lv = 0 if src < c.n else levels[src - c.n]
        base = src if src < c.n else c.n + remap[src - c.n]
        if lv == src_lv:
            return base
        key = (src, lv)
        if key not in relay:
            below = at_level(src, lv - 1)
            gates.append(Gate((below,), (Fraction(1),), Fraction(0)))
            relay[key] = c.n + len(gates) - 1
        return relay[key]

    for i in sorted(range(len(c.gates)), key=lambda i: levels[i]):
        g = c.gates[i]
        wired = tuple(at_level(src, levels[i] - 1) for src in g.inputs)
        gates.append(Gate(wired, g.weights, g.bias))
        remap[i] = len(gates) - 1
    return LtfCircuit(c.n, gates, remap[c.output])


def ltf_to_relu(c: LtfCircuit, xi_prime) -> ReluNet:
    """Compile a layered circuit to a ReluNet that matches it on {+-1}^n.

    Refuses when xi_prime is not strictly below the minimum gate margin:
    below it, every clamp h sits in its saturated +-1 region, so the net
    reproduces each sign exactly.  Internally the slope is q = ceil(1/xi')
    so that all entries stay dyadic.
    """
    if not c.is_layered():
        raise UserInputError("circuit must be layered (use layer_circuit)")
    xi_prime = Fraction(xi_prime)
    if xi_prime <= 0:
        raise UserInputError("xi_prime must be positive")
    margin, method = c.min_margin()
    if margin == 0:
        raise UserInputError(
            "some gate can land exactly on its threshold; translation "
            "to a clamp network would change the function")
    if xi_prime >= margin:
        raise UserInputError(
            f"xi_prime {xi_prime} is not below the minimum gate margin "
            f"{margin} ({method}); the clamp would leave its saturated region")
    q = ceil(1 / xi_prime)

    by_level: dict[int, list[int]] = {}
    for i, lv in enumerate(c._levels):
        by_level.setdefault(lv, []).append(i)
    depth = c.depth
    if sorted(by_level) != list(range(1, depth + 1)):
        raise UserInputError("layered circuit has empty levels")
    # position of each gate's +-1 value inside its level's output vector
    pos = {i: p for lv in by_level for p, i in enumerate(by_level[lv])}

    def column(src: int, prev_level: int) -> int:
        if prev_level == 0:
            return src
        return pos[src - c.n]

    layers = []
    for lv in range(1, depth + 1):
        members = by_level[lv]
        if lv == 1:
            in_dim = c.n
        else:
            in_dim = 2 * len(by_level[lv - 1])
        W = [[Fraction(0)] * in_dim for _ in range(2 * len(members))]
        b = [Fraction(0)] * (2 * len(members))
        for p, i in enumerate(members):
            g = c.gates[i]
            shift = Fraction(0)
            for src, w in zip(g.inputs, g.weights):
                col = column(src, lv - 1)
                if lv == 1:
                    W[2 * p][col] = q * w
                    W[2 * p + 1][col] = q * w
                else:
                    # previous layer exposes (phi(qz+1), phi(qz-1)) pairs;
                    # gate value is their difference minus 1
                    W[2 * p][2 * col] = q * w
                    W[2 * p][2 * col + 1] = -q * w
                    W[2 * p + 1][2 * col] = q * w
                    W[2 * p + 1][2 * col + 1] = -q * w
                    shift += q * w
            b[2 * p] = Fraction(1) - q * g.bias - shift
            b[2 * p + 1] = Fraction(-1) - q * g.bias - shift
        layers.append(Layer.from_entries(W, b))
    out_row = [Fraction(0)] * (2 * len(by_level[depth]))
    out_row[2 * pos[c.output]] = Fraction(1)
    out_row[2 * pos[c.output] + 1] = Fraction(-1)
    out = Layer.from_entries([out_row], [Fraction(-1)])
    layers.append(out)

    hidden = sum(2 * len(by_level[lv]) for lv in range(1, depth + 1))
    tau = max(layer.tau for layer in layers)
    profile = ComplexityProfile(L=depth + 1, S=hidden,
                                lam=norm_product(layers), tau=tau,
                                d_in=c.n, d_out=1)
    net = ReluNet(layers, profile=profile, meta={
        "kind": "ltf-circuit",
        "xi_prime": xi_prime,
        "xi_effective": Fraction(1, q),
        "margin": margin,
        "margin_method": method,
        "circuit_depth": depth,
        "circuit_size": c.size,
    })
    net.validate()
    return net


def random_layered_circuit(n: int, depth: int, width: int, rng,
                           fanin: int | None = None) -> LtfCircuit:
    """Random layered circuit with half-integer biases, so every gate margin
    is at least 1/2 and any xi_prime < 1/2 compiles."""
    from .samples import make_rng
    rng = make_rng(rng)
    if depth < 1 or width < 1:
        raise UserInputError("depth and width must be >= 1")
    gates: list[Gate] = []
    prev = list(range(n))
    for lv in range(1, depth + 1):
        k = 1 if lv == depth else int(rng.integers(1, width + 1))
        nxt = []
        for _ in range(k):
            f = len(prev) if fanin is None else min(fanin, len(prev))
            picks = rng.choice(len(prev), size=f, replace=False)
            srcs = tuple(prev[int(p)] for p in np.sort(picks))
            ws = tuple(Fraction(int(v)) for v in rng.integers(-3, 4, size=f))
            bias = Fraction(int(rng.integers(-2 * f, 2 * f + 1)) * 2 + 1, 2)
            gates.append(Gate(srcs, ws, bias))
            nxt.append(n + len(gates) - 1)
        # layered wiring must draw only from the previous level
        prev = nxt
    return LtfCircuit(n, gates, len(gates) - 1)
