"""
Solver-agnostic mixed-integer linear model.
Variables, linear expressions with operator overloading, constraints and
an objective, plus matrix export and an independent constraint evaluator.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

import numpy as np
from scipy import sparse

from ..utils.errors import InvalidBounds

logger = logging.getLogger(__name__)

# Feasibility and integrality tolerances
EPS_FEAS = 1e-6
EPS_INT = 1e-6

SENSES = ("<=", ">=", "==")

Number = Union[int, float]


class Variable:
    """A continuous or binary decision variable registered in a MipModel"""

    __slots__ = ("index", "name", "lb", "ub", "is_binary")

    def __init__(self, index: int, name: str, lb: float, ub: float, is_binary: bool):
        self.index = index
        self.name = name
        self.lb = lb
        self.ub = ub
        self.is_binary = is_binary

    @property
    def is_fixed(self) -> bool:
        return self.lb == self.ub

    def to_expr(self) -> "LinExpr":
        return LinExpr({self.index: 1.0})

    def __hash__(self):
        return hash(("var", self.index))

    def __repr__(self):
        kind = "bin" if self.is_binary else "cont"
        return f"Variable({self.name}, {kind}, [{self.lb}, {self.ub}])"

    # Arithmetic delegates to LinExpr
    def __add__(self, other):
        return self.to_expr() + other

    def __radd__(self, other):
        return self.to_expr() + other

    def __sub__(self, other):
        return self.to_expr() - other

    def __rsub__(self, other):
        return (-self.to_expr()) + other

    def __mul__(self, coeff):
        return self.to_expr() * coeff

    def __rmul__(self, coeff):
        return self.to_expr() * coeff

    def __neg__(self):
        return -self.to_expr()

    def __le__(self, other):
        return self.to_expr() <= other

    def __ge__(self, other):
        return self.to_expr() >= other

    def __eq__(self, other):
        return self.to_expr() == other


class LinExpr:
    """Sparse linear expression: sum of coefficient * variable plus a constant"""

    __slots__ = ("terms", "constant")

    def __init__(self, terms: Optional[Dict[int, float]] = None, constant: float = 0.0):
        self.terms: Dict[int, float] = dict(terms) if terms else {}
        self.constant = float(constant)

    @classmethod
    def of(cls, value) -> "LinExpr":
        if isinstance(value, LinExpr):
            return value
        if isinstance(value, Variable):
            return value.to_expr()
        if isinstance(value, (int, float, np.floating, np.integer)):
            return cls(constant=float(value))
        raise TypeError(f"Cannot build a linear expression from {type(value).__name__}")

    def copy(self) -> "LinExpr":
        return LinExpr(self.terms, self.constant)

    def add_term(self, var: Variable, coeff: float) -> "LinExpr":
        """In-place accumulation, used when building long sums"""
        if coeff:
            self.terms[var.index] = self.terms.get(var.index, 0.0) + float(coeff)
        return self

    def __add__(self, other):
        other = LinExpr.of(other)
        result = self.copy()
        for idx, coeff in other.terms.items():
            result.terms[idx] = result.terms.get(idx, 0.0) + coeff
        result.constant += other.constant
        return result

    def __radd__(self, other):
        return self + other

    def __sub__(self, other):
        return self + (-LinExpr.of(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, coeff):
        if not isinstance(coeff, (int, float, np.floating, np.integer)):
            raise TypeError("Only scalar multiplication keeps an expression linear")
        coeff = float(coeff)
        return LinExpr({k: v * coeff for k, v in self.terms.items()}, self.constant * coeff)

    def __rmul__(self, coeff):
        return self * coeff

    def __neg__(self):
        return self * -1.0

    def __le__(self, other):
        return Constraint.build(self, "<=", other)

    def __ge__(self, other):
        return Constraint.build(self, ">=", other)

    def __eq__(self, other):
        return Constraint.build(self, "==", other)

    __hash__ = None

    def __repr__(self):
        parts = [f"{c:+g}*x{i}" for i, c in self.terms.items()]
        return f"LinExpr({' '.join(parts)} {self.constant:+g})"


def lin_sum(items: Iterable) -> LinExpr:
    """Sum of variables/expressions/numbers without quadratic copying"""
    total = LinExpr()
    for item in items:
        if isinstance(item, Variable):
            total.add_term(item, 1.0)
        elif isinstance(item, LinExpr):
            for idx, coeff in item.terms.items():
                total.terms[idx] = total.terms.get(idx, 0.0) + coeff
            total.constant += item.constant
        else:
            total.constant += float(item)
    return total


@dataclass
class Constraint:
    """Linear constraint normalized to: sum(terms) <sense> rhs"""
    terms: Dict[int, float]
    sense: str
    rhs: float
    name: Optional[str] = None

    @classmethod
    def build(cls, lhs, sense: str, rhs) -> "Constraint":
        if sense not in SENSES:
            raise ValueError(f"Unknown constraint sense: {sense}")
        expr = LinExpr.of(lhs) - LinExpr.of(rhs)
        terms = {k: v for k, v in expr.terms.items() if v != 0.0}
        return cls(terms=terms, sense=sense, rhs=-expr.constant)


@dataclass
class ModelArrays:
    """Matrix form of a model, objective always expressed as minimization"""
    c: np.ndarray
    c0: float
    a_ub: sparse.csr_matrix
    b_ub: np.ndarray
    a_eq: sparse.csr_matrix
    b_eq: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    binary: np.ndarray
    sign: float


@dataclass
class MipModel:
    name: str = "model"
    variables: List[Variable] = field(default_factory=list)
    constraints: List[Constraint] = field(default_factory=list)
    objective: LinExpr = field(default_factory=LinExpr)
    sense: str = "min"
    _by_name: Dict[str, Variable] = field(default_factory=dict, repr=False)

    # =========================================================================
    # Variables
    # =========================================================================

    def add_var(self, name: str, lb: float = 0.0, ub: float = math.inf) -> Variable:
        return self._register(name, float(lb), float(ub), False)

    def add_binary(self, name: str, fixed: Optional[int] = None) -> Variable:
        """Add a binary variable, optionally fixed to 0 or 1"""
        if fixed is None:
            return self._register(name, 0.0, 1.0, True)
        return self._register(name, float(fixed), float(fixed), True)

    def _register(self, name: str, lb: float, ub: float, is_binary: bool) -> Variable:
        if name in self._by_name:
            raise ValueError(f"Duplicate variable name: {name}")
        if lb > ub:
            raise InvalidBounds(f"Variable {name} has lb {lb} > ub {ub}")
        var = Variable(len(self.variables), name, lb, ub, is_binary)
        self.variables.append(var)
        self._by_name[name] = var
        return var

    def var(self, name: str) -> Variable:
        return self._by_name[name]

    def has_var(self, name: str) -> bool:
        return name in self._by_name

    def fix(self, var: Variable, value: float):
        """Pin a variable to a value by collapsing its bounds"""
        var.lb = var.ub = float(value)

    # =========================================================================
    # Constraints and objective
    # =========================================================================

    def add_constraint(self, constraint, sense: Optional[str] = None, rhs=None,
                       name: Optional[str] = None) -> Constraint:
        """Add either a prebuilt Constraint or (lhs, sense, rhs)"""
        if not isinstance(constraint, Constraint):
            constraint = Constraint.build(constraint, sense, 0.0 if rhs is None else rhs)
        for idx in constraint.terms:
            if idx >= len(self.variables):
                raise ValueError(f"Constraint references unregistered variable x{idx}")
        constraint.name = name or constraint.name or f"c{len(self.constraints)}"
        self.constraints.append(constraint)
        return constraint

    def minimize(self, expr):
        self.objective = LinExpr.of(expr).copy()
        self.sense = "min"

    def maximize(self, expr):
        self.objective = LinExpr.of(expr).copy()
        self.sense = "max"

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    @property
    def num_binaries(self) -> int:
        return sum(1 for v in self.variables if v.is_binary)

    @property
    def num_free_binaries(self) -> int:
        return sum(1 for v in self.variables if v.is_binary and not v.is_fixed)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def summary(self) -> dict:
        return {
            "name": self.name,
            "variables": self.num_vars,
            "binaries": self.num_binaries,
            "free_binaries": self.num_free_binaries,
            "constraints": self.num_constraints,
        }

    # =========================================================================
    # Evaluation
    # =========================================================================

    def value_vector(self, values: Mapping[str, float]) -> np.ndarray:
        x = np.zeros(self.num_vars)
        for var in self.variables:
            x[var.index] = float(values.get(var.name, 0.0))
        return x

    def evaluate(self, expr, values: Union[Mapping[str, float], np.ndarray]) -> float:
        expr = LinExpr.of(expr)
        x = values if isinstance(values, np.ndarray) else self.value_vector(values)
        return expr.constant + sum(coeff * x[idx] for idx, coeff in expr.terms.items())

    def objective_value(self, values) -> float:
        return self.evaluate(self.objective, values)

    def violations(self, values, tol: float = EPS_FEAS) -> List[Tuple[str, float]]:
        """Independent audit of a candidate point: (what, amount) above tolerance"""
        x = values if isinstance(values, np.ndarray) else self.value_vector(values)
        found = []
        for var in self.variables:
            v = x[var.index]
            if v < var.lb - tol:
                found.append((f"lb:{var.name}", var.lb - v))
            if v > var.ub + tol:
                found.append((f"ub:{var.name}", v - var.ub))
            if var.is_binary and min(abs(v), abs(v - 1.0)) > EPS_INT:
                found.append((f"int:{var.name}", min(abs(v), abs(v - 1.0))))
        for con in self.constraints:
            lhs = sum(coeff * x[idx] for idx, coeff in con.terms.items())
            scale = max(1.0, abs(con.rhs))
            if con.sense == "<=":
                excess = lhs - con.rhs
            elif con.sense == ">=":
                excess = con.rhs - lhs
            else:
                excess = abs(lhs - con.rhs)
            if excess > tol * scale:
                found.append((con.name, excess))
        return found

    # =========================================================================
    # Export
    # =========================================================================

    def to_arrays(self) -> ModelArrays:
        n = self.num_vars
        sign = 1.0 if self.sense == "min" else -1.0
        c = np.zeros(n)
        for idx, coeff in self.objective.terms.items():
            c[idx] = sign * coeff

        rows_ub, rows_eq = [], []
        for con in self.constraints:
            if con.sense == "<=":
                rows_ub.append((con.terms, con.rhs))
            elif con.sense == ">=":
                rows_ub.append(({k: -v for k, v in con.terms.items()}, -con.rhs))
            else:
                rows_eq.append((con.terms, con.rhs))

        return ModelArrays(
            c=c,
            c0=sign * self.objective.constant,
            a_ub=_to_csr(rows_ub, n),
            b_ub=np.array([r for _, r in rows_ub], dtype=float),
            a_eq=_to_csr(rows_eq, n),
            b_eq=np.array([r for _, r in rows_eq], dtype=float),
            lb=np.array([v.lb for v in self.variables], dtype=float),
            ub=np.array([v.ub for v in self.variables], dtype=float),
            binary=np.array([v.is_binary for v in self.variables], dtype=bool),
            sign=sign,
        )

    def to_lp(self) -> str:
        """Render the model in LP-file text for debugging"""
        def fmt(terms: Dict[int, float]) -> str:
            if not terms:
                return "0"
            parts = []
            for idx, coeff in terms.items():
                sign = "-" if coeff < 0 else "+"
                parts.append(f"{sign} {abs(coeff):.12g} {self.variables[idx].name}")
            text = " ".join(parts)
            return text[2:] if text.startswith("+ ") else text

        lines = ["Minimize" if self.sense == "min" else "Maximize"]
        obj = fmt(self.objective.terms) if self.objective.terms else "0"
        if self.objective.constant:
            obj += f" + {self.objective.constant:.12g} __const"
        lines.append(f" obj: {obj}")
        lines.append("Subject To")
        sense_text = {"<=": "<=", ">=": ">=", "==": "="}
        for con in self.constraints:
            lines.append(f" {con.name}: {fmt(con.terms)} {sense_text[con.sense]} {con.rhs:.12g}")
        if self.objective.constant:
            lines.append(" __const_fix: __const = 1")
        lines.append("Bounds")
        for var in self.variables:
            if var.is_binary and not var.is_fixed:
                continue
            ub = "+inf" if math.isinf(var.ub) else f"{var.ub:.12g}"
            lb = "-inf" if math.isinf(var.lb) else f"{var.lb:.12g}"
            lines.append(f" {lb} <= {var.name} <= {ub}")
        binaries = [v.name for v in self.variables if v.is_binary and not v.is_fixed]
        if binaries:
            lines.append("Binary")
            lines.extend(f" {name}" for name in binaries)
        lines.append("End")
        return "\n".join(lines) + "\n"


def _to_csr(rows: List[Tuple[Dict[int, float], float]], n: int) -> sparse.csr_matrix:
    data, indices, indptr = [], [], [0]
    for terms, _ in rows:
        for idx, coeff in terms.items():
            indices.append(idx)
            data.append(coeff)
        indptr.append(len(indices))
    return sparse.csr_matrix((data, indices, indptr), shape=(len(rows), n))
