"""Sparse exact Gaussian elimination.

Rows and vectors are dicts column -> coefficient.  Coefficients are any
exact field elements (Fraction, or elements of a sympy domain).
"""

from __future__ import annotations


def _axpy(row, f, other):
    # row - f * other, in place
    for k, v in other.items():
        nv = row.get(k, 0) - f * v
        if nv == 0:
            row.pop(k, None)
        else:
            row[k] = nv


class Echelon:
    """Incrementally maintained reduced row echelon form.

    Each stored row has a pivot column whose coefficient is 1; the pivot
    does not occur in any other stored row.  Rows can carry an attached
    payload vector (for tracking combinations).
    """

    def __init__(self, order=None):
        self.rows = {}  # pivot -> (row, payload)
        self.order = order  # key function choosing the pivot column

    def _pivot(self, row):
        if self.order is None:
            return min(row)
        return min(row, key=self.order)

    def reduce(self, row, payload=None):
        row = dict(row)
        payload = dict(payload) if payload is not None else None
        changed = True
        while changed:
            changed = False
            for k in list(row):
                if k in self.rows and k in row:
                    f = row[k]
                    prow, ppay = self.rows[k]
                    _axpy(row, f, prow)
                    if payload is not None and ppay is not None:
                        _axpy(payload, f, ppay)
                    changed = True
        return row, payload

    def add(self, row, payload=None):
        """Insert row; return True if it was independent."""
        row, payload = self.reduce(row, payload)
        if not row:
            return False
        piv = self._pivot(row)
        inv = 1 / row[piv]
        row = {k: v * inv for k, v in row.items()}
        if payload is not None:
            payload = {k: v * inv for k, v in payload.items()}
        for p, (r, pay) in list(self.rows.items()):
            if piv in r:
                f = r[piv]
                _axpy(r, f, row)
                if pay is not None and payload is not None:
                    _axpy(pay, f, payload)
        self.rows[piv] = (row, payload)
        return True

    @property
    def rank(self):
        return len(self.rows)


def solve(columns, target):
    """Find coefficients x with sum_j x_j columns[j] == target.

    columns: list of sparse vectors.  Returns dict j -> x_j or None.
    """
    ech = Echelon()
    for j, col in enumerate(columns):
        ech.add(col, {j: 1})
    rest, pay = ech.reduce(target, {})
    if rest:
        return None
    # target - sum pay_j col_j ... reduce subtracts; coefficients are -pay
    return {j: -v for j, v in pay.items() if v != 0}


def nullspace(columns):
    """Basis of {x : sum_j x_j columns[j] = 0} as sparse dicts."""
    ech = Echelon()
    out = []
    for j, col in enumerate(columns):
        row, pay = ech.reduce(col, {j: 1})
        if not row:
            out.append({k: v for k, v in pay.items() if v != 0})
        else:
            ech.add(col, {j: 1})
    return out


def rank(vectors):
    ech = Echelon()
    for v in vectors:
        ech.add(v)
    return ech.rank
