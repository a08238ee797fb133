"""Exact checks of the algebraic identities behind the extension formula.

Every function here evaluates a partial multilinear map at explicitly
constructed points and compares vectors over F_p. A point missing from the
map's domain is reported as :class:`PreconditionFailed`, because each identity
is only claimed when all of its evaluation points are in the domain.
"""

from __future__ import annotations

import itertools
from typing import Sequence

from .errors import PreconditionFailed
from .field import inv_mod
from .extend import PartialMultilinearMap, proper_subsets, vadd, vscale, vsub
from .forms import MultilinearForm, Point, ominus
from .paths import GoodSequence
from .variety import Variety


def _lin(p: int, *terms) -> tuple:
    """Sum of c * vec over (c, vec) pairs."""
    acc = None
    for c, v in terms:
        t = vscale(c % p, v, p)
        acc = t if acc is None else vadd(acc, t, p)
    return acc


def _vec(a: Sequence[int], b: Sequence[int], ca: int, cb: int, p: int) -> tuple:
    return tuple((ca * s + cb * t) % p for s, t in zip(a, b))


def _at(phi: PartialMultilinearMap, x: Point, label: str) -> tuple:
    if x not in phi.table:
        raise PreconditionFailed(f"{label} = {x} is outside the domain of phi")
    return phi.table[x]


def splitting_hypotheses(B: Variety, rho: MultilinearForm, x, y, z, w, u, v) -> None:
    """Raise PreconditionFailed naming the first pair that breaks the hypotheses.

    All nine pairs of {x, z, u} x {y, w, v} must lie in B; otherwise the
    evaluation points of the identities can leave B even when rho behaves.
    """
    names = {"x": x, "z": z, "u": u}, {"y": y, "w": w, "v": v}
    diagonal = {("x", "y"), ("z", "w"), ("u", "v")}
    for a, b in itertools.product(*[list(n) for n in names]):
        pt = (names[0][a], names[1][b])
        val = rho.evaluate(pt)
        want = 1 if (a, b) in diagonal else 0
        if val != want:
            raise PreconditionFailed(f"rho({a}, {b}) = {val}, expected {want}")
        if not B.contains(pt):
            raise PreconditionFailed(f"({a}, {b}) is not in B")


def verify_splitting_identity(phi: PartialMultilinearMap, B: Variety, rho: MultilinearForm,
                              x, y, z, w, u, v, ls: Sequence[int] | None = None) -> bool:
    """Check both three-point splitting identities for a bilinear phi on B n {rho = 0}.

    Subspace restrictions on either side are expressed as extra linear
    constraints of B. Both displays are checked for every l in ``ls``
    (default: all of F_p).
    """
    if rho.sig.k != 2:
        raise PreconditionFailed("the splitting identity is stated for two coordinates")
    p = rho.p
    splitting_hypotheses(B, rho, x, y, z, w, u, v)
    ls = range(p) if ls is None else ls
    f = lambda a, b, lab: _at(phi, (tuple(a), tuple(b)), lab)
    xu, yv = _vec(x, u, 1, -1, p), _vec(y, v, 1, 1, p)
    zu, wv = _vec(z, u, 1, -1, p), _vec(w, v, 1, 1, p)
    common = {
        "xu": f(xu, yv, "(x-u, y+v)"), "zu": f(zu, wv, "(z-u, w+v)"),
        "xv": f(x, v, "(x, v)"), "zy": f(z, y, "(z, y)"), "uy": f(u, y, "(u, y)"),
        "zv": f(z, v, "(z, v)"), "uw": f(u, w, "(u, w)"), "xw": f(x, w, "(x, w)"),
        "xz": f(_vec(x, z, 1, -1, p), _vec(y, w, 1, 1, p), "(x-z, y+w)"),
    }
    c = common
    for l in ls:
        l %= p
        lhs = f(_vec(x, z, 1, -l, p), _vec(y, w, l, 1, p), f"(x-{l}z, {l}y+w)")
        m = l - 1
        first = _lin(p, (1, c["xz"]), (m, c["xu"]), (-m, c["zu"]), (-m, c["xv"]),
                     (-(l * l - 1), c["zy"]), (m, c["uy"]), (m, c["zv"]), (-m, c["uw"]))
        second = _lin(p, (l, c["xu"]), (-l, c["zu"]), (1, c["xw"]), (-l, c["xv"]),
                      (-l * l, c["zy"]), (l, c["uy"]), (l, c["zv"]), (-l, c["uw"]))
        if lhs != first or lhs != second:
            return False
    return True


def _mix(k: int, I: Sequence[int], a: Point, b: Point) -> Point:
    return tuple(a[i] if i in I else b[i] for i in range(k))


def _shift(x: Point, e: Point, coefs: Sequence[int], p: int) -> Point:
    return tuple(_vec(xi, ei, 1, c, p) for xi, ei, c in zip(x, e, coefs))


def _scaled(e: Point, coefs: Sequence[int], p: int) -> Point:
    return tuple(tuple((c * t) % p for t in ei) for ei, c in zip(e, coefs))


def telescoping_sides(phi: PartialMultilinearMap, seq: GoodSequence, x: Point, e: Point,
                      nu: Sequence[int]) -> tuple[tuple, tuple]:
    """Both sides of the telescoping evaluation of a path sum through e.

    ``seq`` runs from z to (lam_i x_i); ``nu`` must satisfy
    prod(nu) * prod(lam) = 1.
    """
    p, k = phi.p, phi.sig.k
    lam = seq.scalars
    prod = 1
    for t in list(nu) + list(lam):
        prod = prod * t % p
    if prod != 1:
        raise PreconditionFailed("prod(nu) * prod(lambda) must equal 1")
    z = seq.points[0]
    lhs = tuple([0] * phi.codim_h)
    for a, b in zip(seq.points, seq.points[1:]):
        lhs = vadd(lhs, _at(phi, ominus(b, a, p), "step difference"), p)
    plam = 1
    for t in lam:
        plam = plam * t % p
    nulam = [n * l % p for n, l in zip(nu, lam)]
    rhs = _lin(p, (plam, _at(phi, _shift(x, e, nu, p), "x + nu e")),
               (-1, _at(phi, _shift(z, e, nulam, p), "z + nu lam e")))
    ne, nle = _scaled(e, nu, p), _scaled(e, nulam, p)
    for I in proper_subsets(k):
        rhs = _lin(p, (1, rhs), (-plam, _at(phi, _mix(k, I, ne, x), f"mixed x term {I}")),
                   (1, _at(phi, _mix(k, I, nle, z), f"mixed z term {I}")))
    return lhs, rhs


def verify_telescoping(phi: PartialMultilinearMap, seq: GoodSequence, x: Point, e: Point,
                       nu: Sequence[int] | None = None) -> bool:
    if nu is None:
        nu = [1] * (phi.sig.k - 1)
        prod = 1
        for t in seq.scalars:
            prod = prod * t % phi.p
        nu.append(inv_mod(prod, phi.p))
    lhs, rhs = telescoping_sides(phi, seq, x, e, nu)
    return lhs == rhs


def ze_quantity(phi: PartialMultilinearMap, z: Point, e: Point, tau: Sequence[int]) -> tuple:
    """phi(z + tau e) minus the mixed terms phi((tau e)_I, z_rest) over proper I."""
    p, k = phi.p, phi.sig.k
    val = _at(phi, _shift(z, e, tau, p), "z + tau e")
    te = _scaled(e, tau, p)
    for I in proper_subsets(k):
        val = vsub(val, _at(phi, _mix(k, I, te, z), f"mixed term {I}"), p)
    return val


def verify_ze_cancelation(phi: PartialMultilinearMap, z: Point, e: Point,
                          tau: Sequence[int], sigma: Sequence[int]) -> bool:
    p = phi.p
    for t in (tau, sigma):
        prod = 1
        for c in t:
            prod = prod * c % p
        if prod != 1:
            raise PreconditionFailed("scalar vectors must have product 1")
    return ze_quantity(phi, z, e, tau) == ze_quantity(phi, z, e, sigma)


def verify_scalar_respect(phi: PartialMultilinearMap) -> bool:
    """phi(x with x_d scaled by lam) = lam phi(x) for every x, d and lam."""
    p, k = phi.p, phi.sig.k
    for x, val in phi.table.items():
        for d in range(k):
            for lam in range(p):
                y = tuple(tuple((lam * c) % p for c in x[i]) if i == d else x[i] for i in range(k))
                if y not in phi.table:
                    return False
                if phi.table[y] != vscale(lam, val, p):
                    return False
    return True
