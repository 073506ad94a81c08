"""Chart-based Levi-Civita connection and curvature from a metric 2-jet.

Works for any signature.  Index conventions (all arrays carry leading
batch dimensions):

* ``dG[..., i, j, k] = d_k g_ij`` and ``ddG[..., i, j, k, l] = d_k d_l g_ij``
* ``gamma[..., a, b, c] = Gamma^a_{bc}``
* ``riem[..., a, b, c, d]`` is the (1,3) curvature in the sign convention
  ``R(X, Y) Z = nabla_[X,Y] Z - [nabla_X, nabla_Y] Z``, so that
  ``(R(X, Y) Z)^a = riem[a, b, c, d] Z^b X^c Y^d``.

With that convention the sectional curvature of span{u, v} is
``<R(u, v) u, v> / (<u,u><v,v> - <u,v>^2)`` and Ricci is
``Ric(Y, Z) = sum_m eps_m <R(E_m, Y) E_m, Z>``.
"""

from __future__ import annotations

import numpy as np


def _lowered(dG):
    # Gamma_{dbc} = (d_b g_dc + d_c g_db - d_d g_bc) / 2, stored [d, b, c]
    return 0.5 * (np.einsum("...dcb->...dbc", dG) + dG
                  - np.einsum("...bcd->...dbc", dG))


def christoffel(G, dG):
    return np.einsum("...ad,...dbc->...abc", np.linalg.inv(G), _lowered(dG))


def christoffel_derivative(G, dG, ddG):
    """``dgamma[..., a, b, c, e] = d_e Gamma^a_{bc}``."""
    ginv = np.linalg.inv(G)
    low = _lowered(dG)
    dlow = 0.5 * (np.einsum("...dcbe->...dbce", ddG) + ddG
                  - np.einsum("...bcde->...dbce", ddG))
    dginv = -np.einsum("...ap,...pqe,...qd->...ade", ginv, dG, ginv)
    return (np.einsum("...ade,...dbc->...abce", dginv, low)
            + np.einsum("...ad,...dbce->...abce", ginv, dlow))


def riemann(G, dG, ddG):
    gam = christoffel(G, dG)
    dgam = christoffel_derivative(G, dG, ddG)
    # conventional R^a_{bcd} = d_c Gam^a_{db} - d_d Gam^a_{cb}
    #                        + Gam^a_{ce} Gam^e_{db} - Gam^a_{de} Gam^e_{cb}
    std = (np.einsum("...adbc->...abcd", dgam) - np.einsum("...acbd->...abcd", dgam)
           + np.einsum("...ace,...edb->...abcd", gam, gam)
           - np.einsum("...ade,...ecb->...abcd", gam, gam))
    return -std


def apply_riemann(riem, X, Y, Z):
    """Components of R(X, Y) Z."""
    return np.einsum("...abcd,...b,...c,...d->...a", riem, Z, X, Y)


def ricci(G, riem):
    """Ricci tensor ``Ric_{df} = g_{af} riem[a, b, c, d] g^{bc}``."""
    ginv = np.linalg.inv(G)
    return np.einsum("...af,...abcd,...bc->...df", G, riem, ginv)


def sectional(G, riem, u, v):
    Ruvu = apply_riemann(riem, u, v, u)
    num = np.einsum("...a,...ab,...b->...", Ruvu, G, v)
    guu = np.einsum("...a,...ab,...b->...", u, G, u)
    gvv = np.einsum("...a,...ab,...b->...", v, G, v)
    guv = np.einsum("...a,...ab,...b->...", u, G, v)
    return num / (guu * gvv - guv * guv)
