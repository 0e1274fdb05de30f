"""Pure numpy implementation of the hot kernels.

Must agree with ``_ckernels.pyx`` and with the scalar methods on
:class:`~tsfuzzy.membership.MembershipFunction`.
"""
import numpy as np

Z, S, TRAP, GAUSS = 0, 1, 2, 3
MOVING, MATCHING = 0, 1


def _weight_centers(shapes, params):
    xg = np.empty(len(shapes))
    for k, (code, p) in enumerate(zip(shapes, params)):
        if code == Z:
            xg[k] = p[0] + (p[1] - p[0]) / 3.0
        elif code == S:
            xg[k] = p[0] + 2.0 * (p[1] - p[0]) / 3.0
        elif code == TRAP:
            x1, x2, x3, x4 = p
            a_left = 0.5 * (x2 - x1)
            a_mid = x3 - x2
            a_right = 0.5 * (x4 - x3)
            moment = (a_left * (x1 + 2.0 * (x2 - x1) / 3.0)
                      + a_mid * 0.5 * (x2 + x3)
                      + a_right * (x3 + (x4 - x3) / 3.0))
            xg[k] = moment / (a_left + a_mid + a_right)
        else:
            xg[k] = p[0]
    return xg


def _moving_rate(x, code, p, xg):
    if code in (Z, S):
        lo, hi = p[0], p[1]
        width = hi - lo
        d = np.where(x <= xg, (xg - x) / width, (x - xg) / width)
    else:
        lo, hi = p[0], p[3]
        width = hi - lo
        left = min(p[1], xg)
        right = max(p[2], xg)
        d = np.select(
            [x <= left, x <= xg, x <= right],
            [(left - x) / width, (xg - x) / width, (x - xg) / width],
            (x - right) / width)
    return np.where((x < lo) | (x > hi), 0.0, d)


def _grade(x, code, p):
    if code == Z:
        return np.clip((p[1] - x) / (p[1] - p[0]), 0.0, 1.0)
    if code == S:
        return np.clip((x - p[0]) / (p[1] - p[0]), 0.0, 1.0)
    if code == TRAP:
        x1, x2, x3, x4 = p
        with np.errstate(divide="ignore", invalid="ignore"):
            up = np.where(x < x2, (x - x1) / (x2 - x1) if x2 > x1 else 1.0, 1.0)
            down = np.where(x > x3, (x4 - x) / (x4 - x3) if x4 > x3 else 1.0, 1.0)
        g = np.minimum(up, down)
        return np.where((x < x1) | (x > x4), 0.0, g)
    return np.exp(-((x - p[0]) ** 2) / p[1])


def rule_weights(X, clause_rule, clause_var, clause_shape, clause_params, n_rules, mode):
    """Raw rule weights, shape ``(p, n_rules)``.

    Each clause multiplies its rule's weight by the moving rate (or grade)
    of its variable; rules without clauses keep weight 1.
    """
    X = np.asarray(X, dtype=float)
    W = np.ones((X.shape[0], n_rules))
    xg = _weight_centers(clause_shape, clause_params) if mode == MOVING else None
    for k in range(len(clause_rule)):
        x = X[:, clause_var[k]]
        code = clause_shape[k]
        if mode == MOVING:
            W[:, clause_rule[k]] *= _moving_rate(x, code, clause_params[k], xg[k])
        else:
            W[:, clause_rule[k]] *= _grade(x, code, clause_params[k])
    return W


def regressor_matrix(W, X, mask):
    """Normalized-weight regressors for rows with positive total weight.

    Returns ``(Z, keep)`` where ``keep`` is a boolean row mask and ``Z`` has
    one column per ``True`` entry of the flattened ``(n_rules, m + 1)``
    ``mask``.
    """
    W = np.asarray(W, dtype=float)
    X = np.asarray(X, dtype=float)
    total = W.sum(axis=1)
    keep = total > 0.0
    Wn = W[keep] / total[keep, None]
    ext = np.hstack([np.ones((Wn.shape[0], 1)), X[keep]])
    full = (Wn[:, :, None] * ext[:, None, :]).reshape(Wn.shape[0], W.shape[1] * ext.shape[1])
    return np.ascontiguousarray(full[:, np.asarray(mask, dtype=bool).ravel()]), keep
