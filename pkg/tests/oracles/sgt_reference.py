"""Plain-Python slow-growing tree used to freeze the golden trace.

Written from the algorithm description only: lists and loops, brute-force
split search, no shared code with the package.
"""
import json
import sys


def wsse(ys, ws):
    tw = sum(ws)
    mu = sum(w * y for w, y in zip(ws, ys)) / tw
    return sum(w * (y - mu) ** 2 for w, y in zip(ws, ys))


def best_split(X, y, w, rel_tol=1e-12, min_mass=1e-6):
    tss = wsse(y, w)
    best = None
    for k in range(len(X[0])):
        vals = sorted({X[i][k] for i in range(len(y)) if w[i] > 0})
        for a, b in zip(vals, vals[1:]):
            c = 0.5 * (a + b)
            L = [i for i in range(len(y)) if X[i][k] <= c]
            R = [i for i in range(len(y)) if X[i][k] > c]
            wl = sum(w[i] for i in L)
            wr = sum(w[i] for i in R)
            if wl < min_mass or wr < min_mass:
                continue
            s = wsse([y[i] for i in L], [w[i] for i in L]) + wsse([y[i] for i in R], [w[i] for i in R])
            if best is None or s < best[0] - rel_tol * tss:
                best = (s, k, c)
    if best is None or not best[0] < tss - rel_tol * tss:
        return None
    return best[1], best[2]


def contradicts(path, k, c, side):
    for (pk, pc, ps, _) in path:
        if pk != k:
            continue
        if ps == 0 and side == 1 and c >= pc:
            return True
        if ps == 1 and side == 0 and c <= pc:
            return True
    return False


def grow(X, y, eta, hbar, cap=64, tol=1e-10):
    n = len(y)
    nodes = {}

    def visit(path, w):
        key = "".join(str(p[2]) for p in path)
        h = sum(v * v for v in w)
        rec = {"depth": len(path), "h": h, "weights": w}
        if h >= hbar - 1e-12:
            rec["status"] = "leaf"
        elif len(path) >= cap:
            rec["status"] = "capped"
        else:
            s = best_split(X, y, w)
            if s is None:
                rec["status"] = "leaf"
            else:
                rec["status"] = "split"
                rec["feature"], rec["threshold"] = s
        if rec["status"] != "split":
            rec["value"] = sum(a * b for a, b in zip(w, y))
            nodes[key] = rec
            return
        nodes[key] = rec
        k, c = rec["feature"], rec["threshold"]
        for side in (0, 1):
            ck = key + str(side)
            if contradicts(path, k, c, side):
                nodes[ck] = {"depth": len(path) + 1, "status": "dead_contra"}
                continue
            cw = []
            for i in range(n):
                keep = (X[i][k] <= c) if side == 0 else (X[i][k] > c)
                cw.append(w[i] if keep else w[i] * (1 - eta))
            t = sum(cw)
            cw = [v / t for v in cw]
            if max(abs(v - 1.0 / n) for v in cw) <= tol:
                nodes[ck] = {"depth": len(path) + 1, "status": "dead_flat"}
                continue
            visit(path + [(k, c, side, eta)], cw)

    visit([], [1.0 / n] * n)
    return nodes


TOY_X = [[0.1, 3.0], [0.4, 1.0], [0.35, 2.5], [0.8, 0.5], [0.9, 2.0], [0.55, 1.5], [0.2, 0.2], [0.7, 2.8]]
TOY_Y = [1.0, 2.5, 0.5, 4.0, 3.0, 2.0, 1.5, 5.0]

if __name__ == "__main__":
    nodes = grow(TOY_X, TOY_Y, eta=0.5, hbar=0.3)
    doc = {"X": TOY_X, "y": TOY_Y, "eta": 0.5, "h_bar": 0.3, "nodes": nodes}
    json.dump(doc, open(sys.argv[1], "w") if len(sys.argv) > 1 else sys.stdout, indent=1, sort_keys=True)
