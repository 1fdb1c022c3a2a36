"""Pure-Python twin of the compiled kernels in ``_kernels.pyx``."""


def colliding_pairs(xs, ys, two_r):
    n = len(xs)
    if len(ys) != n:
        raise ValueError("xs and ys differ in length")
    lim = two_r * two_r
    out = []
    for i in range(n):
        xi = xs[i]
        yi = ys[i]
        for j in range(i + 1, n):
            dx = xi - xs[j]
            dy = yi - ys[j]
            if dx * dx + dy * dy < lim:
                out.append((i, j))
    return out


def count_within(xs, ys, two_r):
    return len(colliding_pairs(xs, ys, two_r))
