"""Smoke test for the eqsym_py extension.

Run after `cargo build -p eqsym-py`. The compiled library is copied under
its import name into a temporary directory, so no install step is needed.
Set EQSYM_PY_LIB to point at a different build.
"""

import math
import os
import shutil
import sys
import sysconfig
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load():
    lib = os.environ.get("EQSYM_PY_LIB")
    if lib is None:
        for name in ("libeqsym_py.so", "libeqsym_py.dylib", "eqsym_py.dll"):
            cand = ROOT / "target" / "debug" / name
            if cand.exists():
                lib = str(cand)
                break
    if lib is None:
        sys.exit("eqsym_py library not found; run `cargo build -p eqsym-py` first")
    suffix = sysconfig.get_config_var("EXT_SUFFIX") or ".so"
    tmp = tempfile.mkdtemp()
    shutil.copy(lib, os.path.join(tmp, "eqsym_py" + suffix))
    sys.path.insert(0, tmp)
    import eqsym_py

    return eqsym_py


def perm_matrix(p):
    n = len(p)
    m = [[0.0] * n for _ in range(n)]
    for x, y in enumerate(p):
        m[y][x] = 1.0
    return m


def main():
    eq = load()

    s3, perms = eq.Semigroup.from_permutations([[1, 0, 2], [1, 2, 0]])
    assert s3.order == 6 and s3.is_group() and not s3.is_abelian()
    assert sorted(map(tuple, perms)) == sorted(
        [(0, 1, 2), (1, 0, 2), (1, 2, 0), (0, 2, 1), (2, 1, 0), (2, 0, 1)]
    )

    rep = eq.Rep.from_generators([perm_matrix([1, 0, 2]), perm_matrix([1, 2, 0])])
    assert rep.dim == 3
    assert sorted(rep.decompose()) == [(1, 1), (2, 1)]

    # V = sign (x) permutation rep = sign + standard
    sign_t = [[-x for x in row] for row in perm_matrix([1, 0, 2])]
    pairs = [
        (perm_matrix([1, 0, 2]), sign_t),
        (perm_matrix([1, 2, 0]), perm_matrix([1, 2, 0])),
    ]
    cr = eq.CoupledRep(pairs)
    ints = cr.intertwiners()
    assert len(ints) == 1
    assert cr.pair_space_dim() == cr.predicted_pair_space_dim() == 10

    z4 = eq.Semigroup.cyclic(4)
    complete, residual, eq_dim, _ = eq.conv_completeness(z4)
    assert complete and residual < 1e-9 and eq_dim == 4
    survivors, exact = eq.enumerate_symmetries(z4)
    assert exact and len(survivors) == 4

    d = eq.hausdorff_distance([[[0.0]]], [[[3.0]], [[1.0]]])
    assert math.isclose(d, 3.0)

    assert eq.spiral_coverage(0.0, 0.0, 2 * math.pi, 4097, circle=64) < 1e-2

    # (f0, g0) is related but (f0, H(g0)) = (f0, g1) is not
    unlearnable, _ = eq.unlearnability([[True, False], [True, True]], [(1, 0)], [1, 1])
    assert unlearnable == [(0, 0)], unlearnable

    try:
        eq.Semigroup.from_permutations([[0, 0]])
    except eq.EqsymError as e:
        assert str(e).startswith("[algebra-core]"), e
    else:
        raise AssertionError("bad permutation accepted")

    print("smoke test: ok")


if __name__ == "__main__":
    main()
