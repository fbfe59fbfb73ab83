"""Time the compiled kernels against the numpy reference.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each kernel runs on the sizes the models and the smearing experiment use,
and the outputs of both backends are checked for exact equality first.
"""

import argparse
import json
import sys
import timeit

import numpy as np

from pseudoloc import kernels
from pseudoloc.geometry import SEVEN_SCENES_INTRINSICS, step_depth


def cases(rng):
    cloud = rng.normal(size=(1024, 3))
    sa2 = rng.normal(size=(256, 3))
    depth = step_depth(SEVEN_SCENES_INTRINSICS)
    valid = depth.valid.copy()
    valid[rng.random(valid.shape) < 0.1] = False
    cidx = np.arange(0, 1024, 4, dtype=np.int64)
    cidx2 = np.arange(0, 256, 4, dtype=np.int64)
    return {
        "fps 1024->256": ("farthest_point_sample", (cloud, 256, 0)),
        "fps 256->64": ("farthest_point_sample", (sa2, 64, 0)),
        "ball query 256 x 32 (r=0.2)": ("ball_query", (cloud, cidx, 0.2, 32)),
        "ball query 64 x 64 (r=0.4)": ("ball_query", (sa2, cidx2, 0.4, 64)),
        "box filter 640x480 k=11": ("box_filter_valid", (depth.depth, valid, 11)),
    }


def best_time(fn, args, repeat):
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write the timings here")
    args = ap.parse_args(argv)

    if kernels.compiled is None:
        print("compiled extension not built; nothing to compare", file=sys.stderr)
        return 1
    rows = []
    for label, (name, call_args) in cases(np.random.default_rng(0)).items():
        ref_fn, comp_fn = getattr(kernels.reference, name), getattr(kernels.compiled, name)
        if not np.array_equal(ref_fn(*call_args), comp_fn(*call_args)):
            print(f"{label}: backends disagree", file=sys.stderr)
            return 1
        t_ref = best_time(ref_fn, call_args, args.repeat)
        t_comp = best_time(comp_fn, call_args, args.repeat)
        rows.append({"kernel": label, "python_ms": 1e3 * t_ref, "cython_ms": 1e3 * t_comp,
                     "speedup": t_ref / t_comp})

    width = max(len(r["kernel"]) for r in rows)
    print(f"{'kernel':<{width}}  {'python ms':>10}  {'cython ms':>10}  {'speedup':>8}")
    for r in rows:
        print(f"{r['kernel']:<{width}}  {r['python_ms']:>10.3f}  {r['cython_ms']:>10.3f}  {r['speedup']:>7.1f}x")
    if args.json:
        with open(args.json, "w") as f:
            json.dump(rows, f, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
