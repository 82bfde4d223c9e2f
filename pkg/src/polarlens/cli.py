"""
Command-line entry point: simulate, reconstruct, evaluate, stokes, align, viz.
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import plotting
from .config import MODES, RunConfig, read_config, solver_config
from .forward import ForwardOperator
from .geometry import estimate_homography, read_correspondences, warp_image
from .metrics import evaluate_stack
from .polarimetry import composite_rgb_viz, stokes_from_intensities
from .simulate import (
    MaskSpec,
    SimConfig,
    bundled_psf,
    compute_rgb_guide,
    generate_stripe_mask,
    simulate_measurement,
    synthetic_scene,
    to_gray3,
)
from .solvers import reconstruct
from .tensors import (
    PolarizationStack,
    load_mask,
    load_measurement,
    load_psf,
    load_stack,
    read_png,
    save_tensor,
    write_png,
)

logger = logging.getLogger("polarlens")

DEFAULT_SIZE = 250


class CliError(Exception):
    pass


def _common(p):
    p.add_argument("--config", help="flat 'key = value' file; flags override it")
    p.add_argument("--mode", choices=sorted(MODES))
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("-v", "--verbose", action="store_true")


def _solver_flags(p):
    p.add_argument("--solver", choices=("fista", "admm"))
    p.add_argument("--preset", choices=("simulation", "real", "psf-mismatch"))
    p.add_argument("--iters", type=int)
    p.add_argument("--lambda", dest="lambda_", type=float, metavar="LAMBDA", help="TV strength")
    p.add_argument("--lambda-w", type=float)
    p.add_argument("--c", type=float, help="FISTA step factor: step = 1 / (L * c)")
    p.add_argument("--rho", type=float)
    p.add_argument("--cg-tol", type=float)
    p.add_argument("--cg-iters", type=int)
    p.add_argument("--log-every", type=int)
    p.add_argument("--lipschitz-iters", type=int)


def build_parser():
    parser = argparse.ArgumentParser(prog="polarlens", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a lensless measurement")
    _common(p)
    p.add_argument("--scene", help="ground-truth stack (PTF); omit for a synthetic scene")
    p.add_argument("--size", type=int, nargs=2, metavar=("H", "W"), help="synthetic scene size")
    p.add_argument("--psf", help="PSF file (PTF), or 'bundled'")
    p.add_argument("--mask", help="mask file (PTF); default: generated stripes")
    p.add_argument("--repeats", type=int, help="stripe sequence repeats")
    p.add_argument("--noise-sigma", type=float)

    p = sub.add_parser("reconstruct", help="run FISTA or ADMM on a measurement")
    _common(p)
    _solver_flags(p)
    p.add_argument("--measurement")
    p.add_argument("--psf")
    p.add_argument("--mask")

    p = sub.add_parser("evaluate", help="PSNR / SSIM of a prediction against ground truth")
    _common(p)
    p.add_argument("--pred")
    p.add_argument("--gt")
    p.add_argument("--peak", type=float)

    p = sub.add_parser("stokes", help="Stokes, DoLP and AoLP of a four-angle stack")
    _common(p)
    p.add_argument("--stack")

    p = sub.add_parser("align", help="warp an image with a homography from correspondences")
    _common(p)
    p.add_argument("--image")
    p.add_argument("--correspondences")
    p.add_argument("--dims", type=int, nargs=2, metavar=("H", "W"))

    p = sub.add_parser("viz", help="RGB composite of the 0/45/90 planes")
    _common(p)
    p.add_argument("--stack")
    return parser


def merge_options(args):
    """CLI flags over config-file values."""
    opts = read_config(args.config) if args.config else {}
    for key, value in vars(args).items():
        if key in ("config", "command"):
            continue
        key = "lambda" if key == "lambda_" else key
        if value is not None and value is not False:
            opts[key] = value
    return opts


def _require(opts, key):
    val = opts.get(key)
    if val is None:
        raise CliError(f"missing required option --{key.replace('_', '-')}")
    return val


def _existing(opts, key):
    path = Path(_require(opts, key))
    if not path.is_file():
        raise CliError(f"{key} file not found: {path}")
    return path


def _out_dir(opts):
    out = Path(opts.get("out") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _psf_for_mode(opts, channels):
    src = opts.get("psf") or "bundled"
    psf = bundled_psf(3) if src == "bundled" else load_psf(_existing(opts, "psf"))
    if channels == 1 and psf.channels != 1:
        psf = psf.to_grayscale()
    if psf.channels != channels:
        raise CliError(f"PSF has {psf.channels} channels, mode needs {channels}")
    return psf


def cmd_simulate(opts):
    run = RunConfig(
        mode=opts.get("mode", "gray3"),
        sim=SimConfig(float(opts.get("noise_sigma", 0.0)), int(opts.get("seed", 0))),
        repeats=int(opts.get("repeats", 4)),
    )
    out = _out_dir(opts)
    if opts.get("scene"):
        scene = load_stack(_existing(opts, "scene"))
    else:
        size = opts.get("size") or (opts.get("height", DEFAULT_SIZE), opts.get("width", DEFAULT_SIZE))
        h, w = size.split() if isinstance(size, str) else size
        scene = synthetic_scene(int(h), int(w), 3, (0, 45, 90, 135), seed=run.sim.seed)
    if run.mode == "gray3" and (scene.n_angles == 4 or scene.channels == 3):
        scene = to_gray3(scene)
    if (scene.angles, scene.channels) != MODES[run.mode]:
        raise CliError(f"scene angles {scene.angles} / channels {scene.channels} do not fit mode {run.mode}")
    psf = _psf_for_mode(opts, run.channels)
    if opts.get("mask"):
        mask = load_mask(_existing(opts, "mask"), scene.angles)
    else:
        mask = generate_stripe_mask(MaskSpec(scene.height, scene.width, scene.angles, run.repeats))

    y = simulate_measurement(scene, psf, mask, run.sim)
    save_tensor(y, out / "measurement.ptf")
    save_tensor(mask, out / "mask.ptf")
    save_tensor(psf, out / "psf.ptf")
    save_tensor(scene, out / "scene.ptf")
    if scene.n_angles == 4:
        save_tensor(compute_rgb_guide(scene), out / "guide.ptf")
    print(f"mask_checksum={mask.checksum()}")
    print(f"measurement={out / 'measurement.ptf'} shape={'x'.join(map(str, y.shape))}")


def cmd_reconstruct(opts):
    mode = opts.get("mode", "gray3")
    angles, channels = MODES[mode]
    cfg = solver_config(opts)
    y = load_measurement(_existing(opts, "measurement"))
    psf = _psf_for_mode(opts, channels)
    mask = load_mask(_existing(opts, "mask"), angles)
    if y.channels != channels:
        raise CliError(f"measurement has {y.channels} channels, mode {mode} needs {channels}")
    op = ForwardOperator(psf, mask)
    report = reconstruct(y, op, cfg)
    out = _out_dir(opts)
    save_tensor(report.estimate, out / "estimate.ptf")
    report.write_trace_csv(out / "trace.csv")
    plotting.plot_trace(report, out / "trace.png", title=f"{cfg.kind.upper()} {mode}")
    print(
        f"solver={cfg.kind} iterations={report.iterations} "
        f"objective={report.final_objective():.6e} time={report.wall_time:.2f}s"
    )


def cmd_evaluate(opts):
    pred = load_stack(_existing(opts, "pred"))
    gt = load_stack(_existing(opts, "gt"))
    mode = opts.get("mode")
    if mode and (gt.angles, gt.channels) != MODES[mode]:
        raise CliError(f"ground truth does not fit mode {mode}")
    report = evaluate_stack(pred, gt, float(opts.get("peak", 1.0)))
    out = _out_dir(opts)
    report.write_csv(out / "metrics.csv")
    plotting.plot_metrics(report, out / "metrics.png")
    print(f"psnr_db={report.psnr:.4f} ssim={report.ssim:.6f}")


def cmd_stokes(opts):
    stack = load_stack(_existing(opts, "stack"))
    st = stokes_from_intensities(stack)
    out = _out_dir(opts)
    for name, plane in st.planes().items():
        save_tensor(plane, out / f"stokes_{name}.ptf")
    plotting.plot_stokes(st, out / "stokes.png")
    print(f"degenerate_pixels={int(st.degenerate.sum())}")


def cmd_align(opts):
    img_path = _existing(opts, "image")
    codes, depth = read_png(img_path, raw=True)
    img = codes.astype(np.float64) / (2**depth - 1)
    src, dst = read_correspondences(_existing(opts, "correspondences"))
    h = estimate_homography(src, dst)
    dims = opts.get("dims") or img.shape[:2]
    if isinstance(dims, str):
        dims = dims.split()
    warped, coverage = warp_image(img, h, tuple(int(d) for d in dims))
    out = _out_dir(opts)
    write_png(out / "warped.png", warped, bit_depth=depth)
    print(f"coverage={coverage.mean():.4f}")


def cmd_viz(opts):
    stack = load_stack(_existing(opts, "stack"))
    if stack.channels == 3:
        keep = [stack.angles.index(a) for a in (0, 45, 90)]
        stack = PolarizationStack(stack.data[keep].mean(axis=1, keepdims=True), (0, 45, 90))
    out = _out_dir(opts)
    composite_rgb_viz(stack, out / "composite.png")
    print(f"composite={out / 'composite.png'}")


COMMANDS = {
    "simulate": cmd_simulate,
    "reconstruct": cmd_reconstruct,
    "evaluate": cmd_evaluate,
    "stokes": cmd_stokes,
    "align": cmd_align,
    "viz": cmd_viz,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
    try:
        opts = merge_options(args)
        COMMANDS[args.command](opts)
    except (CliError, ValueError, RuntimeError, OSError) as exc:
        msg = " ".join(str(exc).split())
        print(f"error: {args.command}: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
