"""Command-line interface.

Subcommands:
  segment   run the solver on an image + markers, write mask/u/residuals
  distance  write the distance maps (Euclidean, geodesic, anti, combined)
  synth     emit a synthetic test image with ground truth and markers
  sweep     TC table over a (lambda, theta) grid
  noise     TC table across noise levels, smoothed vs not
  serve     start the HTTP annotation service

Exit codes: 0 success/convergence, 1 input error, 2 stopped at the
iteration cap. Identical inputs produce byte-identical CSV outputs.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import imageio
from .distance import DistanceConfig, MarkerSet, build_distance_bundle
from .evaluation import (
    SweepSpec,
    generate_synthetic,
    noise_rows_to_csv,
    noise_study,
    parameter_sweep,
    sweep_heatmap_png,
    sweep_rows_to_csv,
    tanimoto,
)
from .grid import ScalarGrid, normalize
from .solver import SegmentationResult, SolverParams, segment


class CliError(Exception):
    pass


def residuals_csv_bytes(result: SegmentationResult) -> bytes:
    lines = ["iteration,residual,energy,c1,c2"]
    for k, res in enumerate(result.residual_history):
        lines.append(f"{k + 1},{res:.17g},{result.energy_history[k + 1]:.17g},"
                     f"{result.c1:.17g},{result.c2:.17g}")
    return ("\n".join(lines) + "\n").encode()


def _add_distance_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--beta-g", type=float, default=1000.0, help="edge weight in the cost field")
    p.add_argument("--eps-d", type=float, default=1e-3, help="cost floor")
    p.add_argument("--vartheta", type=float, default=0.1, help="Euclidean term weight in the cost")
    p.add_argument("--alpha-tilde", type=float, default=200.0, help="anti-marker decay rate")
    p.add_argument("--smooth-iters", type=int, default=100, help="pre-smoother sweeps")


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="sets both fitting weights")
    p.add_argument("--lambda1", type=float, default=5.0)
    p.add_argument("--lambda2", type=float, default=5.0)
    p.add_argument("--theta", type=float, default=5.0, help="distance penalty weight")
    p.add_argument("--mu", type=float, default=1.0, help="regularization weight")
    p.add_argument("--tau", type=float, default=1e-2, help="time step")
    p.add_argument("--mode", choices=["geodesic", "euclidean", "weighted"],
                   default="geodesic")
    p.add_argument("--tol", type=float, default=1e-6, help="relative-change stopping tolerance")
    p.add_argument("--max-iters", type=int, default=5000)
    p.add_argument("--threshold", type=float, default=0.5, help="mask threshold in (0,1)")


def _distance_config(args) -> DistanceConfig:
    return DistanceConfig(
        beta_G=args.beta_g, eps_D=args.eps_d, vartheta=args.vartheta,
        alpha_tilde=args.alpha_tilde, smoothing_iterations=args.smooth_iters,
    )


def _solver_params(args) -> SolverParams:
    lam1, lam2 = args.lambda1, args.lambda2
    if args.lam is not None:
        lam1 = lam2 = args.lam
    return SolverParams(
        lambda1=lam1, lambda2=lam2, theta=args.theta, mu=args.mu, tau=args.tau,
        tol=args.tol, max_iterations=args.max_iters,
        gamma_threshold=args.threshold, mode=args.mode, edge_beta=args.beta_g,
    )


def _load_inputs(args) -> tuple[ScalarGrid, MarkerSet]:
    image_path = Path(args.image)
    if not image_path.is_file():
        raise CliError(f"image not found: {image_path}")
    markers_path = Path(args.markers)
    if not markers_path.is_file():
        raise CliError(f"markers file not found: {markers_path}")
    try:
        image = normalize(imageio.load_image(image_path))
    except Exception as exc:
        raise CliError(f"cannot read image: {exc}") from exc
    try:
        marker_set = MarkerSet.load(markers_path)
    except Exception as exc:
        raise CliError(f"invalid markers file: {exc}") from exc
    if args.anti_markers:
        import json

        try:
            doc = json.loads(Path(args.anti_markers).read_text())
            extra = tuple((int(p[0]), int(p[1]))
                          for p in doc.get("markers", []) + doc.get("anti_markers", []))
        except Exception as exc:
            raise CliError(f"invalid anti-markers file: {exc}") from exc
        marker_set = MarkerSet(markers=marker_set.markers,
                               anti_markers=marker_set.anti_markers + extra)
    try:
        marker_set.validate_bounds(image.width, image.height)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    return image, marker_set


def _write_distance_outputs(bundle, out_dir: Path, has_anti: bool) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    named = {
        "euclidean": bundle.euclidean,
        "geodesic": bundle.marker_geodesic,
        "combined": bundle.combined,
    }
    if has_anti:
        named["anti"] = bundle.anti_marker
    for name, grid in named.items():
        imageio.save_png(grid, out_dir / f"d_{name}.png")
        imageio.save_csv(grid, out_dir / f"d_{name}.csv")


def cmd_segment(args) -> int:
    image, marker_set = _load_inputs(args)
    cfg = _distance_config(args)
    bundle = build_distance_bundle(image, marker_set, cfg)
    if args.distance_only:
        _write_distance_outputs(bundle, Path(args.out_dir),
                                marker_set.has_anti_markers)
        return 0
    params = _solver_params(args)
    result = segment(image, marker_set, bundle, params)
    imageio.save_mask_png(result.mask, args.out)
    if args.out_u:
        Path(args.out_u).write_bytes(imageio.grid_to_csv_bytes(result.u))
    if args.out_residuals:
        Path(args.out_residuals).write_bytes(residuals_csv_bytes(result))
    if args.ground_truth:
        gt = imageio.load_mask_png(args.ground_truth)
        print(f"tc={tanimoto(result.mask, gt):.5f}")
    print(f"iterations={result.iterations} converged={result.converged} "
          f"c1={result.c1:.6f} c2={result.c2:.6f}")
    return 0 if result.converged else 2


def cmd_distance(args) -> int:
    image, marker_set = _load_inputs(args)
    bundle = build_distance_bundle(image, marker_set, _distance_config(args))
    _write_distance_outputs(bundle, Path(args.out_dir), marker_set.has_anti_markers)
    return 0


def cmd_synth(args) -> int:
    image, gt, marker_set = generate_synthetic(args.kind, size=args.size,
                                               noise_level=args.noise,
                                               seed=args.seed)
    imageio.save_png(image, args.out)
    if args.out_gt:
        imageio.save_mask_png(gt, args.out_gt)
    if args.out_markers:
        Path(args.out_markers).write_text(marker_set.to_json() + "\n")
    return 0


def cmd_sweep(args) -> int:
    image, marker_set = _load_inputs(args)
    gt = imageio.load_mask_png(args.ground_truth)
    spec = SweepSpec(
        lambda_values=[float(v) for v in args.lambdas.split(",")],
        theta_values=[float(v) for v in args.thetas.split(",")],
        fixed=_solver_params(args),
        ground_truth=gt,
    )
    rows = parameter_sweep(image, marker_set, spec, _distance_config(args))
    Path(args.out).write_text(sweep_rows_to_csv(rows))
    if args.heatmap:
        sweep_heatmap_png(rows, args.heatmap)
    return 0


def cmd_noise(args) -> int:
    levels = [float(v) for v in args.levels.split(",")]
    rows = noise_study(args.kind, levels, size=args.size, seed=args.seed,
                       smoothing_iterations=args.smooth_iters)
    Path(args.out).write_text(noise_rows_to_csv(rows))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    port = int(os.environ.get("GEOSEG_PORT", args.port))
    uvicorn.run(create_app(), host=args.host, port=port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geoseg",
                                     description="Selective segmentation with geodesic marker distances")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="segment an image from marker input")
    p.add_argument("--image", required=True)
    p.add_argument("--markers", required=True, help="markers JSON file")
    p.add_argument("--anti-markers", default=None,
                   help="extra anti-markers JSON (markers array is used)")
    _add_solver_flags(p)
    _add_distance_flags(p)
    p.add_argument("--out", default="mask.png", help="mask PNG path")
    p.add_argument("--out-u", default=None, help="relaxed u as CSV")
    p.add_argument("--out-residuals", default=None, help="history CSV")
    p.add_argument("--ground-truth", default=None, help="mask PNG to score against")
    p.add_argument("--distance-only", action="store_true",
                   help="write distance maps instead of segmenting")
    p.add_argument("--out-dir", default=".", help="directory for --distance-only outputs")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("distance", help="write distance map PNGs and CSVs")
    p.add_argument("--image", required=True)
    p.add_argument("--markers", required=True)
    p.add_argument("--anti-markers", default=None)
    _add_distance_flags(p)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("synth", help="generate a synthetic test image")
    p.add_argument("--kind", default="circle_among_shapes")
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--out-gt", default=None)
    p.add_argument("--out-markers", default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sweep", help="TC table over a (lambda, theta) grid")
    p.add_argument("--image", required=True)
    p.add_argument("--markers", required=True)
    p.add_argument("--anti-markers", default=None)
    p.add_argument("--ground-truth", required=True)
    p.add_argument("--lambdas", default="2,5,10,20")
    p.add_argument("--thetas", default="1,2,5,10")
    _add_solver_flags(p)
    _add_distance_flags(p)
    p.add_argument("--out", default="sweep.csv")
    p.add_argument("--heatmap", default=None, help="optional TC heatmap PNG")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("noise", help="noise robustness table")
    p.add_argument("--kind", default="circle_among_shapes")
    p.add_argument("--levels", default="0,0.1,0.2")
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--smooth-iters", type=int, default=100)
    p.add_argument("--out", default="noise.csv")
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser("serve", help="start the HTTP annotation service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
