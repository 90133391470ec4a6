"""Command-line front end.

Exit codes: 0 success, 2 invalid flags, 3 solver error, 4 I/O error.
Reports are JSON lines (one object per registration) written to
``<out-dir>/report.jsonl``; commands without an output directory print
their report line to stdout.  Everything a command writes is staged in a
hidden directory and moved into place only once the run has succeeded.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import shutil
import sys
import time
from contextlib import contextmanager
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from ._parallel import thread_count
from .errors import AllZeroMap, KeysolveError, SolverError
from .geometry import (
    AffineTransform,
    RigidTransform,
    TpsTransform,
    Transform,
    load_transform,
    rotation_xyz,
    save_transform,
    transform_to_dict,
)
from .groupwise import groupwise_register
from .keypoints import (
    activation_energies,
    correspondence_weights,
    extract_keypoints,
    read_activations,
    read_keypoints,
    write_activations,
    write_keypoints,
)
from .solvers import bending_energy, residual_rms, solve
from .volume import (
    PhantomSpec,
    Volume3D,
    dice,
    generate_phantom,
    hausdorff,
    read_volume,
    warp,
    write_volume,
)
from .volume.warp import DEFAULT_CHUNK_VOXELS

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SOLVER = 3
EXIT_IO = 4


class CliFailure(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return "sha256:" + h.hexdigest()


def _companions(path: Path) -> list[Path]:
    """The file itself plus a sidecar header when one exists."""
    out = [path]
    side = path.with_suffix(".json")
    if side != path and side.exists():
        out.append(side)
    return out


class Inputs:
    """Tracks every input file so its digest can be re-checked at the end."""

    def __init__(self):
        self.digests: dict[str, str] = {}

    def add(self, path) -> Path:
        p = Path(path)
        for f in _companions(p):
            try:
                self.digests[str(f)] = file_digest(f)
            except OSError as exc:
                raise CliFailure(EXIT_IO, f"cannot read {f}: {exc}") from exc
        return p

    def verify(self) -> None:
        for f, d in self.digests.items():
            try:
                now = file_digest(f)
            except OSError as exc:
                raise CliFailure(EXIT_IO, f"input {f} disappeared: {exc}") from exc
            if now != d:
                raise CliFailure(EXIT_IO, f"input {f} changed during the run")


def _load(what, fn, path):
    try:
        return fn(path)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise CliFailure(EXIT_IO, f"cannot load {what} {path}: {exc}") from exc


@contextmanager
def staged(out_dir: Path):
    """Yield a staging directory; on success move its files into ``out_dir``."""
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        stage = out_dir / f".staging-{os.getpid()}"
        if stage.exists():
            shutil.rmtree(stage)
        stage.mkdir()
    except OSError as exc:
        raise CliFailure(EXIT_IO, f"cannot create output directory {out_dir}: {exc}") from exc
    try:
        yield stage
        for f in sorted(stage.iterdir()):
            os.replace(f, out_dir / f.name)
    except OSError as exc:
        raise CliFailure(EXIT_IO, f"cannot write outputs to {out_dir}: {exc}") from exc
    finally:
        shutil.rmtree(stage, ignore_errors=True)


class Timer:
    def __init__(self):
        self.ms: dict[str, float] = {}

    @contextmanager
    def stage(self, name):
        t0 = time.perf_counter()
        yield
        self.ms[name] = round((time.perf_counter() - t0) * 1000.0, 3)


def transform_summary(T: Transform) -> dict:
    d: dict = {"type": transform_to_dict(T)["type"]}
    if isinstance(T, RigidTransform):
        angle = np.degrees(np.arccos(np.clip((np.trace(T.R) - 1.0) / 2.0, -1.0, 1.0)))
        d.update(rotation_angle_deg=float(angle), translation=T.t.tolist())
    elif isinstance(T, AffineTransform):
        d.update(
            determinant=float(np.linalg.det(T.linear)),
            condition_number=T.condition_number(),
            translation=T.translation.tolist(),
        )
    elif isinstance(T, TpsTransform):
        d.update(
            n_control_points=len(T.control_points),
            **{"lambda": T.lam},
            max_abs_kernel_coefficient=float(np.abs(T.V).max()),
        )
    return d


def _label_metrics(pred: Volume3D, ref: Volume3D, hd95: bool = False, labels=None) -> dict:
    per, mean = dice(pred, ref, labels)
    hd = {}
    for lab in per:
        try:
            hd[str(lab)] = hausdorff(pred, ref, lab, 95.0 if hd95 else None)
        except KeysolveError:
            hd[str(lab)] = None
    return {
        "dice": {str(k): v for k, v in per.items()},
        "dice_mean": mean,
        "hausdorff_mm" if not hd95 else "hd95_mm": hd,
    }


def _write_report(path: Path, records: list[dict]) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


def _base_record(command: str, argv: list[str], inputs: Inputs) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "command": command,
        "argv": list(argv),
        "inputs": dict(sorted(inputs.digests.items())),
    }


def _parse_dims(values):
    if values is None:
        return None
    if len(values) == 1:
        values = values * 3
    if len(values) != 3 or min(values) < 1:
        raise CliFailure(EXIT_USAGE, "--out-dims/--dims take one or three positive integers")
    return tuple(values)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _keypoints_from_args(args, inputs: Inputs, stage: Path | None):
    """Return (kp_moving, kp_fixed, weights)."""
    if args.acts_moving or args.acts_fixed:
        if not (args.acts_moving and args.acts_fixed):
            raise CliFailure(EXIT_USAGE, "--acts-moving and --acts-fixed go together")
        am = _load("activations", read_activations, inputs.add(args.acts_moving))
        af = _load("activations", read_activations, inputs.add(args.acts_fixed))
        try:
            kpm, kpf = extract_keypoints(am), extract_keypoints(af)
        except AllZeroMap as exc:
            raise CliFailure(EXIT_SOLVER, str(exc)) from exc
        w = None
        if args.weighted:
            w = correspondence_weights(
                activation_energies(af), activation_energies(am), args.weight_temperature
            )
        if stage is not None:
            write_keypoints(stage / "kp_moving.csv", kpm, w)
            write_keypoints(stage / "kp_fixed.csv", kpf, w)
        return kpm, kpf, w
    if not (args.kp_moving and args.kp_fixed):
        raise CliFailure(EXIT_USAGE, "give --kp-moving/--kp-fixed or --acts-moving/--acts-fixed")
    kpm, wm = _load("keypoints", read_keypoints, inputs.add(args.kp_moving))
    kpf, wf = _load("keypoints", read_keypoints, inputs.add(args.kp_fixed))
    w = None
    if args.weighted:
        w = wf if wf is not None else wm
        if w is None:
            raise CliFailure(EXIT_USAGE, "--weighted needs activations or a weight column")
    return kpm, kpf, w


def cmd_register(args, argv) -> int:
    inputs = Inputs()
    timer = Timer()
    out_dir = Path(args.out_dir)
    moving = _load("volume", read_volume, inputs.add(args.moving))
    fixed = _load("volume", read_volume, inputs.add(args.fixed))
    ml = fl = None
    if args.moving_labels or args.fixed_labels:
        if not (args.moving_labels and args.fixed_labels):
            raise CliFailure(EXIT_USAGE, "--moving-labels and --fixed-labels go together")
        ml = _load("volume", read_volume, inputs.add(args.moving_labels))
        fl = _load("volume", read_volume, inputs.add(args.fixed_labels))

    with staged(out_dir) as stage:
        with timer.stage("keypoints"):
            kpm, kpf, w = _keypoints_from_args(args, inputs, stage)
        with timer.stage("solve"):
            T, diag = solve(args.family, kpf, kpm, args.lam, w)
        out_dims = _parse_dims(args.out_dims) or fixed.dims
        with timer.stage("warp"):
            warped = warp(moving, T, out_dims, args.interpolation, args.chunk_voxels, fixed.spacing_mm)
        write_volume(stage / "warped.raw", warped)
        save_transform(stage / "transform.json", T)
        rec = _base_record("register", argv, inputs)
        rec.update(
            family=args.family,
            **{"lambda": args.lam},
            weighted=w is not None,
            n_keypoints=len(kpf),
            transform=transform_summary(T),
            diagnostics=asdict(diag),
        )
        if ml is not None:
            with timer.stage("metrics"):
                wl = warp(ml, T, fl.dims, "nearest", args.chunk_voxels, fl.spacing_mm)
                write_volume(stage / "warped_labels.raw", wl)
                rec.update(_label_metrics(wl, fl))
        inputs.verify()
        rec["timings_ms"] = timer.ms
        _write_report(stage / "report.jsonl", [rec])
    return EXIT_OK


def _parse_subject(spec: str, no_volumes: bool):
    parts = [p for p in spec.split(",") if p]
    if no_volumes:
        if len(parts) != 1:
            raise CliFailure(EXIT_USAGE, f"--no-volumes expects keypoint files only, got {spec!r}")
        return None, parts[0], None
    if len(parts) not in (2, 3):
        raise CliFailure(EXIT_USAGE, f"subject must be VOLUME,KEYPOINTS[,LABELS], got {spec!r}")
    return parts[0], parts[1], parts[2] if len(parts) == 3 else None


def cmd_groupwise(args, argv) -> int:
    inputs = Inputs()
    timer = Timer()
    subjects = [_parse_subject(s, args.no_volumes) for s in args.subjects]
    if len(subjects) < 2:
        raise CliFailure(EXIT_USAGE, "groupwise registration needs at least two subjects")
    kps = [_load("keypoints", read_keypoints, inputs.add(kp))[0] for _, kp, _ in subjects]
    for _, _, lab in subjects:
        if lab is not None:
            inputs.add(lab)
    for vol, _, _ in subjects:
        if vol is not None:
            inputs.add(vol)

    with timer.stage("groupwise"):
        res = groupwise_register(kps, args.family, args.lam, args.tol, args.max_iters)

    with staged(Path(args.out_dir)) as stage:
        write_keypoints(stage / "atlas.csv", res.atlas_keypoints)
        for i, T in enumerate(res.transforms):
            save_transform(stage / f"subject_{i:03d}_transform.json", T)
            write_keypoints(stage / f"subject_{i:03d}_aligned.csv", res.aligned_keypoints[i])
        rec = _base_record("groupwise", argv, inputs)
        spread = float(np.max(np.linalg.norm(res.aligned_keypoints - res.atlas_keypoints, axis=2)))
        rec.update(
            family=args.family,
            **{"lambda": args.lam},
            n_subjects=len(kps),
            n_keypoints=len(kps[0]),
            converged=res.converged,
            iterations_run=res.iterations_run,
            displacement_trace=res.displacement_trace,
            spread_trace=res.spread_trace,
            post_alignment_spread=spread,
            subjects=[
                {"transform": transform_summary(T), "diagnostics": asdict(d)}
                for T, d in zip(res.transforms, res.diagnostics)
            ],
        )
        if not args.no_volumes:
            with timer.stage("warp"):
                acc = raw = None
                out_dims = _parse_dims(args.out_dims)
                labels_out = []
                for i, ((vol, _, lab), T) in enumerate(zip(subjects, res.transforms)):
                    v = _load("volume", read_volume, vol)
                    dims = out_dims or v.dims
                    if out_dims is None:
                        out_dims = dims
                    wv = warp(v, T, dims, None, args.chunk_voxels)
                    write_volume(stage / f"subject_{i:03d}_warped.raw", wv)
                    if not v.is_label:
                        d = wv.data.astype(np.float64)
                        acc = d if acc is None else acc + d
                        if v.dims == dims:
                            r = v.data.astype(np.float64)
                            raw = r if raw is None else raw + r
                    if lab is not None:
                        lv = _load("volume", read_volume, lab)
                        wl = warp(lv, T, dims, "nearest", args.chunk_voxels)
                        write_volume(stage / f"subject_{i:03d}_warped_labels.raw", wl)
                        labels_out.append(wl)
                if acc is not None:
                    template = Volume3D(acc / len(subjects), v.spacing_mm)
                    write_volume(stage / "template.raw", template)
                    rec["template_max"] = float(template.data.max())
                    if raw is not None:
                        rec["unaligned_mean_max"] = float((raw / len(subjects)).max())
                if len(labels_out) >= 2:
                    pair = [
                        dice(labels_out[i], labels_out[j])[1]
                        for i in range(len(labels_out))
                        for j in range(i + 1, len(labels_out))
                    ]
                    rec["pairwise_dice_mean"] = float(np.mean(pair))
        inputs.verify()
        rec["timings_ms"] = timer.ms
        _write_report(stage / "report.jsonl", [rec])
    return EXIT_OK


def _phantom_spec(args) -> PhantomSpec:
    fields = {}
    if args.spec:
        data = _load("phantom spec", lambda p: json.loads(Path(p).read_text()), args.spec)
        fields.update(data)
    if args.dims is not None:
        fields["dims"] = _parse_dims(args.dims)
    for key in ("n_landmarks", "n_labels", "seed", "blob_sigma"):
        val = getattr(args, key)
        if val is not None:
            fields[key] = val
    if "dims" in fields:
        fields["dims"] = tuple(int(d) for d in fields["dims"])
    if "spacing_mm" in fields:
        fields["spacing_mm"] = tuple(float(s) for s in fields["spacing_mm"])
    try:
        return PhantomSpec(**fields)
    except (TypeError, ValueError) as exc:
        raise CliFailure(EXIT_USAGE, f"invalid phantom spec: {exc}") from exc


def cmd_phantom(args, argv) -> int:
    inputs = Inputs()
    if args.spec:
        inputs.add(args.spec)
    spec = _phantom_spec(args)
    transform = None
    if args.transform:
        transform = _load("transform", load_transform, inputs.add(args.transform))
        if isinstance(transform, TpsTransform):
            raise CliFailure(EXIT_USAGE, "phantoms can only be rendered under rigid/affine transforms")
    elif args.rotate_deg:
        transform = RigidTransform(rotation_xyz(*([args.rotate_deg] * 3)), np.zeros(3))
    timer = Timer()
    with timer.stage("render"):
        ph = generate_phantom(spec, transform)
    with staged(Path(args.out_dir)) as stage:
        write_volume(stage / "image.raw", ph.image)
        write_volume(stage / "labels.raw", ph.labels)
        write_keypoints(stage / "landmarks.csv", ph.landmarks)
        if not args.no_acts:
            write_activations(stage / "acts.raw", ph.activations)
        if transform is not None:
            save_transform(stage / "render_transform.json", transform)
        rec = _base_record("phantom", argv, inputs)
        rec.update(spec={k: list(v) if isinstance(v, tuple) else v for k, v in asdict(spec).items()})
        rec["labels_present"] = sorted(int(x) for x in np.unique(ph.labels.data))
        inputs.verify()
        rec["timings_ms"] = timer.ms
        _write_report(stage / "report.jsonl", [rec])
    return EXIT_OK


def cmd_warp(args, argv) -> int:
    inputs = Inputs()
    T = _load("transform", load_transform, inputs.add(args.transform))
    vol = _load("volume", read_volume, inputs.add(args.input))
    timer = Timer()
    with timer.stage("warp"):
        out = warp(vol, T, _parse_dims(args.out_dims), args.interpolation, args.chunk_voxels)
    out_path = Path(args.output)
    with staged(out_path.parent if str(out_path.parent) else Path(".")) as stage:
        write_volume(stage / out_path.name, out)
        inputs.verify()
    rec = _base_record("warp", argv, inputs)
    rec.update(output=str(out_path), transform=transform_summary(T), timings_ms=timer.ms)
    print(json.dumps(rec))
    return EXIT_OK


def cmd_metrics(args, argv) -> int:
    inputs = Inputs()
    pred = _load("volume", read_volume, inputs.add(args.pred))
    ref = _load("volume", read_volume, inputs.add(args.ref))
    if not (pred.is_label and ref.is_label):
        raise CliFailure(EXIT_USAGE, "metrics need label volumes (u16le)")
    rec = _base_record("metrics", argv, inputs)
    try:
        rec.update(_label_metrics(pred, ref, args.hd95, args.labels))
    except KeysolveError as exc:
        raise CliFailure(EXIT_USAGE, str(exc)) from exc
    inputs.verify()
    line = json.dumps(rec)
    if args.out:
        out = Path(args.out)
        with staged(out.parent if str(out.parent) else Path(".")) as stage:
            (stage / out.name).write_text(line + "\n")
    print(line)
    return EXIT_OK


def cmd_sweep_lambda(args, argv) -> int:
    inputs = Inputs()
    kpm, kpf, w = _keypoints_from_args(args, inputs, None)
    vols = None
    if args.moving_labels or args.fixed_labels:
        if not (args.moving_labels and args.fixed_labels):
            raise CliFailure(EXIT_USAGE, "--moving-labels and --fixed-labels go together")
        vols = (
            _load("volume", read_volume, inputs.add(args.moving_labels)),
            _load("volume", read_volume, inputs.add(args.fixed_labels)),
        )
    if any(lam < 0 for lam in args.lambdas):
        raise CliFailure(EXIT_USAGE, "lambda values must be nonnegative")
    records = []
    with staged(Path(args.out_dir)) as stage:
        for i, lam in enumerate(args.lambdas):
            timer = Timer()
            with timer.stage("solve"):
                T, diag = solve("tps", kpf, kpm, lam, w)
            with timer.stage("bending_energy"):
                energy = bending_energy(T, args.energy_grid)
            name = f"transform_{i:03d}.json"
            save_transform(stage / name, T)
            rec = _base_record("sweep-lambda", argv, inputs)
            rec.update(
                row=i,
                **{"lambda": lam},
                transform_file=name,
                bending_energy=energy,
                control_point_residual_rms=residual_rms(T, kpf, kpm),
                diagnostics=asdict(diag),
            )
            if vols is not None:
                with timer.stage("metrics"):
                    ml, fl = vols
                    wl = warp(ml, T, fl.dims, "nearest", args.chunk_voxels, fl.spacing_mm)
                    rec.update(_label_metrics(wl, fl))
            rec["timings_ms"] = timer.ms
            records.append(rec)
        inputs.verify()
        _write_report(stage / "report.jsonl", records)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _nonneg_float(s):
    v = float(s)
    if not np.isfinite(v) or v < 0:
        raise argparse.ArgumentTypeError("must be a finite nonnegative number")
    return v


def _pos_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _add_keypoint_flags(p):
    p.add_argument("--kp-moving", help="moving keypoints CSV")
    p.add_argument("--kp-fixed", help="fixed keypoints CSV")
    p.add_argument("--acts-moving", help="moving activation stack (raw + .json header)")
    p.add_argument("--acts-fixed", help="fixed activation stack (raw + .json header)")
    p.add_argument("--weighted", action="store_true", help="use correspondence weights")
    p.add_argument("--weight-temperature", type=float, default=1.0,
                   help="softmax temperature for energy-product weights")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="keysolve", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("register", help="pairwise registration from keypoints")
    p.add_argument("--moving", required=True)
    p.add_argument("--fixed", required=True)
    _add_keypoint_flags(p)
    p.add_argument("--moving-labels")
    p.add_argument("--fixed-labels")
    p.add_argument("--family", choices=["rigid", "affine", "tps"], default="affine")
    p.add_argument("--lambda", dest="lam", type=_nonneg_float, default=0.0)
    p.add_argument("--interpolation", choices=["trilinear", "nearest"])
    p.add_argument("--out-dims", type=_pos_int, nargs="+")
    p.add_argument("--chunk-voxels", type=_pos_int, default=DEFAULT_CHUNK_VOXELS)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_register)

    p = sub.add_parser("groupwise", help="keypoint-only groupwise registration")
    p.add_argument("--subjects", nargs="+", required=True, metavar="VOL,KP[,LABELS]")
    p.add_argument("--no-volumes", action="store_true", help="subjects are keypoint CSVs only")
    p.add_argument("--family", choices=["rigid", "affine", "tps"], default="rigid")
    p.add_argument("--lambda", dest="lam", type=_nonneg_float, default=0.0)
    p.add_argument("--tol", type=_nonneg_float, default=1e-5)
    p.add_argument("--max-iters", type=_pos_int, default=20)
    p.add_argument("--out-dims", type=_pos_int, nargs="+")
    p.add_argument("--chunk-voxels", type=_pos_int, default=DEFAULT_CHUNK_VOXELS)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_groupwise)

    p = sub.add_parser("phantom", help="render a synthetic phantom with oracle landmarks")
    p.add_argument("--spec", help="JSON file with PhantomSpec fields")
    p.add_argument("--dims", type=_pos_int, nargs="+")
    p.add_argument("--n-landmarks", type=int)
    p.add_argument("--n-labels", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--blob-sigma", type=float)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--rotate-deg", type=float, help="render rotated by this angle about all axes")
    g.add_argument("--transform", help="render under a rigid/affine transform JSON")
    p.add_argument("--no-acts", action="store_true", help="skip writing activation maps")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("warp", help="warp one volume with a transform")
    p.add_argument("--transform", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--interpolation", choices=["trilinear", "nearest"])
    p.add_argument("--out-dims", type=_pos_int, nargs="+")
    p.add_argument("--chunk-voxels", type=_pos_int, default=DEFAULT_CHUNK_VOXELS)
    p.set_defaults(func=cmd_warp)

    p = sub.add_parser("metrics", help="Dice and Hausdorff between label volumes")
    p.add_argument("--pred", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--labels", type=int, nargs="+")
    p.add_argument("--hd95", action="store_true", help="95th-percentile Hausdorff instead of max")
    p.add_argument("--out", help="also write the report line here")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("sweep-lambda", help="TPS solutions over a list of lambdas")
    _add_keypoint_flags(p)
    p.add_argument("--lambdas", type=_nonneg_float, nargs="+", required=True)
    p.add_argument("--moving-labels")
    p.add_argument("--fixed-labels")
    p.add_argument("--energy-grid", type=int, default=24)
    p.add_argument("--chunk-voxels", type=_pos_int, default=DEFAULT_CHUNK_VOXELS)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_sweep_lambda)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        thread_count()
        return args.func(args, argv)
    except CliFailure as exc:
        print(f"keysolve {args.command}: {exc}", file=sys.stderr)
        return exc.code
    except SolverError as exc:
        print(f"keysolve {args.command}: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"keysolve {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (KeysolveError, ValueError) as exc:
        print(f"keysolve {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
