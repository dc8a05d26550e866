"""Command-line pipeline: simulate -> analyze -> decompose2 -> report.

Every command writes a manifest next to its outputs and exits with 0 on
success, 2 for configuration errors, 3 for data errors, and 4 for
numerical failures; error messages are single-line ``CODE: message``.
The ``CPCA_THREADS`` environment variable caps simulation workers.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .analysis import (
    joint_photon_distribution,
    photon_distribution_from_samples,
    wigner_grid,
)
from .engine import accumulate_ct, eigendecompose, project
from .errors import CpcaError
from .fock import DensityMatrix
from .io import (
    RunManifest,
    StateConfig,
    dump_json,
    format_float,
    grid_meta,
    load_json,
    provenance_meta,
    read_frames,
    read_tmf_csv,
    write_frames,
    write_tmf_csv,
)
from .simulate import DetectorFilter, apply_detector_filters, generate_frames
from .twophoton import (
    decompose_two_photon_analytic,
    decompose_two_photon_frames,
    default_nbar_threshold,
)

DEFAULT_FRAMES = 20_000
DEFAULT_SEED = 12345
DEFAULT_REPORT_MODES = 50


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cpca",
        description="Temporal-mode estimation from dual-homodyne records",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a synthetic frame record")
    sim.add_argument("--state-config", required=True, help="state config JSON")
    sim.add_argument("--frames", type=int, default=DEFAULT_FRAMES)
    sim.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sim.add_argument("--filters", choices=("on", "off"), default="off")
    sim.add_argument("--highpass-hz", type=float, default=100e3)
    sim.add_argument("--lowpass-hz", type=float, default=14.3e6)
    sim.add_argument("--bins", type=int, default=None, help="override grid bin count")
    sim.add_argument("--duration-s", type=float, default=None, help="override grid duration")
    sim.add_argument("--out", required=True)

    ana = sub.add_parser("analyze", help="principal temporal modes of a frame record")
    ana.add_argument("--frames", required=True)
    ana.add_argument("--modes", type=int, default=DEFAULT_REPORT_MODES)
    ana.add_argument("--out", required=True)

    dec = sub.add_parser("decompose2", help="recover the two-photon mode pair")
    src = dec.add_mutually_exclusive_group(required=True)
    src.add_argument("--frames")
    src.add_argument("--oracle", help="state config JSON for the exact analytic path")
    dec.add_argument("--nbar-threshold", type=float, default=None)
    dec.add_argument("--out", required=True)

    rep = sub.add_parser("report", help="emit plot-ready CSV/JSON bundles")
    rep.add_argument("--decomposition", required=True, help="analyze output JSON")
    rep.add_argument("--frames", default=None, help="frame record for photon statistics")
    rep.add_argument("--modes", type=int, default=None, help="modes to include (default: occupied)")
    rep.add_argument("--photon-cutoff", type=int, default=4)
    rep.add_argument("--wigner", action="store_true", help="emit Wigner grids")
    rep.add_argument("--wigner-window", type=float, default=5.0)
    rep.add_argument("--wigner-resolution", type=int, default=81)
    rep.add_argument("--out", required=True, help="output directory")
    return parser


def _cmd_simulate(args) -> int:
    cfg = StateConfig.from_file(args.state_config)
    if args.bins is not None or args.duration_s is not None:
        raw = cfg.to_dict()
        if args.bins is not None:
            raw["grid"]["bins"] = args.bins
        if args.duration_s is not None:
            raw["grid"]["duration_s"] = args.duration_s
        cfg = StateConfig.from_dict(raw)
    state, grid = cfg.build()
    frames = generate_frames(state, grid, args.frames, args.seed)
    filters_meta = None
    if args.filters == "on":
        filt = DetectorFilter(highpass_hz=args.highpass_hz, lowpass_hz=args.lowpass_hz)
        frames = apply_detector_filters(frames, filt)
        filters_meta = filt.as_meta()
    out = Path(args.out)
    write_frames(out, frames)
    manifest = RunManifest(
        command="simulate",
        seed=args.seed,
        grid=grid_meta(grid),
        n_frames=args.frames,
        filters=filters_meta,
        state=provenance_meta(cfg.to_dict()),
    )
    manifest.add_input(args.state_config)
    manifest.add_output(out)
    manifest.write(out.with_suffix(out.suffix + ".manifest.json"))
    return 0


def _cmd_analyze(args) -> int:
    frames = read_frames(args.frames)
    dec = eigendecompose(accumulate_ct(frames))
    k = max(1, min(args.modes, frames.grid.M))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    manifest_path = out.with_suffix(out.suffix + ".manifest.json")
    mode_csvs = []
    for j in range(k):
        csv_path = out.with_name(f"{out.stem}_mode{j:02d}.csv")
        write_tmf_csv(csv_path, dec.eigenmodes[j], manifest_ref=manifest_path.name)
        mode_csvs.append(csv_path.name)
    payload = {
        "grid": grid_meta(frames.grid),
        "n_frames": frames.n_frames,
        "n_modes_reported": k,
        "eigenvalues": list(dec.eigenvalues[:k]),
        "nbar": list(dec.nbars[:k]),
        "unitarity_residual": dec.unitarity_residual,
        "modes_csv": mode_csvs,
        "manifest": manifest_path.name,
    }
    dump_json(payload, out)
    manifest = RunManifest(command="analyze", grid=grid_meta(frames.grid), n_frames=frames.n_frames)
    manifest.add_input(args.frames)
    manifest.add_output(out)
    for name in mode_csvs:
        manifest.add_output(out.with_name(name))
    manifest.write(manifest_path)
    return 0


def _solution_payload(sol, manifest_name: str, f1_csv: str, f2_csv: str) -> dict:
    return {
        "n1": sol.n1,
        "n2": sol.n2,
        "m22": sol.m22,
        "m211": sol.m211,
        "q_prime": sol.q_prime,
        "theta_rad": sol.theta,
        "Q": sol.Q,
        "alpha": sol.alpha,
        "beta": sol.beta,
        "gamma": sol.gamma,
        "branch": sol.branch,
        "D": [list(row) for row in sol.D],
        "overlap_f1_f2": sol.overlap,
        "standard_errors": sol.se,
        "spectrum_head_nbar": list(sol.spectrum_head),
        "f1_csv": f1_csv,
        "f2_csv": f2_csv,
        "manifest": manifest_name,
    }


def _cmd_decompose2(args) -> int:
    if args.oracle:
        cfg = StateConfig.from_file(args.oracle)
        state, grid = cfg.build()
        sol = decompose_two_photon_analytic(state, grid)
        source = args.oracle
    else:
        frames = read_frames(args.frames)
        sol = decompose_two_photon_frames(frames, nbar_threshold=args.nbar_threshold)
        source = args.frames
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    manifest_path = out.with_suffix(out.suffix + ".manifest.json")
    f1_csv = out.with_name(f"{out.stem}_f1.csv")
    f2_csv = out.with_name(f"{out.stem}_f2.csv")
    write_tmf_csv(f1_csv, sol.f1, manifest_ref=manifest_path.name)
    write_tmf_csv(f2_csv, sol.f2, manifest_ref=manifest_path.name)
    dump_json(_solution_payload(sol, manifest_path.name, f1_csv.name, f2_csv.name), out)
    manifest = RunManifest(command="decompose2")
    manifest.add_input(source)
    for p in (out, f1_csv, f2_csv):
        manifest.add_output(p)
    manifest.write(manifest_path)
    return 0


def _write_csv(path: Path, header: str, rows) -> None:
    lines = [header]
    for row in rows:
        lines.append(",".join(format_float(v) if isinstance(v, float) else str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _cmd_report(args) -> int:
    dec_payload = load_json(args.decomposition)
    dec_dir = Path(args.decomposition).parent
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    emitted = []

    eigenvalues = np.asarray(dec_payload["eigenvalues"], dtype=float)
    nbars = np.asarray(dec_payload["nbar"], dtype=float)
    spectrum = outdir / "spectrum.csv"
    _write_csv(
        spectrum,
        "mode_index,eigenvalue,nbar",
        [(j, float(ev), float(nb)) for j, (ev, nb) in enumerate(zip(eigenvalues, nbars))],
    )
    emitted.append(spectrum)

    frames = read_frames(args.frames) if args.frames else None
    n_frames = frames.n_frames if frames is not None else int(dec_payload.get("n_frames", 0))
    threshold = default_nbar_threshold(len(eigenvalues), max(n_frames, 1))
    occupied = [j for j, nb in enumerate(nbars) if nb > threshold]
    n_modes = args.modes if args.modes is not None else max(1, len(occupied))
    n_modes = min(n_modes, len(dec_payload["modes_csv"]))

    modes = []
    for j in range(n_modes):
        src = dec_dir / dec_payload["modes_csv"][j]
        tmf = read_tmf_csv(src)
        dest = outdir / f"tmf_mode{j:02d}.csv"
        write_tmf_csv(dest, tmf, manifest_ref="report.manifest.json")
        emitted.append(dest)
        modes.append(tmf)

    pearson = None
    if frames is not None:
        samples = [project(frames, m) for m in modes]
        for j, s in enumerate(samples):
            dist = photon_distribution_from_samples(s, cutoff=min(args.photon_cutoff, 5))
            path = outdir / f"photon_mode{j:02d}.csv"
            _write_csv(
                path,
                "n,p,se",
                [
                    (n, float(p), float(se))
                    for n, (p, se) in enumerate(zip(dist.probs, dist.se))
                ],
            )
            emitted.append(path)
            if args.wigner:
                rho = DensityMatrix(np.diag(dist.probs).astype(complex), (dist.probs.size,))
                grid = wigner_grid(rho, window=args.wigner_window, resolution=args.wigner_resolution)
                wpath = outdir / f"wigner_mode{j:02d}.csv"
                rows = []
                for ip_, pv in enumerate(grid.p):
                    for ix, xv in enumerate(grid.x):
                        rows.append((float(xv), float(pv), float(grid.values[ip_, ix])))
                _write_csv(wpath, "x,p,w", rows)
                emitted.append(wpath)
        if len(samples) >= 2:
            joint, pearson = joint_photon_distribution(
                samples[0], samples[1], cutoff=min(args.photon_cutoff, 4)
            )
            jpath = outdir / "joint_photon.csv"
            rows = []
            for m in range(joint.probs.shape[0]):
                for n in range(joint.probs.shape[1]):
                    rows.append((m, n, float(joint.probs[m, n]), float(joint.se[m, n])))
            _write_csv(jpath, "n,m,p,se", rows)
            emitted.append(jpath)

    manifest = RunManifest(command="report")
    manifest.add_input(args.decomposition)
    if args.frames:
        manifest.add_input(args.frames)
    payload = {
        "files": [p.name for p in emitted],
        "pearson_photon_correlation": pearson,
        "occupied_modes": occupied,
        "nbar_threshold": threshold,
        "manifest": "report.manifest.json",
    }
    report_json = outdir / "report.json"
    dump_json(payload, report_json)
    emitted.append(report_json)
    for p in emitted:
        manifest.add_output(p)
    manifest.write(outdir / "report.manifest.json")
    return 0


_DISPATCH = {
    "simulate": _cmd_simulate,
    "analyze": _cmd_analyze,
    "decompose2": _cmd_decompose2,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _DISPATCH[args.command](args)
    except CpcaError as exc:
        print(exc.one_line(), file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"EIO: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
