"""Command-line front end: ``toruslab <command> [options]``.

Every command writes its data files plus a run manifest (JSON) listing the
command line, seed, tool version, input and output SHA-256 digests and the
wall time. ``toruslab replay MANIFEST`` re-runs a manifest and compares the
output digests.

Exit codes: 0 success, 2 usage error (bad flags or observable text),
3 numerical or domain failure, 4 file or format error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import io as tio
from .classical import S_DEGI, BakerMap, CatMap, KickedCatMap, SymplecticMatrix, classical_variance, lyapunov
from .errors import FormatError, ToruslabError
from .maps import eigensystem, perturbed_cat, quantize_baker, quantize_cat
from .obsparse import ObservableSyntaxError, format_observable, parse_observable
from .phase_space import husimi_grid, reconstruct_check, stellar_zeros
from .rng import substream
from .scars import default_ldos_width, half_scarred_state, scan_short_periods, smoothed_ldos
from .stats import (chi2_nodal_test, describe, eigen_averages, nodal_census_torus, qe_fraction,
                    quantum_variance, random_real_state, random_state, variance_ratio)
from .nodal import nodal_census
from .torus import coherent_state, momentum_state, position_state
from .waves import (correlation_estimate, sample_bessel_field, sample_plane_wave_field, sup_norm_scan,
                    value_moments)

MANIFEST_FORMAT = "toruslab-manifest/1"
DEFAULT_KICK = "cos(2pi*(1x+0p)) + cos(2pi*(0x+1p))"
RECONSTRUCTION_TOL = 1e-6


class _Run:
    """Collects input and output paths of one command."""

    def __init__(self):
        self.inputs: list[Path] = []
        self.outputs: list[Path] = []

    def read(self, path) -> Path:
        self.inputs.append(Path(path))
        return Path(path)

    def wrote(self, paths) -> None:
        if isinstance(paths, (str, Path)):
            paths = [paths]
        self.outputs.extend(Path(p) for p in paths)


def _digests(paths) -> list[dict]:
    return [{"path": str(p), "sha256": tio.sha256_file(p)} for p in paths]


def _matrix(args) -> SymplecticMatrix:
    return SymplecticMatrix(args.a, args.b, args.c, args.d)


def _observable(text: str, real: bool = True):
    return parse_observable(text, real=True if real else None)


# ---------------------------------------------------------------------------
# Commands


def cmd_state(args, run: _Run):
    N = args.N
    if args.kind == "random":
        st = random_state(N, args.seed, args.index)
    elif args.kind == "random-real":
        st = random_real_state(N, args.seed, args.index)
    elif args.kind == "coherent":
        st = coherent_state(N, args.x, args.p)
    elif args.kind == "position":
        st = position_state(N, args.index)
    else:
        st = momentum_state(N, args.index)
    run.wrote(tio.write_state(args.out, st))


def _write_spectrum(args, run: _Run, U):
    spec = eigensystem(U)
    run.wrote(tio.write_spectrum(args.out, spec))
    if args.vectors:
        run.wrote(tio.write_state_bundle(args.vectors, spec.states(), {"label": spec.label}))


def cmd_cat_spectrum(args, run: _Run):
    S = _matrix(args)
    if args.eps:
        U = perturbed_cat(S, args.N, args.eps, _observable(args.kick), strict=not args.generators)
    else:
        U = quantize_cat(S, args.N, strict=not args.generators)
    _write_spectrum(args, run, U)


def cmd_baker_spectrum(args, run: _Run):
    _write_spectrum(args, run, quantize_baker(args.N))


def cmd_husimi(args, run: _Run):
    st = tio.read_state(run.read(args.state))
    run.wrote(tio.write_husimi(args.out, husimi_grid(st, args.grid)))


def cmd_zeros(args, run: _Run):
    st = tio.read_state(run.read(args.state))
    zeros = stellar_zeros(st)
    run.wrote(tio.write_zeros(args.out, zeros))
    if args.check_reconstruction:
        rng = substream(args.seed, "zeros-probes", 0)
        pts = rng.uniform(0, 1, (256, 2))
        probes = pts[:, 0] - 1j * pts[:, 1]
        d = np.abs(probes[:, None] - zeros.z[None, :])
        probes = probes[d.min(axis=1) > 0.05][:64] if len(zeros.z) else probes[:64]
        dev = reconstruct_check(st, zeros, probes)
        doc = {"N": st.N, "zeros": zeros.total, "n_probes": len(probes), "max_deviation": dev,
               "tolerance": RECONSTRUCTION_TOL, "passed": dev < RECONSTRUCTION_TOL}
        run.wrote(tio.write_json(tio.sidecar_path(args.out), doc, "toruslab-zeros-check/1"))
        print(f"reconstruction deviation {dev:.3e} over {len(probes)} probes")
        if dev >= RECONSTRUCTION_TOL:
            raise ToruslabError(f"theta-product reconstruction deviation {dev:.3e} >= {RECONSTRUCTION_TOL}")


def _propagator(args):
    if args.map == "baker":
        return quantize_baker(args.N), BakerMap()
    S = _matrix(args)
    if args.map == "kicked":
        H = _observable(args.kick)
        return perturbed_cat(S, args.N, args.eps, H, strict=not args.generators), KickedCatMap(S, args.eps, H)
    return quantize_cat(S, args.N, strict=not args.generators), CatMap(S)


def cmd_qvariance(args, run: _Run):
    f = _observable(args.obs)
    U, kappa = _propagator(args)
    spec = eigensystem(U)
    avgs = eigen_averages(spec, f)
    vc = classical_variance(kappa, f.centered(), args.tmax, n_points=args.mc_points, seed=args.seed)
    qv = quantum_variance(spec, f)
    extra = {"observable": format_observable(f), "map": U.label, "quantum_variance": qv,
             "classical_variance": vc.value, "classical_variance_stderr": vc.stderr,
             "classical_remainder_bound": vc.remainder_bound, "T_max": args.tmax,
             "ratio": variance_ratio(spec, f, vc.value) if vc.value > 0 else float("nan"),
             "qe_fraction_0.1": qe_fraction(spec, f, 0.1)}
    rep = describe(avgs, f"eigenstate averages of {format_observable(f)} for {U.label}", bins=32,
                   seed=args.seed, **extra)
    run.wrote(tio.write_json(args.out, rep.to_dict(), "toruslab-statreport/1"))


def cmd_ldos(args, run: _Run):
    S = _matrix(args)
    spec = eigensystem(quantize_cat(S, args.N, strict=not args.generators))
    width = args.width if args.width else default_ldos_width(args.N, lyapunov(S))
    run.wrote(tio.write_ldos(args.out, smoothed_ldos(spec, (args.x, args.p), width)))


def cmd_scar_scan(args, run: _Run):
    recs = scan_short_periods(_matrix(args), range(args.nmin, args.nmax + 1), args.factor, verify=args.verify)
    rows = ((r.N, r.T_N, r.T_E, r.T_N / r.T_E if r.T_N else None, r.candidate) for r in recs)
    run.wrote(tio.write_table(args.out, "periods", ["N", "T_N", "T_E", "ratio", "candidate"], rows))


def cmd_half_scar(args, run: _Run):
    st, rep = half_scarred_state(_matrix(args), args.N, (args.x, args.p), radius=args.radius, M=args.grid,
                                 rank=args.rank)
    run.wrote(tio.write_json(args.out, rep.to_dict(), "toruslab-scar/1"))
    if args.state_out:
        run.wrote(tio.write_state(args.state_out, st))


def cmd_rwm_corr(args, run: _Run):
    M = args.grid or int(2 ** math.ceil(math.log2(16 * args.k / (2 * np.pi))))
    fields = [sample_plane_wave_field(args.k, None, args.seed, M, index=i) for i in range(args.samples)]
    kr = np.linspace(0, args.krmax, args.npoints)
    R = args.R if args.R else max(10.0 / args.k, 0.1)
    curve = correlation_estimate(fields, R, kr / args.k)
    rows = zip(curve.r, kr, curve.C, curve.stderr, curve.reference())
    run.wrote(tio.write_table(args.out, "correlation", ["r", "kr", "C", "stderr", "J0"], rows))
    print(f"RMS deviation from J0: {curve.rms_deviation():.4f}")


def cmd_rwm_moments(args, run: _Run):
    M = args.grid or int(2 ** math.ceil(math.log2(16 * args.k / (2 * np.pi))))
    fields = [sample_plane_wave_field(args.k, None, args.seed, M, index=i) for i in range(args.samples)]
    rep = value_moments(fields)
    rep.seed = args.seed
    run.wrote(tio.write_json(args.out, rep.to_dict(), "toruslab-statreport/1"))


def cmd_rwm_nodal(args, run: _Run):
    res = nodal_census(args.k, args.samples, args.seed, M=args.grid, periodic=not args.open, saddle=args.saddle)
    run.wrote(tio.write_json(args.out, res.to_dict(), "toruslab-census/1"))


def cmd_rwm_field(args, run: _Run):
    M = args.grid or int(2 ** math.ceil(math.log2(16 * args.k / (2 * np.pi))))
    if args.ensemble == "bessel":
        f = sample_bessel_field(args.k, None, args.seed, M, index=args.index)
    else:
        f = sample_plane_wave_field(args.k, None, args.seed, M, index=args.index, periodic=args.periodic)
    run.wrote(tio.write_field(args.out, f))


def cmd_rwm_supnorm(args, run: _Run):
    ks = [float(x) for x in args.klist.split(",") if x.strip()]
    rep = sup_norm_scan(ks, args.samples, args.seed)
    run.wrote(tio.write_json(args.out, rep.to_dict(), "toruslab-statreport/1"))


def cmd_torus_nodal(args, run: _Run):
    counts = nodal_census_torus(args.N, args.samples, args.seed)
    stat, p = chi2_nodal_test(counts, args.N)
    rep = describe(counts, f"position sign changes of random real states N={args.N}",
                   bins=np.arange(args.N + 1) - 0.5, seed=args.seed,
                   chi2=stat, p_value=p, counts=counts.tolist())
    run.wrote(tio.write_json(args.out, rep.to_dict(), "toruslab-statreport/1"))


# ---------------------------------------------------------------------------
# Parser


def _add_common(p: argparse.ArgumentParser, out_default: str) -> None:
    p.add_argument("--seed", type=int, default=0, help="global 64-bit seed (default 0)")
    p.add_argument("--out", default=out_default, help=f"output file (default {out_default})")
    p.add_argument("--manifest", default=None, help="manifest path (default OUT.manifest.json)")


def _add_matrix(p: argparse.ArgumentParser) -> None:
    for name, default in zip("abcd", (S_DEGI.a, S_DEGI.b, S_DEGI.c, S_DEGI.d)):
        p.add_argument(f"--{name}", type=int, default=default)
    p.add_argument("--generators", action="store_true",
                   help="allow matrices without the checkerboard property (generator factorisation)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="toruslab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"toruslab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("state", help="write a torus state (TQS1)")
    p.add_argument("--kind", choices=["random", "random-real", "coherent", "position", "momentum"], required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--index", type=int, default=0, help="sample index or basis label")
    p.add_argument("--x", type=float, default=0.0)
    p.add_argument("--p", type=float, default=0.0)
    _add_common(p, "state.tqs")
    p.set_defaults(func=cmd_state)

    p = sub.add_parser("cat-spectrum", help="eigenphases of a (perturbed) quantum cat map")
    _add_matrix(p)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--kick", default=DEFAULT_KICK, help="kick Hamiltonian (observable text)")
    p.add_argument("--vectors", default=None, help="also write eigenvectors as a state bundle")
    _add_common(p, "cat-spectrum.csv")
    p.set_defaults(func=cmd_cat_spectrum)

    p = sub.add_parser("baker-spectrum", help="eigenphases of the quantum baker's map")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--vectors", default=None)
    _add_common(p, "baker-spectrum.csv")
    p.set_defaults(func=cmd_baker_spectrum)

    p = sub.add_parser("husimi", help="Husimi density of a state as a 16-bit PGM")
    p.add_argument("--state", required=True)
    p.add_argument("--grid", type=int, default=128)
    _add_common(p, "husimi.pgm")
    p.set_defaults(func=cmd_husimi)

    p = sub.add_parser("zeros", help="certified zeros of the Bargmann function")
    p.add_argument("--state", required=True)
    p.add_argument("--check-reconstruction", action="store_true")
    _add_common(p, "zeros.csv")
    p.set_defaults(func=cmd_zeros)

    p = sub.add_parser("qvariance", help="eigenstate averages and quantum variance")
    p.add_argument("--map", choices=["cat", "kicked", "baker"], default="cat")
    _add_matrix(p)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--kick", default=DEFAULT_KICK)
    p.add_argument("--obs", required=True, help="observable, e.g. 'cos(2pi*(1x+0p))'")
    p.add_argument("--tmax", type=int, default=10, help="correlation sum horizon")
    p.add_argument("--mc-points", type=int, default=200_000)
    _add_common(p, "qvariance.json")
    p.set_defaults(func=cmd_qvariance)

    p = sub.add_parser("ldos", help="smoothed local density of states of a coherent state")
    _add_matrix(p)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--x", type=float, default=0.0)
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--width", type=float, default=None, help="default: 2 pi / (2 T_E)")
    _add_common(p, "ldos.csv")
    p.set_defaults(func=cmd_ldos)

    p = sub.add_parser("scar-scan", help="propagator periods and scar candidates")
    _add_matrix(p)
    p.add_argument("--nmin", type=int, default=2)
    p.add_argument("--nmax", type=int, required=True)
    p.add_argument("--factor", type=float, default=4.0)
    p.add_argument("--verify", action="store_true", help="certify each period on the propagator")
    _add_common(p, "scar-scan.csv")
    p.set_defaults(func=cmd_scar_scan)

    p = sub.add_parser("half-scar", help="projected coherent state at a fixed point")
    _add_matrix(p)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--x", type=float, default=0.0)
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--radius", type=float, default=0.1)
    p.add_argument("--grid", type=int, default=128)
    p.add_argument("--rank", type=int, default=0)
    p.add_argument("--state-out", default=None)
    _add_common(p, "half-scar.json")
    p.set_defaults(func=cmd_half_scar)

    def rwm(name, help_, out, func, samples=True):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--k", type=float, required=True)
        if samples:
            p.add_argument("--samples", type=int, default=20)
        p.add_argument("--grid", type=int, default=None, help="grid size M (default: 16 points per wavelength, power of 2)")
        _add_common(p, out)
        p.set_defaults(func=func)
        return p

    p = rwm("rwm-corr", "two-point function of random plane-wave fields", "rwm-corr.csv", cmd_rwm_corr)
    p.add_argument("--R", type=float, default=None, help="averaging disk radius (default max(10/k, 0.1))")
    p.add_argument("--krmax", type=float, default=10.0)
    p.add_argument("--npoints", type=int, default=41)
    rwm("rwm-moments", "value moments of random plane-wave fields", "rwm-moments.json", cmd_rwm_moments)
    p = rwm("rwm-nodal", "nodal domain census", "rwm-nodal.json", cmd_rwm_nodal)
    p.add_argument("--open", action="store_true", help="non-periodic fields (drop boundary domains from areas)")
    p.add_argument("--saddle", choices=["none", "bilinear"], default="none")
    p = rwm("rwm-field", "dump one random field (float32 + sidecar)", "rwm-field.f32", cmd_rwm_field, samples=False)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--ensemble", choices=["plane", "bessel"], default="plane")
    p.add_argument("--periodic", action="store_true")

    p = sub.add_parser("rwm-supnorm", help="sup-norm ratios against sqrt(log k)")
    p.add_argument("--klist", required=True, help="comma-separated wavenumbers")
    p.add_argument("--samples", type=int, default=20)
    _add_common(p, "rwm-supnorm.json")
    p.set_defaults(func=cmd_rwm_supnorm)

    p = sub.add_parser("torus-nodal", help="sign-change counts of random real states with a chi-square test")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--samples", type=int, default=2000)
    _add_common(p, "torus-nodal.json")
    p.set_defaults(func=cmd_torus_nodal)

    p = sub.add_parser("replay", help="re-run a manifest and compare output digests")
    p.add_argument("manifest")
    p.set_defaults(func=None)
    return ap


# ---------------------------------------------------------------------------
# Entry points


def _run_command(argv: list[str]) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "replay":
        return replay(args.manifest)
    run = _Run()
    t0 = time.perf_counter()
    try:
        args.func(args, run)
        code = 0
    except ObservableSyntaxError as exc:
        print(f"toruslab: error: {exc}", file=sys.stderr)
        return 2
    except (FormatError, OSError) as exc:
        print(f"toruslab: I/O error: {exc}", file=sys.stderr)
        return 4
    except (ToruslabError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"toruslab: {type(exc).__name__}: {exc}", file=sys.stderr)
        code = 3
    manifest = Path(args.manifest) if args.manifest else Path(str(args.out) + ".manifest.json")
    doc = {"argv": list(argv), "command": args.command, "seed": args.seed, "tool_version": __version__,
           "inputs": _digests(run.inputs), "outputs": _digests(run.outputs),
           "wall_time_s": time.perf_counter() - t0, "exit_code": code}
    try:
        tio.write_json(manifest, doc, MANIFEST_FORMAT)
    except OSError as exc:
        print(f"toruslab: I/O error: {exc}", file=sys.stderr)
        return 4
    return code


def replay(manifest_path) -> int:
    """Re-run the command recorded in a manifest; 0 if every output digest matches."""
    try:
        doc = tio.read_json(manifest_path, MANIFEST_FORMAT)
    except FormatError as exc:
        print(f"toruslab: I/O error: {exc}", file=sys.stderr)
        return 4
    for item in doc.get("inputs", []):
        if not Path(item["path"]).exists() or tio.sha256_file(item["path"]) != item["sha256"]:
            print(f"toruslab: input {item['path']} changed since the manifest was written", file=sys.stderr)
            return 4
    code = _run_command(list(doc["argv"]))
    if code != doc.get("exit_code", 0):
        print(f"toruslab: replay exit code {code}, recorded {doc.get('exit_code')}", file=sys.stderr)
        return code or 3
    mismatched = [o["path"] for o in doc.get("outputs", [])
                  if not Path(o["path"]).exists() or tio.sha256_file(o["path"]) != o["sha256"]]
    # the re-run rewrote the manifest with a fresh wall time; restore the original record
    Path(manifest_path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    for path in mismatched:
        print(f"toruslab: output {path} differs from the manifest digest", file=sys.stderr)
    if mismatched:
        return 3
    print(f"replay ok: {len(doc.get('outputs', []))} output(s) byte-identical")
    return 0


def main(argv: list[str] | None = None) -> int:
    return _run_command(list(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    sys.exit(main())
