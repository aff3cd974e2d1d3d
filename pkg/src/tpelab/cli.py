"""Command-line front end for the averaging-operator lab.

Subcommands: gen, spectrum, sweep, mix, verify, lemma.  Every randomized
command takes an explicit --seed (there is no wall-clock default), and any
command rerun with identical flags produces byte-identical primary outputs.
Report commands that write delimited files also render a PNG figure next to
them unless --no-figures is given.
"""

from __future__ import annotations

import argparse
import hashlib
import itertools
import json
import math
import sys

import numpy as np

from tpelab import rng
from tpelab.channels import (
    KrausChannel,
    channel_gap,
    measure_2tpe_epsilon,
    sign_expander,
    unitary_mixture,
    z_phase_expander,
)
from tpelab.classical import ClassicalTpeOperator, lambda_estimate
from tpelab.lemma import LEMMA_CSV_HEADER, check_lemma, lemma_csv_row, sample_lemma_instance
from tpelab.mixing import MixingTrace, iterate_channel, iterate_classical
from tpelab.perms import (
    PermutationFamily,
    cayley_family,
    cyclic_group_table,
    doubled_counterexample,
    hermitian_family,
    matching_family,
)
from tpelab.quantum import (
    QuantumTpeOperator,
    UnitaryFamily,
    hermitian_unitary_family,
    lambda_estimate_quantum,
)
from tpelab.serialize import dumps
from tpelab.spectral import (
    DEFAULT_DENSE_CAP,
    DEFAULT_DIM_CAP,
    DEFAULT_MAX_ITERS,
    DEFAULT_RESTARTS,
    DEFAULT_TOL,
    DimensionCapError,
    SpectralReport,
    dense_leading_vector,
    power_solve,
)
from tpelab.verify import run_suite

CSV_VERSION = "#tpe-lab-csv-v1"


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--max-iters", type=int, default=DEFAULT_MAX_ITERS)
    p.add_argument("--restarts", type=int, default=DEFAULT_RESTARTS)
    p.add_argument("--dense-cap", type=int, default=DEFAULT_DENSE_CAP)
    p.add_argument("--dim-cap", type=int, default=DEFAULT_DIM_CAP)


def _add_out_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="write the primary output to this file")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--no-figures", action="store_true", help="skip PNG rendering next to --out")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tpelab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a family or channel file")
    g.add_argument(
        "kind",
        choices=("classical", "quantum", "matching", "doubled", "cayley", "sign", "zphase"),
    )
    g.add_argument("--n", type=int, help="number of points / matrix size N")
    g.add_argument("--d", type=int, help="family degree D")
    g.add_argument("--seed", type=int, help="generator seed (required for randomized kinds)")
    g.add_argument("--base", help="input family file (doubled, sign, zphase)")
    g.add_argument("--order", type=int, help="cyclic group order (cayley)")
    g.add_argument("--generators", help="comma-separated generator elements (cayley)")
    g.add_argument("--table", help="JSON file with a group multiplication table (cayley)")
    g.add_argument("--epsilon", type=float, help="mixing weight parameter (zphase); measured when omitted")
    g.add_argument("--hermitian-variant", action="store_true", help="adjoint-closed zphase Kraus list")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("spectrum", help="one spectral report row for a family or channel file")
    s.add_argument("--family", required=True, help="family or channel JSON file")
    s.add_argument("--k", type=int, default=1, help="number of copies (family inputs)")
    s.add_argument("--mode", choices=("auto", "eigen", "singular"), default="auto")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--oracle", choices=("dense",), help="also print a dense reference value")
    s.add_argument("--dump-vector", help="write the leading deflated vector to this JSON file")
    _add_solver_flags(s)
    _add_out_flags(s)
    s.set_defaults(func=cmd_spectrum)

    w = sub.add_parser("sweep", help="grid of spectral reports with summary quantiles")
    w.add_argument("--construction", choices=("classical", "matching", "quantum"), default="classical")
    w.add_argument("--n-list", required=True, help="comma-separated N values")
    w.add_argument("--d-list", default="4", help="comma-separated D values")
    w.add_argument("--k-list", default="1", help="comma-separated copy counts")
    w.add_argument("--seeds", type=int, default=1, help="repetitions per cell")
    w.add_argument("--mode", choices=("auto", "eigen", "singular"), default="auto")
    w.add_argument("--seed", type=int, required=True, help="base seed; cell seed = base + cell index")
    _add_solver_flags(w)
    _add_out_flags(w)
    w.set_defaults(func=cmd_sweep)

    m = sub.add_parser("mix", help="iterate a channel or classical operator toward flat")
    m.add_argument("--input", required=True, help="family or channel JSON file")
    m.add_argument("--k", type=int, default=1, help="copies (classical family inputs)")
    m.add_argument("--m-max", type=int, default=30)
    m.add_argument("--lambda-ref", type=float, help="override the measured reference magnitude")
    m.add_argument("--seed", type=int, required=True)
    _add_solver_flags(m)
    _add_out_flags(m)
    m.set_defaults(func=cmd_mix)

    v = sub.add_parser("verify", help="run a named check suite; exit 0 iff all checks pass")
    v.add_argument("suite", choices=("identities", "counterexamples", "theorem3", "lemma", "mixing", "moments"))
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--instances", type=int, help="lemma suite instance count")
    v.add_argument("--trials", type=int, help="theorem3 suite trial count")
    v.add_argument("--samples", type=int, help="moments suite sample count")
    v.add_argument("--out", help="also write the JSON verdict here")
    v.set_defaults(func=cmd_verify)

    le = sub.add_parser("lemma", help="sample mixture-norm instances and tabulate margins")
    le.add_argument("--instances", type=int, default=1000)
    le.add_argument("--dims", default="2-8", help="dimension range lo-hi or comma list")
    le.add_argument("--seed", type=int, required=True)
    _add_out_flags(le)
    le.set_defaults(func=cmd_lemma)

    return ap


def _int_list(text: str) -> list:
    return [int(x) for x in text.split(",") if x.strip() != ""]


def _dims_list(text: str) -> list:
    if "-" in text and "," not in text:
        lo, hi = text.split("-", 1)
        return list(range(int(lo), int(hi) + 1))
    return _int_list(text)


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def _write_text(path: str, text: str) -> None:
    with open(path, "w") as fh:
        fh.write(text)


def _emit(args, text: str) -> None:
    sys.stdout.write(text)
    if args.out:
        _write_text(args.out, text)


def _figure_path(out: str) -> str:
    stem = out[:-4] if out.endswith(".csv") or out.endswith(".json") else out
    if out.endswith(".json"):
        stem = out[:-5]
    return stem + ".png"


def _require(args, names) -> None:
    missing = [n for n in names if getattr(args, n.replace("-", "_")) is None]
    if missing:
        raise ValueError(f"gen {args.kind} requires {', '.join('--' + n for n in missing)}")


def cmd_gen(args) -> int:
    kind = args.kind
    if kind == "classical":
        _require(args, ("n", "d", "seed"))
        fam = hermitian_family(args.n, args.d, rng.stream(args.seed))
        text = dumps(fam.to_dict())
        _write_text(args.out, text)
        _digest_line(kind, fam.N, fam.D, fam.hermitian, text)
    elif kind == "matching":
        _require(args, ("n", "d", "seed"))
        fam = matching_family(args.n, args.d, rng.stream(args.seed))
        text = dumps(fam.to_dict())
        _write_text(args.out, text)
        _digest_line(kind, fam.N, fam.D, fam.hermitian, text)
    elif kind == "quantum":
        _require(args, ("n", "d", "seed"))
        fam = hermitian_unitary_family(args.n, args.d, rng.stream(args.seed))
        text = dumps(fam.to_dict())
        _write_text(args.out, text)
        resid = max(
            float(np.max(np.abs(u.conj().T @ u - np.eye(fam.N)))) for u in fam.members
        )
        _digest_line(kind, fam.N, fam.D, fam.hermitian, text)
        print(f"unitarity residual {resid:.3e}")
    elif kind == "doubled":
        _require(args, ("base",))
        base = _load_classical(args.base)
        fam = doubled_counterexample(base)
        text = dumps(fam.to_dict())
        _write_text(args.out, text)
        _digest_line(kind, fam.N, fam.D, fam.hermitian, text)
    elif kind == "cayley":
        if args.table:
            with open(args.table) as fh:
                table = np.asarray(json.load(fh)["table"], dtype=np.int64)
        else:
            _require(args, ("order",))
            table = cyclic_group_table(args.order)
        _require(args, ("generators",))
        fam = cayley_family(table, _int_list(args.generators))
        text = dumps(fam.to_dict())
        _write_text(args.out, text)
        _digest_line(kind, fam.N, fam.D, fam.hermitian, text)
    elif kind == "sign":
        _require(args, ("base", "seed"))
        ch = sign_expander(_load_classical(args.base), rng.stream(args.seed))
        text = dumps(ch.to_dict())
        _write_text(args.out, text)
        _digest_line(kind, ch.N, ch.D, ch.hermitian, text)
    elif kind == "zphase":
        _require(args, ("base",))
        base = _load_classical(args.base)
        eps = args.epsilon
        if eps is None:
            eps = measure_2tpe_epsilon(base)
            print(f"measured epsilon {eps!r}")
        ch = z_phase_expander(base, eps, hermitian_variant=args.hermitian_variant)
        text = dumps(ch.to_dict())
        _write_text(args.out, text)
        _digest_line(kind, ch.N, ch.D, ch.hermitian, text)
    return 0


def _digest_line(kind: str, n: int, d: int, hermitian: bool, text: str) -> None:
    print(f"{kind}: N={n} D={d} hermitian={str(hermitian).lower()} sha256={_sha256(text)}")


def _load_classical(path: str) -> PermutationFamily:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("type") != "classical":
        raise ValueError(f"{path}: expected a classical family file")
    return PermutationFamily.from_dict(payload)


def _load_any(path: str):
    with open(path) as fh:
        payload = json.load(fh)
    t = payload.get("type")
    if t == "classical":
        return PermutationFamily.from_dict(payload)
    if t == "quantum":
        return UnitaryFamily.from_dict(payload)
    if t == "channel":
        return KrausChannel.from_dict(payload)
    raise ValueError(f"{path}: unknown input type {t!r}")


def _resolve_mode(mode: str, hermitian: bool) -> str:
    if mode == "auto":
        return "eigen" if hermitian else "singular"
    return mode


def _spectrum_report(obj, args, seed_path: int = 0):
    """Returns (report, op_or_channel).  op is None for channel inputs."""
    stream = rng.stream(args.seed, seed_path)
    if isinstance(obj, PermutationFamily):
        op = ClassicalTpeOperator(obj, args.k, dim_cap=args.dim_cap)
        mode = _resolve_mode(args.mode, op.hermitian)
        rep = lambda_estimate(
            op, mode=mode, tol=args.tol, max_iters=args.max_iters,
            restarts=args.restarts, stream=stream, dense_cap=args.dense_cap,
        )
        return rep, op
    if isinstance(obj, UnitaryFamily):
        op = QuantumTpeOperator(obj, args.k, dim_cap=args.dim_cap)
        mode = _resolve_mode(args.mode, op.hermitian)
        rep = lambda_estimate_quantum(
            op, mode=mode, tol=args.tol, max_iters=args.max_iters,
            restarts=args.restarts, stream=stream, dense_cap=args.dense_cap,
        )
        return rep, op
    mode = _resolve_mode(args.mode, obj.hermitian)
    rep = channel_gap(
        obj, mode=mode, tol=args.tol, max_iters=args.max_iters,
        restarts=args.restarts, stream=stream, dense_cap=args.dense_cap, seed=args.seed,
    )
    return rep, None


def _vector_payload(vec: np.ndarray, lam: float) -> dict:
    if np.iscomplexobj(vec):
        entries = [[float(z.real), float(z.imag)] for z in vec]
    else:
        entries = [float(x) for x in vec]
    return {"dim": len(entries), "lambda": lam, "vector": entries}


def _dump_vector(obj, args, rep: SpectralReport) -> None:
    mode = rep.mode
    if isinstance(obj, PermutationFamily):
        op = ClassicalTpeOperator(obj, args.k, dim_cap=args.dim_cap)
        apply, adj, deflate = op.apply, op.apply_adjoint, op.deflate
        dim, dense, basis, cplx = op.dim, op.to_dense, op.trivial_basis_matrix, False
        hermitian = op.hermitian
    elif isinstance(obj, UnitaryFamily):
        op = QuantumTpeOperator(obj, args.k, dim_cap=args.dim_cap)
        apply, adj, deflate = op.apply_hat, op.apply_hat_adjoint, op.deflate
        dim, dense, basis, cplx = op.dim, op.to_dense, op.twirl_basis_matrix, True
        hermitian = op.hermitian
    else:
        from tpelab.channels import superop_apply, superop_dense

        n = obj.N
        fixed = (np.eye(n).reshape(-1) / math.sqrt(n)).astype(complex)
        apply = lambda v: superop_apply(obj, v)
        adj = lambda v: superop_apply(obj, v, adjoint=True)
        deflate = lambda v: v - fixed * np.vdot(fixed, v)
        dim, dense, basis, cplx = n * n, lambda: superop_dense(obj), lambda: fixed[:, None], True
        hermitian = obj.hermitian
    if dim <= args.dense_cap:
        lam, vec = dense_leading_vector(dense(), basis(), mode, hermitian)
    else:
        res = power_solve(
            apply, adj, deflate, dim, mode, complex_dtype=cplx, tol=args.tol,
            max_iters=args.max_iters, restarts=args.restarts, stream=rng.stream(args.seed, 1),
        )
        lam, vec = res.est, res.vector
    _write_text(args.dump_vector, dumps(_vector_payload(vec, lam)))


def cmd_spectrum(args) -> int:
    obj = _load_any(args.family)
    rep, _ = _spectrum_report(obj, args)
    if args.format == "json":
        _emit(args, dumps(rep.to_dict()))
    else:
        _emit(args, f"{CSV_VERSION}\n{SpectralReport.CSV_HEADER}\n{rep.csv_row()}\n")
    if args.oracle == "dense":
        dense_args = argparse.Namespace(**vars(args))
        dense_args.dense_cap = max(args.dense_cap, _operator_dim(obj, args))
        dense_rep, _ = _spectrum_report(obj, dense_args)
        print(f"# oracle dense: lambda={dense_rep.lam!r}")
    if args.dump_vector:
        _dump_vector(obj, args, rep)
    return 0


def _operator_dim(obj, args) -> int:
    if isinstance(obj, PermutationFamily):
        return obj.N**args.k
    if isinstance(obj, UnitaryFamily):
        return obj.N ** (2 * args.k)
    return obj.N**2


def cmd_sweep(args) -> int:
    if not args.out:
        raise ValueError("sweep requires --out")
    n_list = _int_list(args.n_list)
    d_list = _int_list(args.d_list)
    k_list = _int_list(args.k_list)
    cells = sorted(itertools.product(n_list, d_list, k_list, range(args.seeds)))
    rows: list = []
    errors: list = []
    csv_mode = args.format == "csv"
    fh = open(args.out, "w") if csv_mode else None
    if fh:
        fh.write(f"{CSV_VERSION}\n{SpectralReport.CSV_HEADER}\n")
        fh.flush()
    try:
        for idx, (n, d, k, _rep) in enumerate(cells):
            cell_seed = args.seed + idx
            try:
                fam = _sweep_family(args.construction, n, d, cell_seed)
                cell_args = argparse.Namespace(**vars(args))
                cell_args.k = k
                cell_args.seed = cell_seed
                rep, _ = _spectrum_report(fam, cell_args, seed_path=1)
                rows.append(rep)
                if fh:
                    fh.write(rep.csv_row() + "\n")
                    fh.flush()
            except (ValueError, np.linalg.LinAlgError) as exc:
                errors.append(f"# error cell={idx} N={n} D={d} k={k} seed={cell_seed}: {exc}")
    finally:
        if fh:
            fh.close()

    rows.sort(key=lambda r: (r.N, r.D, r.k, r.seed))
    summary = _sweep_summary(rows)
    if csv_mode:
        text = f"{CSV_VERSION}\n{SpectralReport.CSV_HEADER}\n"
        text += "".join(r.csv_row() + "\n" for r in rows)
        text += "".join(line + "\n" for line in errors)
        text += "".join(line + "\n" for line in summary)
        _write_text(args.out, text)
    else:
        payload = {"rows": [r.to_dict() for r in rows], "errors": errors, "summary": summary}
        _write_text(args.out, dumps(payload))
    for line in errors + summary:
        print(line)
    print(f"{len(rows)} rows -> {args.out}")
    if not args.no_figures and rows:
        from tpelab import plots

        plots.sweep_figure([r.to_dict() for r in rows], _figure_path(args.out))
    return 0


def _sweep_family(construction: str, n: int, d: int, seed: int):
    if construction == "classical":
        return hermitian_family(n, d, rng.stream(seed))
    if construction == "matching":
        return matching_family(n, d, rng.stream(seed))
    return hermitian_unitary_family(n, d, rng.stream(seed))


def _sweep_summary(rows) -> list:
    out = []
    keyed: dict = {}
    for r in rows:
        keyed.setdefault((r.N, r.D, r.k), []).append(r.lam)
    for (n, d, k), lams in sorted(keyed.items()):
        arr = np.asarray(lams)
        out.append(
            f"# summary N={n} D={d} k={k}: count={arr.size}"
            f" q10={float(np.quantile(arr, 0.1))!r}"
            f" median={float(np.median(arr))!r}"
            f" q90={float(np.quantile(arr, 0.9))!r}"
        )
    return out


def cmd_mix(args) -> int:
    obj = _load_any(args.input)
    if isinstance(obj, PermutationFamily):
        op = ClassicalTpeOperator(obj, args.k, dim_cap=args.dim_cap)
        lam = args.lambda_ref
        if lam is None:
            mode = "eigen" if op.hermitian else "singular"
            lam = lambda_estimate(
                op, mode=mode, tol=args.tol, max_iters=args.max_iters,
                restarts=args.restarts, stream=rng.stream(args.seed, 1),
                dense_cap=args.dense_cap,
            ).lam
        p0 = np.zeros(op.dim)
        p0[0] = 1.0
        trace = iterate_classical(op, p0, args.m_max, lam, seed=args.seed)
    else:
        ch = unitary_mixture(obj.members, obj.hermitian) if isinstance(obj, UnitaryFamily) else obj
        lam = args.lambda_ref
        if lam is None:
            mode = "eigen" if ch.hermitian else "singular"
            lam = channel_gap(
                ch, mode=mode, tol=args.tol, max_iters=args.max_iters,
                restarts=args.restarts, stream=rng.stream(args.seed, 1),
                dense_cap=args.dense_cap, seed=args.seed,
            ).lam
        st = rng.stream(args.seed, 2)
        psi = st.standard_normal(ch.N) + 1j * st.standard_normal(ch.N)
        psi /= np.linalg.norm(psi)
        trace = iterate_channel(ch, np.outer(psi, psi.conj()), args.m_max, lam, seed=args.seed)
    if lam >= 1.0 - 1e-9:
        print("# note: reference magnitude is 1 within tolerance; bounds are vacuous")
    if args.format == "json":
        payload = {
            "construction": trace.construction, "N": trace.N, "D": trace.D,
            "k": trace.k, "seed": trace.seed, "lambda_ref": trace.lambda_ref,
            "rows": [
                {"m": m, "l2": l2, "l1": l1, "bound_l2": trace.bound_l2(m),
                 "bound_l1": trace.bound_l1(m), "violated": m in set(trace.violations())}
                for m, l2, l1 in trace.rows
            ],
        }
        _emit(args, dumps(payload))
    else:
        text = f"{CSV_VERSION}\n{MixingTrace.CSV_HEADER}\n"
        text += "".join(row + "\n" for row in trace.csv_rows())
        _emit(args, text)
    viols = trace.violations()
    print(f"# {len(trace.rows)} steps, {len(viols)} bound violations")
    if args.out and not args.no_figures:
        from tpelab import plots

        plots.mix_figure(trace, _figure_path(args.out))
    return 0


def cmd_verify(args) -> int:
    kwargs = {}
    if args.suite == "lemma" and args.instances is not None:
        kwargs["instances"] = args.instances
    if args.suite == "theorem3" and args.trials is not None:
        kwargs["trials"] = args.trials
    if args.suite == "moments" and args.samples is not None:
        kwargs["samples"] = args.samples
    verdict = run_suite(args.suite, args.seed, **kwargs)
    text = dumps(verdict)
    sys.stdout.write(text)
    if args.out:
        _write_text(args.out, text)
    return 0 if verdict["passed"] else 1


def cmd_lemma(args) -> int:
    dims = _dims_list(args.dims)
    st = rng.stream(args.seed)
    records = []
    csv_rows = []
    for i in range(args.instances):
        dim = int(dims[int(st.integers(0, len(dims)))])
        if dim < 2:
            raise ValueError("lemma instances need dim >= 2")
        rank = int(st.integers(1, dim))
        ex = float(st.uniform(0.01, 0.99))
        ey = float(st.uniform(0.01, 0.99))
        p = 1.0 / (1.0 + ex) if i % 5 == 0 else None
        inst = sample_lemma_instance(dim, ex, ey, rank, st, p=p)
        norm, bound, _, passed = check_lemma(inst)
        csv_rows.append(lemma_csv_row(inst, norm, bound, passed))
        records.append(
            {
                "dim": inst.dim, "rank_pi": rank, "eps_x": ex, "eps_y": ey,
                "p": inst.p, "norm": norm, "bound": bound,
                "margin": bound - norm, "pass": passed,
            }
        )
    if args.format == "json":
        _emit(args, dumps(records))
    else:
        text = f"{CSV_VERSION}\n{LEMMA_CSV_HEADER}\n" + "".join(r + "\n" for r in csv_rows)
        _emit(args, text)
    failures = sum(not r["pass"] for r in records)
    print(f"# {args.instances} instances, {failures} bound violations")
    if args.out and not args.no_figures:
        from tpelab import plots

        plots.lemma_figure(records, _figure_path(args.out))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DimensionCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
