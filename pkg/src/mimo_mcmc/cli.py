"""Experiment command line: deterministic surveys with CSV/JSON outputs.

Every command is a pure function of its flags and master seed: outputs are
byte-identical across reruns and across worker-pool sizes (the env var
MIMO_MCMC_THREADS caps the pool; workers get per-trial derived seeds and
the aggregation is order-independent).  dB-to-linear SNR conversion happens
here and nowhere else.

Exit codes: 0 success, 2 usage error, 3 infeasible configuration,
4 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__, detectors, localmin, model, spectral, temperature

EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_CAP = 4

# seed-derivation namespaces (mixed into SeedSequence entropy)
_NS_INSTANCE = 0
_NS_CHAIN = 1
_NS_NOISE = 2


class InfeasibleError(Exception):
    """Configuration is valid syntax but has no feasible solution."""


class ResourceCapError(Exception):
    """Requested work exceeds a documented dimension/size cap."""


def derive_seed(master: int, namespace: int, index: int = 0) -> int:
    """Collision-resistant per-trial seed from a master seed."""
    ss = np.random.SeedSequence([int(master), int(namespace), int(index)])
    return int(ss.generate_state(1)[0])


def db_to_linear(snr_db: float) -> float:
    return float(10.0 ** (snr_db / 10.0))


def _float_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}") from exc


def _int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated int list: {text!r}") from exc


def _threads() -> int:
    raw = os.environ.get("MIMO_MCMC_THREADS", "")
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        return 1


def _pool_map(fn, jobs: list):
    """Order-preserving map over a process pool capped by MIMO_MCMC_THREADS."""
    workers = _threads()
    if workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    chunk = max(1, len(jobs) // (8 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=chunk))


def _atomic_write(path: str, data: str) -> None:
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-manifest-")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return repr(v) if np.isfinite(v) else ("inf" if v > 0 else "-inf")
    return str(value)


def _write_csv(path: str, header: list[str], rows: list[list]) -> str:
    """RFC-4180 CSV with a trailing manifest-reference comment line."""
    manifest_name = os.path.basename(path) + ".manifest.json"
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
        f.write(f"# manifest: {manifest_name}\n")
    return path


def _write_manifest(out_path: str, command: str, config: dict, seed: int,
                    outputs: list[str], started: str) -> str:
    path = out_path + ".manifest.json"
    payload = {
        "command": command,
        "version": __version__,
        "master_seed": seed,
        "config": config,
        "outputs": [os.path.basename(p) for p in outputs],
        "started_at": started,
        "finished_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _make_kind(name: str, epsilon: float | None) -> model.ChannelKind:
    if name in ("gaussian-iid", "gaussian"):
        return model.ChannelKind.gaussian_iid()
    if name in ("orthogonal-columns", "orthogonal"):
        return model.ChannelKind.orthogonal_columns()
    if name in ("exponential-local-minima", "exponential"):
        return model.ChannelKind.exponential_local_minima(0.5 if epsilon is None else epsilon)
    raise InfeasibleError(f"unsupported channel kind {name!r}")


def _resolve_alphas(tokens: str, snr: float, n: int, zeta: float) -> list[float]:
    """--alpha value: comma floats, 'auto', 'auto-default', 'noise', 'sqrt-snr'."""
    out: list[float] = []
    for tok in tokens.split(","):
        tok = tok.strip()
        if tok in ("auto", "auto-default"):
            sol = temperature.solve_alpha_exact(snr, n, zeta)
            if sol.feasible:
                out.append(sol.alpha_plus)
            elif tok == "auto-default":
                out.append(temperature.default_alpha(snr))
            else:
                raise InfeasibleError(
                    f"alpha solve infeasible at snr={snr:.4g}, n={n} "
                    f"(rhs={sol.rhs:.4g} < 4); pass --alpha explicitly or use auto-default"
                )
        elif tok == "noise":
            out.append(1.0)
        elif tok == "sqrt-snr":
            out.append(float(np.sqrt(np.sqrt(snr))))  # alpha^2 = sqrt(snr)
        else:
            try:
                out.append(float(tok))
            except ValueError:
                raise argparse.ArgumentTypeError(f"bad alpha token {tok!r}")
    return out


# ---------------------------------------------------------------- alpha-table


def cmd_alpha_table(args) -> int:
    started = _now()
    rows = []
    for snr_db in args.snr_db:
        snr = db_to_linear(snr_db)
        approx = temperature.solve_alpha_approx(snr, args.n)
        for zeta in args.zeta:
            try:
                exact = temperature.solve_alpha_exact(snr, args.n, zeta)
            except ValueError as exc:
                raise InfeasibleError(str(exc))
            feasible = exact.feasible and approx.feasible
            rows.append([
                snr_db,
                zeta,
                exact.alpha_plus if exact.feasible else None,
                approx.alpha_plus if approx.feasible else None,
                feasible,
            ])
    out = _write_csv(
        args.out,
        ["snr_db", "zeta", "alpha_exact_plus", "alpha_approx_plus", "feasible"],
        rows,
    )
    _write_manifest(args.out, "alpha-table", _config_dict(args), args.seed, [out], started)
    return 0


# ------------------------------------------------------------------ ber-sweep


def _ber_trial(job: tuple) -> dict:
    (master, trial, n, snr, alpha, variant, schedule, iterations,
     cadence, kind_name, epsilon, regen, dets, channel_seed) = job
    kind = {
        "gaussian-iid": model.ChannelKind.gaussian_iid(),
        "orthogonal-columns": model.ChannelKind.orthogonal_columns(),
        "exponential-local-minima": model.ChannelKind.exponential_local_minima(epsilon or 0.5),
    }[kind_name]
    if regen == "noise":
        inst = model.generate_instance(channel_seed, n, snr, kind)
        inst = model.regenerate_noise(inst, derive_seed(master, _NS_NOISE, trial))
    else:
        inst = model.generate_instance(derive_seed(master, _NS_INSTANCE, trial), n, snr, kind)
    out: dict = {}
    if "mcmc" in dets:
        cfg = detectors.McmcConfig(
            alpha=alpha, variant=variant, schedule=schedule,
            iterations=iterations, seed=derive_seed(master, _NS_CHAIN, trial),
            checkpoint_every=cadence,
        )
        trace = detectors.run_detector(inst, cfg)
        out["mcmc"] = [
            (c.step, detectors.bit_errors(c.best_x, inst.x_true)) for c in trace.checkpoints
        ]
    if "zf" in dets:
        out["zf"] = detectors.bit_errors(detectors.zf_detect(inst), inst.x_true)
    if "lmmse" in dets:
        out["lmmse"] = detectors.bit_errors(detectors.lmmse_detect(inst), inst.x_true)
    if "ml" in dets:
        ml_x, _ = model.exhaustive_ml(inst)
        out["ml"] = detectors.bit_errors(ml_x, inst.x_true)
    return out


def cmd_ber_sweep(args) -> int:
    started = _now()
    dets = tuple(tok.strip() for tok in args.detectors.split(",") if tok.strip())
    for d in dets:
        if d not in ("mcmc", "zf", "lmmse", "ml", "auto"):
            raise argparse.ArgumentTypeError(f"unknown detector {d!r}")
    if dets == ("auto",):
        dets = ("mcmc", "zf", "lmmse", "ml") if args.n <= model.EXHAUSTIVE_CAP else ("mcmc", "zf", "lmmse")
    if "ml" in dets and args.n > model.EXHAUSTIVE_CAP:
        raise ResourceCapError(f"ml baseline needs n <= {model.EXHAUSTIVE_CAP}, got n={args.n}")
    rows = []
    bits = args.n * args.trials
    for snr_db in args.snr_db:
        snr = db_to_linear(snr_db)
        for alpha in _resolve_alphas(args.alpha, snr, args.n, args.zeta):
            jobs = [
                (args.seed, t, args.n, snr, alpha, args.variant, args.schedule,
                 args.iterations, args.checkpoint_every, args.kind, args.epsilon,
                 args.regen, dets, derive_seed(args.seed, _NS_INSTANCE, 2**31))
                for t in range(args.trials)
            ]
            results = _pool_map(_ber_trial, jobs)
            if "mcmc" in dets:
                steps = [s for s, _ in results[0]["mcmc"]]
                totals = np.zeros(len(steps), dtype=np.int64)
                for res in results:
                    totals += np.array([e for _, e in res["mcmc"]])
                for step, errs in zip(steps, totals):
                    rows.append([snr_db, alpha, "mcmc", step, int(errs), bits, errs / bits])
            for det in ("zf", "lmmse", "ml"):
                if det in dets:
                    errs = sum(res[det] for res in results)
                    rows.append([snr_db, alpha, det, 0, errs, bits, errs / bits])
    out = _write_csv(
        args.out,
        ["snr_db", "alpha", "detector", "iteration", "bit_errors", "bits", "ber"],
        rows,
    )
    _write_manifest(args.out, "ber-sweep", _config_dict(args), args.seed, [out], started)
    return 0


# ------------------------------------------------------------- localmin-survey


def _localmin_trial(job: tuple) -> tuple:
    master, trial, n, snr, kind_name, epsilon, noise_free = job
    kind = {
        "gaussian-iid": model.ChannelKind.gaussian_iid(),
        "orthogonal-columns": model.ChannelKind.orthogonal_columns(),
        "exponential-local-minima": model.ChannelKind.exponential_local_minima(epsilon or 0.5),
    }[kind_name]
    seed = derive_seed(master, _NS_INSTANCE, trial)
    inst = model.generate_instance(seed, n, snr, kind)
    if noise_free:
        inst = model.zero_noise(inst)
    report = localmin.enumerate_local_minima(inst)
    # smallest neighbor-energy gap over the local minima: the barrier that
    # controls the singleton bottleneck bound
    min_gap = None
    if report.count:
        min_gap = min(
            float(model.neighbor_energies(inst, x).min() - e) for x, e in report.minima
        )
    return seed, report.count, min_gap


def cmd_localmin_survey(args) -> int:
    started = _now()
    for n in args.n:
        if n > model.EXHAUSTIVE_CAP:
            raise ResourceCapError(f"exhaustive survey needs n <= {model.EXHAUSTIVE_CAP}, got {n}")
    snr = db_to_linear(args.snr_db)
    rows = []
    per_instance = []
    histogram: dict[str, dict[str, float]] = {}
    for n in args.n:
        jobs = [
            (args.seed, t + n * args.trials, n, snr, args.kind, args.epsilon, args.noise_free)
            for t in range(args.trials)
        ]
        results = _pool_map(_localmin_trial, jobs)
        counts = np.array([c for _, c, _ in results], dtype=np.int64)
        per_instance.extend(
            [seed, n, args.snr_db, count, gap] for seed, count, gap in results
        )
        mean = counts.mean()
        se_mean = counts.std(ddof=1) / np.sqrt(args.trials) if args.trials > 1 else 0.0
        p = float((counts >= 1).mean())
        se_p = float(np.sqrt(p * (1 - p) / args.trials))
        rows.append([n, args.trials, mean, se_mean, p, se_p])
        uniq, freq = np.unique(counts, return_counts=True)
        histogram[str(n)] = {str(int(u)): int(c) for u, c in zip(uniq, freq)}
    out = _write_csv(
        args.out,
        ["n", "trials", "mean_count", "se_count", "p_at_least_one", "se_p"],
        rows,
    )
    inst_path = _write_csv(
        args.out + ".instances.csv",
        ["seed", "n", "snr_db", "count", "min_energy_gap"],
        per_instance,
    )
    hist_path = args.out + ".hist.json"
    _atomic_write(hist_path, json.dumps(histogram, indent=2, sort_keys=True) + "\n")
    _write_manifest(args.out, "localmin-survey", _config_dict(args), args.seed,
                    [out, inst_path, hist_path], started)
    return 0


# ------------------------------------------------------------- spectral-survey


def _spectral_trial(job: tuple) -> tuple:
    master, trial, n, snr, alpha, epsilon, tmix_cap = job
    seed = derive_seed(master, _NS_INSTANCE, trial)
    inst = model.generate_instance(seed, n, snr)
    report = localmin.enumerate_local_minima(inst)
    P = spectral.build_transition_matrix(inst, alpha)
    pi = spectral.stationary_distribution(inst, alpha)
    gap_report = spectral.spectral_gap(P, pi)
    phi_singleton = None
    if report.count:
        phi_singleton = min(
            spectral.bottleneck_singleton(inst, alpha, x, verify=False).gamma_formula / 2.0
            for x, _ in report.minima
        )
    # tmix_cap 0 disables the (comparatively expensive) mixing-time column
    tmix = None
    if tmix_cap > 0:
        tmix = spectral.tv_mixing_time(P, pi, epsilon=epsilon, cap=tmix_cap)
    return (seed, gap_report.lambda2, gap_report.gap, phi_singleton, tmix, report.count)


def cmd_spectral_survey(args) -> int:
    started = _now()
    if args.n > 10:
        raise ResourceCapError(f"spectral survey capped at n <= 10, got {args.n}")
    snr = db_to_linear(args.snr_db)
    jobs = [
        (args.seed, t, args.n, snr, args.alpha, args.epsilon, args.tmix_cap)
        for t in range(args.trials)
    ]
    results = _pool_map(_spectral_trial, jobs)
    rows = [
        [seed, args.n, snr, args.alpha, lam2, gap, phi, tmix, count]
        for seed, lam2, gap, phi, tmix, count in results
    ]
    # gap histogram with 0.01-wide bins, grouped by the local-minima count
    histogram: dict[str, dict[str, int]] = {}
    for _, _, gap, _, _, count in results:
        bin_low = np.floor(gap / 0.01) * 0.01
        key = f"{bin_low:.2f}"
        histogram.setdefault(str(count), {})
        histogram[str(count)][key] = histogram[str(count)].get(key, 0) + 1
    out = _write_csv(
        args.out,
        ["seed", "n", "snr", "alpha", "lambda2", "gap", "phi_singleton",
         "tmix_emp", "n_local_minima"],
        rows,
    )
    hist_path = args.out + ".hist.json"
    _atomic_write(hist_path, json.dumps(histogram, indent=2, sort_keys=True) + "\n")
    _write_manifest(args.out, "spectral-survey", _config_dict(args), args.seed,
                    [out, hist_path], started)
    return 0


# --------------------------------------------------------------- mixing-probe


def cmd_mixing_probe(args) -> int:
    started = _now()
    kind = _make_kind(args.kind, args.epsilon_channel)
    exact_ok = args.n <= spectral.TV_CAP
    if not exact_ok and args.kind not in ("orthogonal", "orthogonal-columns"):
        raise ResourceCapError(
            f"exact TV mixing needs n <= {spectral.TV_CAP}; only orthogonal "
            f"channels support the coupling estimate beyond that"
        )

    snrs = [db_to_linear(s) for s in args.snr_db]
    seed_used = args.seed
    if args.require_local_minimum:
        found = False
        for candidate in range(args.seed, args.seed + 200):
            ok = True
            for snr in snrs:
                inst = model.generate_instance(candidate, args.n, snr, kind)
                if localmin.enumerate_local_minima(inst).count < 1:
                    ok = False
                    break
            if ok:
                seed_used = candidate
                found = True
                break
        if not found:
            raise InfeasibleError(
                "no instance with a local minimum at every requested SNR "
                f"within 200 seeds of {args.seed}"
            )

    rows = []
    for snr_db, snr in zip(args.snr_db, snrs):
        inst = model.generate_instance(seed_used, args.n, snr, kind)
        orthogonal = spectral.is_orthogonal_columns(inst)
        n_minima = localmin.enumerate_local_minima(inst).count if args.n <= model.EXHAUSTIVE_CAP else None
        for alpha in _resolve_alphas(args.alpha, snr, args.n, args.zeta):
            tmix = gap = None
            if exact_ok:
                P = spectral.build_transition_matrix(inst, alpha, args.variant)
                pi = spectral.stationary_distribution(inst, alpha, args.variant)
                gap = spectral.spectral_gap(P, pi).gap
                tmix = spectral.tv_mixing_time(P, pi, epsilon=args.epsilon, cap=args.tmix_cap)
            coupling = None
            if orthogonal:
                coupling = spectral.coupling_mixing_estimate(
                    inst, alpha, trials=args.trials,
                    seed=derive_seed(seed_used, _NS_CHAIN, 0), variant=args.variant,
                )
            rows.append([snr_db, alpha, args.variant, tmix, coupling, gap, n_minima, seed_used])
    out = _write_csv(
        args.out,
        ["snr_db", "alpha", "variant", "tmix_emp", "coupling_estimate", "gap",
         "n_local_minima", "seed"],
        rows,
    )
    _write_manifest(args.out, "mixing-probe", _config_dict(args), args.seed, [out], started)
    return 0


# ---------------------------------------------------------------- gen / detect


def cmd_gen_instance(args) -> int:
    started = _now()
    kind = _make_kind(args.kind, args.epsilon)
    inst = model.generate_instance(args.seed, args.n, db_to_linear(args.snr_db), kind)
    if args.noise_free:
        inst = model.zero_noise(inst)
    with open(args.out, "w") as f:
        f.write(model.to_json(inst) + "\n")
    _write_manifest(args.out, "gen-instance", _config_dict(args), args.seed, [args.out], started)
    return 0


def cmd_detect(args) -> int:
    started = _now()
    with open(args.instance) as f:
        inst = model.from_json(f.read())
    if args.detector == "mcmc":
        alphas = _resolve_alphas(args.alpha, inst.snr, inst.n, args.zeta)
        cfg = detectors.McmcConfig(
            alpha=alphas[0], variant=args.variant, schedule=args.schedule,
            iterations=args.iterations, seed=args.seed,
            checkpoint_every=args.checkpoint_every,
        )
        trace = detectors.run_detector(inst, cfg)
        payload = detectors.trace_to_json(trace)
    else:
        if args.detector == "zf":
            x_hat = detectors.zf_detect(inst)
        elif args.detector == "lmmse":
            x_hat = detectors.lmmse_detect(inst)
        elif args.detector == "ml":
            if inst.n > model.EXHAUSTIVE_CAP:
                raise ResourceCapError(f"ml needs n <= {model.EXHAUSTIVE_CAP}")
            x_hat, _ = model.exhaustive_ml(inst)
        else:
            raise argparse.ArgumentTypeError(f"unknown detector {args.detector!r}")
        payload = json.dumps(
            {
                "detector": args.detector,
                "x_hat": x_hat.astype(int).tolist(),
                "energy": model.residual_energy(inst, x_hat),
                "bit_errors_vs_true": detectors.bit_errors(x_hat, inst.x_true),
            },
            indent=2,
        )
    with open(args.out, "w") as f:
        f.write(payload + "\n")
    _write_manifest(args.out, "detect", _config_dict(args), args.seed, [args.out], started)
    return 0


# -------------------------------------------------------------------- plumbing


def _config_dict(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mimo-mcmc",
        description="Gibbs detectors for integer least-squares problems: "
        "temperature tables, BER sweeps, local-minima and spectral surveys, "
        "mixing-time probes.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, seed=True, out=True):
        if seed:
            p.add_argument("--seed", type=int, default=0, help="master seed")
        if out:
            p.add_argument("--out", required=True, help="output file path")

    p = sub.add_parser("alpha-table", help="closed-form temperature solutions")
    p.add_argument("--snr-db", type=_float_list, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--zeta", type=_float_list, default=[1.0])
    common(p)
    p.set_defaults(func=cmd_alpha_table)

    p = sub.add_parser("ber-sweep", help="BER vs iterations for the detector family")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--snr-db", type=_float_list, required=True)
    p.add_argument("--alpha", default="auto",
                   help="comma floats | auto | auto-default | noise | sqrt-snr")
    p.add_argument("--zeta", type=float, default=1.0)
    p.add_argument("--detectors", default="auto", help="subset of mcmc,zf,lmmse,ml")
    p.add_argument("--iterations", type=int, default=100,
                   help="block sweeps (sequential) or single steps (random-scan)")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--variant", choices=["squared-norm", "norm-2"], default="squared-norm")
    p.add_argument("--schedule", choices=["sequential", "random-scan"], default="sequential")
    p.add_argument("--checkpoint-every", type=int, default=None)
    p.add_argument("--kind", default="gaussian-iid",
                   choices=["gaussian-iid", "orthogonal-columns", "exponential-local-minima"])
    p.add_argument("--epsilon", type=float, default=None,
                   help="epsilon for the exponential channel construction")
    p.add_argument("--regen", choices=["both", "noise"], default="both",
                   help="regenerate channel+noise per trial, or noise only")
    common(p)
    p.set_defaults(func=cmd_ber_sweep)

    p = sub.add_parser("localmin-survey", help="local-minima counts over an ensemble")
    p.add_argument("--n", type=_int_list, required=True)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--snr-db", type=float, default=10.0)
    p.add_argument("--noise-free", action="store_true")
    p.add_argument("--kind", default="gaussian-iid",
                   choices=["gaussian-iid", "orthogonal-columns", "exponential-local-minima"])
    p.add_argument("--epsilon", type=float, default=None)
    common(p)
    p.set_defaults(func=cmd_localmin_survey)

    p = sub.add_parser("spectral-survey", help="spectral gaps vs local-minima counts")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--snr-db", type=float, default=10.0)
    p.add_argument("--epsilon", type=float, default=0.25, help="TV threshold for tmix")
    p.add_argument("--tmix-cap", type=int, default=10**6)
    common(p)
    p.set_defaults(func=cmd_spectral_survey)

    p = sub.add_parser("mixing-probe", help="mixing time vs SNR and temperature policy")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--kind", default="orthogonal-columns",
                   choices=["gaussian-iid", "orthogonal-columns", "exponential-local-minima"])
    p.add_argument("--alpha", default="noise",
                   help="comma floats | auto | auto-default | noise | sqrt-snr")
    p.add_argument("--zeta", type=float, default=1.0)
    p.add_argument("--snr-db", type=_float_list, required=True)
    p.add_argument("--epsilon", type=float, default=1.0 / np.e)
    p.add_argument("--variant", choices=["squared-norm", "norm-2"], default="squared-norm")
    p.add_argument("--trials", type=int, default=1000, help="coupling trials")
    p.add_argument("--tmix-cap", type=int, default=10**6)
    p.add_argument("--epsilon-channel", type=float, default=None)
    p.add_argument("--require-local-minimum", action="store_true")
    common(p)
    p.set_defaults(func=cmd_mixing_probe)

    p = sub.add_parser("gen-instance", help="write one problem instance as JSON")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--snr-db", type=float, required=True)
    p.add_argument("--kind", default="gaussian-iid",
                   choices=["gaussian-iid", "orthogonal-columns", "exponential-local-minima"])
    p.add_argument("--epsilon", type=float, default=None,
                   help="epsilon for the exponential channel construction")
    p.add_argument("--noise-free", action="store_true")
    common(p)
    p.set_defaults(func=cmd_gen_instance)

    p = sub.add_parser("detect", help="run one detector on an instance JSON")
    p.add_argument("--instance", required=True, help="instance JSON path")
    p.add_argument("--detector", choices=["mcmc", "zf", "lmmse", "ml"], default="mcmc")
    p.add_argument("--alpha", default="auto-default")
    p.add_argument("--zeta", type=float, default=1.0)
    p.add_argument("--iterations", type=int, default=100)
    p.add_argument("--variant", choices=["squared-norm", "norm-2"], default="squared-norm")
    p.add_argument("--schedule", choices=["sequential", "random-scan"], default="sequential")
    p.add_argument("--checkpoint-every", type=int, default=None)
    common(p)
    p.set_defaults(func=cmd_detect)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ResourceCapError, model.DimensionCapError) as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except argparse.ArgumentTypeError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
