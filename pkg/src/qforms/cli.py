"""Command line front end with reproducible JSON and text reports.

Every report embeds the resolved configuration and the library version,
and identical configuration (including seed) produces byte-identical
JSON.  Numeric claims carry a certification label: "exact" for rational
arithmetic, "interval" for certified enclosures, "estimate+-CI" for
Monte Carlo values, "informational-envelope" for bound comparisons with
no explicit constant.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import __version__
from .core import QuadraticForm, load_form
from .descent import descend_full
from .deltamethod import main_term_compare
from .errors import Budget, BudgetError, InputError, configured_budget
from .expsums import distinct_prime_count, eval_Sq, sq_envelope
from .lattice import enumerate_representations
from .localsolve import decide_strong_lsc, decide_weak_lsc, decide_weak_lsc_all
from .represent import scan_exceptions, theorem_envelope_report
from .singular import local_density, singular_series
from .zeros import (
    kneser_form,
    kneser_minimal_vector,
    lambda_envelope_report,
    search_zero,
)

ENVELOPE_NOTE = "constant-free (implied constant not specified)"


def _frac(x: Fraction) -> dict:
    return {"exact": f"{x.numerator}/{x.denominator}", "float": float(x)}


def _require(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise InputError(f"--{name.replace('_', '-')} is required here")


def _int_k(args) -> int:
    _require(args, "k")
    try:
        return int(args.k)
    except ValueError as exc:
        raise InputError(f"--k must be an integer, got {args.k!r}") from exc


def _csv_ints(text: str, flag: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part != ""]
    except ValueError as exc:
        raise InputError(f"--{flag} must be comma-separated integers") from exc


def _load(args) -> QuadraticForm:
    _require(args, "form")
    return load_form(args.form)


def _verdict_dict(v) -> dict:
    return {
        "prime": v.prime,
        "weak": v.weak,
        "strong": v.strong,
        "witness": list(v.witness) if v.witness is not None else None,
        "cutoff_used": v.cutoff_used,
        "certification": "exact",
    }


def _cmd_analyze(args, budget) -> dict:
    form = _load(args)
    env = form.eigen_envelope()
    return {
        "n": form.n,
        "determinant": form.determinant,
        "height": form.height,
        "classification": form.classification,
        "eigen_lower_bound": dict(
            _frac(env.min_abs_lower), certification="exact"
        ),
        "certification": "exact",
    }


def _cmd_locsolve(args, budget) -> dict:
    form = _load(args)
    k = _int_k(args)
    if args.p is not None:
        weak = decide_weak_lsc(form, k, args.p, budget=budget)
        strong = decide_strong_lsc(form, k, args.p, budget=budget)
        return {
            "k": k,
            "weak": _verdict_dict(weak),
            "strong": _verdict_dict(strong),
        }
    report = decide_weak_lsc_all(form, k, budget=budget)
    return {
        "k": k,
        "weak_everywhere": report.soluble,
        "verdicts": {str(p): _verdict_dict(v) for p, v in report.verdicts.items()},
        "automatic_reason": report.automatic_reason,
        "certification": "exact",
    }


def _cmd_density(args, budget) -> dict:
    form = _load(args)
    k = _int_k(args)
    if args.p is not None:
        d = local_density(form, k, args.p, tmax=args.tmax, budget=budget)
        return {
            "k": k,
            "prime": d.prime,
            "lower": _frac(d.lower),
            "upper": _frac(d.upper),
            "depth_used": d.depth_used,
            "method": d.method,
            "certification": "exact" if d.exact else "interval",
        }
    est = singular_series(form, k, pcut=args.pcut, budget=budget)
    return {
        "k": k,
        "pcut": est.pcut,
        "lower": _frac(est.lower),
        "upper": _frac(est.upper),
        "tail_lower": _frac(est.tail_lower),
        "tail_upper": _frac(est.tail_upper),
        "positive": est.positive,
        "certified": est.certified,
        "ramified": [
            {
                "prime": d.prime,
                "lower": _frac(d.lower),
                "upper": _frac(d.upper),
                "method": d.method,
            }
            for d in est.densities
        ],
        "certification": "interval",
    }


def _cmd_sums(args, budget) -> dict:
    form = _load(args)
    k = _int_k(args)
    _require(args, "q")
    shift = tuple(_csv_ints(args.c, "c")) if args.c else tuple([0] * form.n)
    if len(shift) != form.n:
        raise InputError(f"--c needs {form.n} comma-separated entries")
    res = eval_Sq(form, k, args.q, shift, budget=budget)
    envelope = sq_envelope(form, args.q)
    magnitude = abs(res.value)
    return {
        "k": k,
        "q": args.q,
        "c": list(shift),
        "real": res.value.real,
        "imaginary": res.value.imag,
        "magnitude": magnitude,
        "abs_err_bound": res.abs_err_bound,
        "method": res.method,
        "distinct_prime_factors": distinct_prime_count(args.q),
        "certification": "interval",
        "envelope": {
            "value": float(envelope),
            "ratio": magnitude / float(envelope),
            "note": ENVELOPE_NOTE,
            "certification": "informational-envelope",
        },
    }


def _envelope_entries(observed, envelopes) -> dict:
    out = {}
    for name, value in envelopes.items():
        entry = {
            "value": float(value),
            "note": ENVELOPE_NOTE,
            "certification": "informational-envelope",
        }
        if observed is not None:
            entry["ratio"] = float(observed) / float(value)
        out[name] = entry
    return out


def _cmd_zeros(args, budget) -> dict:
    form = _load(args)
    _require(args, "bound")
    result = search_zero(form, args.bound, require_x1=True, budget=budget)
    out = {
        "found": list(result.found) if result.found else None,
        "found_first_nonzero": (
            list(result.found_first_nonzero)
            if result.found_first_nonzero
            else None
        ),
        "search_bound": result.search_bound,
        "exhaustive": result.exhaustive,
        "certification": "exact",
    }
    if result.found is not None:
        report = lambda_envelope_report(form, result)
        values = {
            "cassels": report.cassels,
            "davenport": report.davenport,
            "masser": report.masser,
            "small-eigenvalue": report.theorem_small_eigen,
        }
        out["observed_max_norm"] = report.observed
        out["envelopes"] = {
            name: {
                "value": values[name],
                "ratio": ratio,
                "note": ENVELOPE_NOTE,
                "certification": "informational-envelope",
            }
            for name, ratio in report.ratios.items()
        }
    return out


def _cmd_kneser(args, budget) -> dict:
    _require(args, "c", "n")
    c = int(args.c)
    n = args.n
    form = kneser_form(c, n)
    vec = kneser_minimal_vector(c, n)
    assert form.evaluate(vec) == 0
    half_power = Fraction(form.height) ** (n - 1)
    out = {
        "c": c,
        "n": n,
        "gram": [list(row) for row in form.gram],
        "height": form.height,
        "closed_form_zero": list(vec),
        "closed_form_is_zero": True,
        "last_coordinate": vec[-1],
        "last_coordinate_exceeds_half_height_power": (
            Fraction(vec[-1]) ** 2 > half_power / 4
        ),
        "certification": "exact",
    }
    if args.search is not None:
        result = search_zero(form, args.search, require_x1=True, budget=budget)
        found = result.found_first_nonzero
        out["search"] = {
            "bound": args.search,
            "minimal_zero": list(found) if found else None,
            "matches_closed_form": found == vec,
            "exhaustive": result.exhaustive,
            "search_bound": result.search_bound,
            "certification": "exact",
        }
    return out


def _cmd_exceptional(args, budget) -> dict:
    form = _load(args)
    _require(args, "kmax")
    scan = scan_exceptions(form, args.kmax, budget=budget)
    out = {
        "bound": scan.bound,
        "weak_exceptions": list(scan.weak_exceptions),
        "strong_exceptions": list(scan.strong_exceptions),
        "kappa_observed": scan.kappa_observed,
        "kappa_star_observed": scan.kappa_star_observed,
        "automatic_reason": scan.automatic_reason,
        "certification": "exact",
    }
    if form.n >= 5:
        report = theorem_envelope_report(form, scan)
        out["envelopes"] = _envelope_entries(
            scan.kappa_observed if scan.weak_exceptions else None,
            report.envelopes,
        )
    return out


def _cmd_descend(args, budget) -> dict:
    form = _load(args)
    k = _int_k(args)
    trace = descend_full(form, k, budget=budget)
    cert = trace.certificate
    return {
        "k": k,
        "steps": [
            {
                "p": s.p,
                "case": s.case_tag,
                "k_before": s.k_before,
                "k_after": s.k_after,
                "theta": s.theta_increment,
                "transform": [list(r) for r in s.T],
                "gram_after": [list(r) for r in s.Q_after.gram],
            }
            for s in trace.steps
        ],
        "terminal_k": trace.terminal_k,
        "terminal_gram": [list(r) for r in trace.terminal_form.gram],
        "certificate": {
            "odd_primes_strong": sorted(cert.odd_verdicts),
            "two_adic_branch": cert.two_adic.branch,
            "sigma2_lower": _frac(cert.two_adic.sigma2.lower),
            "sigma2_threshold": _frac(cert.two_adic.threshold),
            "meets_threshold": cert.two_adic.meets_threshold,
        },
        "certification": "exact",
    }


def _cmd_delta(args, budget) -> dict:
    form = _load(args)
    ks = _csv_ints(args.k, "k") if args.k is not None else None
    bs = (
        [float(v) for v in _csv_ints(args.bound_list, "bound")]
        if args.bound_list is not None
        else None
    )
    schedule = main_term_compare(
        form,
        ks=ks,
        bs=bs,
        pcut=args.pcut,
        samples=args.samples,
        seed=args.seed,
        budget=budget,
    )
    reports = []
    for r in schedule.reports:
        reports.append(
            {
                "B": r.B,
                "k": r.k,
                "weighted_count": {"value": r.weighted, "certification": "exact"},
                "sigma_infty": {
                    "value": r.sigma_infty.value,
                    "ci": r.sigma_infty.ci,
                    "flagged": r.sigma_infty.flagged,
                    "certification": "estimate+-CI",
                },
                "singular_series": {
                    "lower": _frac(r.series.lower),
                    "upper": _frac(r.series.upper),
                    "point": r.series_factor,
                    "certification": "interval",
                },
                "main_term": r.main_term,
                "rel_error": r.rel_error,
                "flagged": r.flagged,
            }
        )
    return {
        "reports": reports,
        "empirical_decay": schedule.empirical_decay,
        "envelope_decay": {
            "value": schedule.envelope_decay,
            "note": ENVELOPE_NOTE,
            "certification": "informational-envelope",
        },
    }


_COMMANDS = {
    "analyze": _cmd_analyze,
    "locsolve": _cmd_locsolve,
    "density": _cmd_density,
    "sums": _cmd_sums,
    "zeros": _cmd_zeros,
    "kneser": _cmd_kneser,
    "exceptional": _cmd_exceptional,
    "descend": _cmd_descend,
    "delta": _cmd_delta,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qforms",
        description="exact arithmetic for classically integral quadratic forms",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "analyze": "determinant, height and classification of a form",
        "locsolve": "weak and strong local solubility of Q = k",
        "density": "one local density or the full singular series",
        "sums": "the complete exponential sum S_q(c)",
        "zeros": "smallest zero search for an indefinite form",
        "kneser": "the unimodular family with a large minimal zero",
        "exceptional": "locally soluble but unrepresented integers",
        "descend": "reduction of a pair failing strong solubility",
        "delta": "weighted count against the predicted main term",
    }
    for name, help_text in specs.items():
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--form", help="path to a JSON form file")
        cmd.add_argument("--k", help="target integer (comma list for delta)")
        cmd.add_argument("--p", type=int, help="prime for local questions")
        cmd.add_argument("--tmax", type=int, help="depth cap for counting")
        cmd.add_argument("--q", type=int, help="modulus for sums")
        cmd.add_argument("--c", help="comma-separated shift vector" if name == "sums" else "parameter c")
        cmd.add_argument("--n", type=int, help="rank parameter")
        if name == "delta":
            cmd.add_argument(
                "--bound",
                dest="bound_list",
                help="comma-separated scale list for the k = 0 schedule",
            )
        else:
            cmd.add_argument("--bound", type=int, help="search box bound")
        cmd.add_argument("--kmax", type=int, help="scan bound for exceptional")
        cmd.add_argument("--search", type=int, help="exhaustive search bound")
        cmd.add_argument("--pcut", type=int, default=1000, help="prime cutoff")
        cmd.add_argument("--samples", type=int, default=400_000)
        cmd.add_argument("--seed", type=int, default=0)
        cmd.add_argument("--threads", type=int, default=1, help="worker cap")
        cmd.add_argument("--json", action="store_true", dest="as_json")
    return parser


def _resolved_config(args, budget: Budget) -> dict:
    skip = {"as_json", "command"}
    flags = {
        key: value
        for key, value in sorted(vars(args).items())
        if key not in skip and value is not None
    }
    return {
        "command": args.command,
        "flags": flags,
        "budget_limit": budget.limit,
        "version": __version__,
    }


def _render_text(obj, indent: int = 0) -> None:
    pad = "  " * indent
    if isinstance(obj, dict):
        for key, value in obj.items():
            if isinstance(value, (dict, list)) and value:
                print(f"{pad}{key}:")
                _render_text(value, indent + 1)
            else:
                print(f"{pad}{key}: {value}")
    elif isinstance(obj, list):
        if all(not isinstance(v, (dict, list)) for v in obj):
            print(f"{pad}{obj}")
        else:
            for value in obj:
                _render_text(value, indent)
                print(f"{pad}-")
    else:
        print(f"{pad}{obj}")


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 2
    try:
        budget = Budget(limit=configured_budget())
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        report = _COMMANDS[args.command](args, budget)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BudgetError as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        if exc.partial is not None:
            print(f"partial result: {exc.partial}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports and exits
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    envelope = {"config": _resolved_config(args, budget), "report": report}
    if args.as_json:
        print(json.dumps(envelope, sort_keys=True, indent=2))
    else:
        _render_text(envelope)
    return 0


if __name__ == "__main__":
    sys.exit(main())
