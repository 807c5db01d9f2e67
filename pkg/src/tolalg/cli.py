"""Command-line interface.

Exit codes: 0 when the property holds or a witness was found, 1 when it is
refuted or nothing exists, 2 on errors (bad input, resource limits).
"""
from __future__ import annotations

import argparse
import json
import re
import sys
import time
from importlib import resources
from pathlib import Path
from typing import Sequence

from . import fixtures
from .exceptions import DiagonalIdentityFails, NotFound, TolalgError
from .freealg import explore_free_algebra, free_algebra
from .limits import default_limits
from .malcev import (
    check_mn,
    find_h_witness,
    find_majority_term,
    find_malcev_term,
    permutability_degree,
)
from .relations import BinRel, classify, gen_congruence, gen_tolerance
from .specfile import AlgebraSpec, load_spec
from .terms import Term, format_term, parse_term
from .tolim import refute_tolim

HOLDS, REFUTED, ERROR = 0, 1, 2


class UsageError(TolalgError, ValueError):
    pass


# -- argument helpers --------------------------------------------------------------

def shipped_spec_path(name: str) -> Path | None:
    stem = name[:-4] if name.endswith(".alg") else name
    ref = resources.files("tolalg") / "data" / f"{stem}.alg"
    return Path(str(ref)) if ref.is_file() else None


def _load(arg: str) -> AlgebraSpec:
    path = Path(arg)
    if not path.is_file():
        shipped = shipped_spec_path(path.name) if path.parent == Path(".") else None
        if shipped is None:
            raise UsageError(f"no such spec file: {arg}")
        path = shipped
    return load_spec(path)


def _pairs(text: str, size: int) -> list[tuple[int, int]]:
    out = []
    for tok in re.split(r"[\s;]+", text.strip()):
        if not tok:
            continue
        m = re.fullmatch(r"\(?(\d+),(\d+)\)?", tok)
        if not m:
            raise UsageError(f"bad pair {tok!r}; write pairs as 'a,b c,d'")
        a, b = int(m.group(1)), int(m.group(2))
        if a >= size or b >= size:
            raise UsageError(f"pair ({a},{b}) outside 0..{size - 1}")
        out.append((a, b))
    return out


def _relation(spec: AlgebraSpec, arg: str) -> BinRel:
    if arg in spec.relations:
        return spec.relations[arg]
    return BinRel.from_pairs(spec.algebra.size, _pairs(arg, spec.algebra.size))


def _term(spec: AlgebraSpec, arg: str) -> Term:
    if arg in spec.terms:
        return spec.terms[arg]
    try:
        return parse_term(arg, spec.algebra)
    except ValueError as e:
        raise UsageError(f"cannot read term {arg!r}: {e}") from e


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def _fmt(spec: AlgebraSpec, t: Term | None) -> str | None:
    return None if t is None else format_term(t, spec.algebra)


# -- commands ------------------------------------------------------------------------

def cmd_classify(args):
    spec = _load(args.spec)
    rel = _relation(spec, args.rel)
    flags = classify(spec.algebra, rel)
    yes = lambda b: "yes" if b else "no"
    text = f"tolerance: {yes(flags.tolerance)}, congruence: {yes(flags.congruence)}\n" + "\n".join(
        f"  {k}: {yes(v)}" for k, v in flags.as_dict().items()
    )
    data = {"relation": rel.pairs(), "flags": flags.as_dict()}
    return (HOLDS if flags.tolerance else REFUTED), text, data


def _cmd_generate(args, fn, what):
    spec = _load(args.spec)
    gens = _pairs(args.pairs, spec.algebra.size)
    rel, _ = fn(spec.algebra, gens)
    text = f"{what} with {len(rel)} pairs:\n  " + " ".join(f"{a},{b}" for a, b in rel.pairs())
    return HOLDS, text, {"generators": gens, "pairs": rel.pairs(), "size": len(rel)}


def cmd_gen_tolerance(args):
    return _cmd_generate(args, gen_tolerance, "tolerance")


def cmd_gen_congruence(args):
    return _cmd_generate(args, gen_congruence, "congruence")


def cmd_free(args):
    spec = _load(args.spec)
    if args.partial:
        F = explore_free_algebra(spec.algebra, args.k)
    else:
        F = free_algebra(spec.algebra, args.k)
    lines = [f"F({args.k}) has {len(F)} elements" + ("" if F.complete else " (partial)")]
    data = {"k": args.k, "size": len(F), "complete": F.complete}
    if args.terms:
        terms = [_fmt(spec, F.term(i)) for i in range(len(F))]
        lines += [f"  {i}: {t}" for i, t in enumerate(terms)]
        data["terms"] = terms
    return HOLDS, "\n".join(lines), data


def cmd_check_mn(args):
    spec = _load(args.spec)
    v = check_mn(spec.algebra, args.n)
    data = {
        "n": args.n,
        "status": v.status.value,
        "method": v.method,
        "free_size": len(v.free),
        "free_complete": v.free.complete,
        "counterexample": None,
        "escape": None,
    }
    lines = [f"M({args.n}) {v.status.value} ({v.method}; F({2 * args.n}) has {len(v.free)} elements"
             + ("" if v.free.complete else " explored") + ")"]
    if v.counterexample_terms is not None:
        f, g = v.counterexample_terms
        data["counterexample"] = {"indices": list(v.counterexample), "f": _fmt(spec, f), "g": _fmt(spec, g)}
        lines.append(f"  counterexample: f = {_fmt(spec, f)}")
        lines.append(f"                  g = {_fmt(spec, g)}")
    if v.escape is not None:
        e = v.escape
        data["escape"] = {
            "tolerance": e.tau.pairs(),
            "assignment": [list(p) for p in e.assignment],
            "image": list(e.image),
        }
        lines.append(f"  certificate: pairs {list(e.assignment)} of a tolerance map to {e.image}, outside it")
    return (HOLDS if v.holds else REFUTED), "\n".join(lines), data


def cmd_find_h(args):
    spec = _load(args.spec)
    f, g = _term(spec, args.f), _term(spec, args.g)
    data = {"n": args.n, "f": _fmt(spec, f), "g": _fmt(spec, g), "h": None}
    try:
        h = find_h_witness(spec.algebra, args.n, f, g)
    except NotFound:
        return REFUTED, f"no h exists: M({args.n}) fails for this pair", data
    except DiagonalIdentityFails as e:
        raise UsageError(str(e)) from e
    data["h"] = _fmt(spec, h)
    return HOLDS, f"h = {data['h']}", data


def _cmd_find(args, fn, what):
    spec = _load(args.spec)
    t = fn(spec.algebra)
    if t is None:
        return REFUTED, f"no {what} term", {"term": None}
    return HOLDS, f"{what} term: {_fmt(spec, t)}", {"term": _fmt(spec, t)}


def cmd_find_malcev(args):
    return _cmd_find(args, find_malcev_term, "Mal'cev")


def cmd_find_majority(args):
    return _cmd_find(args, find_majority_term, "majority")


def cmd_permutability(args):
    spec = _load(args.spec)
    res = permutability_degree(spec.algebra, args.max_n)
    if res is None:
        return REFUTED, f"not n-permutable for any n <= {args.max_n}", {"max_n": args.max_n, "degree": None, "chain": []}
    chain = [_fmt(spec, p) for p in res.chain]
    text = f"degree {res.degree}\n" + "\n".join(f"  p{i + 1} = {c}" for i, c in enumerate(chain))
    return HOLDS, text, {"max_n": args.max_n, "degree": res.degree, "chain": chain}


def cmd_refute_tolim(args):
    spec = _load(args.spec)
    tau = _relation(spec, args.rel)
    r = refute_tolim(spec.algebra, tau, args.n)
    if r is None:
        return HOLDS, f"no refutation at n = {args.n} (this proves nothing)", {"n": args.n, "refuted": False}
    data = {
        "n": args.n,
        "refuted": True,
        "f": _fmt(spec, r.f),
        "g": _fmt(spec, r.g),
        "assignment": [list(p) for p in r.assignment],
        "image": list(r.image),
        "verified": r.verify(spec.algebra, tau),
    }
    text = "\n".join(
        [
            f"refuted at n = {args.n}: the relation is not a congruence image within V(A)",
            f"  f = {data['f']}",
            f"  g = {data['g']}",
            f"  pairs {', '.join(str(tuple(p)) for p in r.assignment)} give {tuple(r.image)}, outside the relation",
        ]
    )
    return REFUTED, text, data


def cmd_verify_fixtures(args):
    results = []
    ok = True
    lines = []
    t_all = time.perf_counter()
    for fx in fixtures.all_fixtures():
        claims = []
        for c in fx.manifest:
            t0 = time.perf_counter()
            try:
                passed = bool(c.check(fx))
            except TolalgError as e:
                passed = False
                lines.append(f"  error in {fx.name}: {e}")
            dt = time.perf_counter() - t0
            ok &= passed
            claims.append({"label": c.label, "ok": passed, "seconds": round(dt, 3)})
            lines.append(f"{'PASS' if passed else 'FAIL'}  {fx.name}: {c.label}  ({dt:.2f}s)")
        results.append({"name": fx.name, "claims": claims})
    total = time.perf_counter() - t_all
    lines.append(f"{'all claims hold' if ok else 'some claims failed'} ({total:.2f}s)")
    return (HOLDS if ok else REFUTED), "\n".join(lines), {"ok": ok, "fixtures": results, "seconds": round(total, 3)}


# -- parser ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print a JSON report")
    p = argparse.ArgumentParser(
        prog="tolalg",
        description="Tolerances, congruences and M(n) conditions for finite algebras.",
        parents=[common],
    )
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, fn, help_text):
        sp = sub.add_parser(name, help=help_text, parents=[common])
        sp.set_defaults(fn=fn)
        return sp

    sp = add("classify", cmd_classify, "classify a relation (exit 0 iff it is a tolerance)")
    sp.add_argument("spec")
    sp.add_argument("rel", help="relation name from the algebra file, or pairs 'a,b c,d'")
    for name, fn in (("gen-tolerance", cmd_gen_tolerance), ("gen-congruence", cmd_gen_congruence)):
        sp = add(name, fn, f"generate the {name[4:]} containing some pairs")
        sp.add_argument("spec")
        sp.add_argument("pairs", help="pairs 'a,b c,d'")
    sp = add("free", cmd_free, "enumerate the free algebra on k generators")
    sp.add_argument("spec")
    sp.add_argument("k", type=_positive)
    sp.add_argument("--terms", action="store_true", help="list a term for every element")
    sp.add_argument("--partial", action="store_true", help="stop at the resource limits instead of failing")
    sp = add("check-mn", cmd_check_mn, "decide M(n)")
    sp.add_argument("spec")
    sp.add_argument("n", type=_positive)
    sp = add("find-h", cmd_find_h, "find h for a pair of 2n-ary terms")
    sp.add_argument("spec")
    sp.add_argument("n", type=_positive)
    sp.add_argument("f", help="term name from the algebra file, or a prefix term")
    sp.add_argument("g")
    add("find-malcev", cmd_find_malcev, "search for a Mal'cev term").add_argument("spec")
    add("find-majority", cmd_find_majority, "search for a majority term").add_argument("spec")
    sp = add("permutability", cmd_permutability, "least n with n-permutability, up to max_n")
    sp.add_argument("spec")
    sp.add_argument("max_n", type=int)
    sp = add("refute-tolim", cmd_refute_tolim, "look for a witness that a tolerance is not a congruence image")
    sp.add_argument("spec")
    sp.add_argument("rel")
    sp.add_argument("n", type=_positive)
    add("verify-paper", cmd_verify_fixtures, "re-check every shipped fixture's expected properties")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return ERROR if e.code else 0
    try:
        default_limits()
        code, text, data = args.fn(args)
    except (TolalgError, ValueError, OSError) as e:
        if args.json:
            print(json.dumps({"command": args.command, "error": str(e)}, indent=2))
        else:
            print(f"error: {e}", file=sys.stderr)
        return ERROR
    if args.json:
        print(json.dumps({"command": args.command, "exit_code": code, **data}, indent=2))
    else:
        print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
