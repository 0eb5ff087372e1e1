"""Command-line client for the kprophet service.

The CLI is a thin HTTP client: it builds a request, posts it to the
service, and renders the response. By default it mounts the service
in-process (no network, same wire format); point it at a running server
with --server.

Exit codes: 0 all checks pass, 2 a numerical tolerance failed
(verification failure, simulated ratio below its guarantee, or a solver
error row), 3 invalid parameters.
"""

from __future__ import annotations

import argparse
import asyncio
import os
import sys

import httpx

from .reporting import RunManifest, bounds_csv, canonical_json

SEED_ENV = "KPROPHET_SEED"

EXIT_OK = 0
EXIT_TOLERANCE = 2
EXIT_USAGE = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse defaults to exit code 2
        raise _UsageError(message)


def parse_k_range(text: str) -> tuple[int, int]:
    """"1..10" -> (1, 10); "3" -> (3, 3)."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        return int(lo), int(hi)
    k = int(text)
    return k, k


_DIST_PARAM_ORDER = {
    "uniform01": (),
    "exponential": ("rate",),
    "bounded-pareto": ("shape", "cap"),
}


def parse_dist(text: str) -> dict:
    """"exponential:1" or "bounded-pareto:2,100" or "exponential:rate=1"."""
    name, _, rest = text.partition(":")
    if name not in _DIST_PARAM_ORDER:
        raise _UsageError(f"unknown distribution {name!r}; choose from {sorted(_DIST_PARAM_ORDER)}")
    params: dict[str, float] = {}
    if rest:
        parts = [p for p in rest.split(",") if p]
        order = _DIST_PARAM_ORDER[name]
        for i, part in enumerate(parts):
            if "=" in part:
                key, val = part.split("=", 1)
            else:
                if i >= len(order):
                    raise _UsageError(f"too many parameters for {name!r}")
                key, val = order[i], part
            try:
                params[key] = float(val)
            except ValueError:
                raise _UsageError(f"bad numeric parameter {part!r}") from None
    return {"name": name, "params": params}


def _default_seed(explicit: int | None) -> int:
    if explicit is not None:
        return explicit
    env = os.environ.get(SEED_ENV)
    return int(env) if env else 0


async def _post(server: str | None, path: str, payload: dict) -> httpx.Response:
    if server:
        async with httpx.AsyncClient(base_url=server, timeout=None) as client:
            return await client.post(path, json=payload)
    from .service import create_app

    transport = httpx.ASGITransport(app=create_app())
    async with httpx.AsyncClient(transport=transport, base_url="http://kprophet.local",
                                 timeout=None) as client:
        return await client.post(path, json=payload)


def _call(server: str | None, path: str, payload: dict) -> dict:
    response = asyncio.run(_post(server, path, payload))
    if response.status_code in (400, 422):
        raise _UsageError(response.text)
    response.raise_for_status()
    return response.json()


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_bounds(args) -> int:
    k_min, k_max = parse_k_range(args.k)
    payload = {
        "k_min": k_min,
        "k_max": k_max,
        "model": args.model,
        "delta": args.delta,
        "stamp": args.stamp,
    }
    if args.n is not None:
        payload["n"] = args.n
    if args.theta_sweep is not None:
        payload["theta_sweep"] = args.theta_sweep
    body = _call(args.server, "/bounds", payload)
    if args.format == "csv":
        manifest = RunManifest(**body["manifest"])
        _emit(bounds_csv(body["rows"], manifest), args.out)
    else:
        _emit(canonical_json(body), args.out)
    failed = [r for r in body["rows"] if r.get("error")]
    return EXIT_TOLERANCE if failed else EXIT_OK


def _cmd_simulate(args) -> int:
    seed = _default_seed(args.seed)
    payload = {
        "k": args.k,
        "n": args.n,
        "dist": parse_dist(args.dist),
        "trials": args.trials,
        "seed": seed,
        "stamp": args.stamp,
    }
    if args.schedule:
        payload["schedule"] = args.schedule
    body = _call(args.server, "/simulate", payload)
    _emit(canonical_json(body), args.out)
    return EXIT_OK if body["meets_guarantee"] else EXIT_TOLERANCE


def _cmd_verify(args) -> int:
    payload = {"suite": args.suite, "stamp": args.stamp}
    if args.n is not None:
        payload["n"] = args.n
    if args.k is not None:
        payload["k"] = args.k
    if args.ks:
        payload["ks"] = [int(x) for x in args.ks.split(",")]
    body = _call(args.server, "/verify", payload)
    _emit(canonical_json(body), args.out)
    for check in body["checks"]:
        status = "pass" if check["passed"] else "FAIL"
        sys.stderr.write(f"[{status}] {body['suite']}/{check['name']}\n")
    return EXIT_OK if body["passed"] else EXIT_TOLERANCE


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="kprophet", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bounds", help="certified policy-value bounds per k")
    b.add_argument("--k", required=True, help="k or k range, e.g. 3 or 1..10")
    b.add_argument("--model", choices=["infinite", "finite"], default="infinite")
    b.add_argument("--n", type=int, help="horizon (finite model)")
    b.add_argument("--theta-sweep", type=int, dest="theta_sweep",
                   help="two-window split sweep resolution (k = 2, infinite)")
    b.add_argument("--delta", type=float, default=1e-8)
    b.add_argument("--format", choices=["json", "csv"], default="json")
    b.add_argument("--out", help="write to file instead of stdout")
    b.add_argument("--server", help="base URL of a running service")
    b.add_argument("--stamp", action="store_true", help="add a wall-clock timestamp to the manifest")
    b.set_defaults(func=_cmd_bounds)

    s = sub.add_parser("simulate", help="Monte Carlo policy certification")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--dist", required=True, help="e.g. uniform01, exponential:1, bounded-pareto:2,100")
    s.add_argument("--trials", type=int, required=True)
    s.add_argument("--seed", type=int, help=f"defaults to ${SEED_ENV} or 0")
    s.add_argument("--schedule", choices=["single", "two-threshold", "infinite", "infinite-midpoint"])
    s.add_argument("--out", help="write to file instead of stdout")
    s.add_argument("--server", help="base URL of a running service")
    s.add_argument("--stamp", action="store_true")
    s.set_defaults(func=_cmd_simulate)

    v = sub.add_parser("verify", help="run a named invariant suite")
    v.add_argument("suite", choices=["duality", "sandwich", "lp", "two-threshold", "beta-bar"])
    v.add_argument("--n", type=int)
    v.add_argument("--k", type=int)
    v.add_argument("--ks", help="comma-separated k list for the sandwich suite")
    v.add_argument("--out", help="write to file instead of stdout")
    v.add_argument("--server", help="base URL of a running service")
    v.add_argument("--stamp", action="store_true")
    v.set_defaults(func=_cmd_verify)

    r = sub.add_parser("serve", help="run the HTTP service")
    r.add_argument("--host", default="127.0.0.1")
    r.add_argument("--port", type=int, default=8000)
    r.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
