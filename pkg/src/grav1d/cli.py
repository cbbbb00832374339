"""Command-line front end.

A thin client over the HTTP service: every subcommand builds a request,
sends it to the in-process app, and renders the exact-rational response as
json, csv, or a markdown table.

Exit codes: 0 success, 1 verification failure, 2 usage or configuration
error.  A config file in ``key=value`` format may supply defaults for the
numeric flags; explicit flags win.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys

import httpx

__all__ = ["main"]

USAGE_ERROR = 2
CHECK_FAILURE = 1

COMMANDS = (
    "correlators",
    "free-energy",
    "series",
    "icoords",
    "npoint",
    "graphs",
    "spectral",
    "verify",
)


def _post(path: str, body: dict) -> httpx.Response:
    """Send one request to the in-process service app."""
    from .service import app

    async def go():
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(
            transport=transport, base_url="http://grav1d", timeout=None
        ) as client:
            return await client.post(path, json=body)

    return asyncio.run(go())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grav1d",
        description="Exact-rational series engine: tables, series dumps, "
        "and the verification suite.",
    )
    parser.add_argument("--config", help="key=value config file with flag defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--kmax", type=int, default=None)
        p.add_argument("--dmax", type=int, default=None)
        p.add_argument("--gmax", type=int, default=None)
        p.add_argument(
            "--format", choices=("json", "csv", "md"), default="json"
        )
        p.add_argument("--out", help="write output to this file instead of stdout")

    p = sub.add_parser("correlators", help="admissible correlator table")
    common(p)

    p = sub.add_parser("free-energy", help="free-energy series dump")
    common(p)

    p = sub.add_parser("series", help="serialize a named series")
    common(p)
    p.add_argument(
        "--which", default="F", help="Z | F | I0 | Ik (with --k) | W (with --n)"
    )
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--hat", action="store_true")

    p = sub.add_parser("icoords", help="triangular coordinate series")
    common(p)
    p.add_argument("--k", type=int, default=0)

    p = sub.add_parser("npoint", help="n-point function expansion")
    common(p)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--hat", action="store_true")
    p.add_argument("--genus", type=int, default=None)

    p = sub.add_parser("graphs", help="graph-sum oracle report")
    common(p)
    p.add_argument("--max-edges", type=int, default=4)
    p.add_argument("--tree-degree", type=int, default=5)

    p = sub.add_parser("spectral", help="spectral-deformation report")
    common(p)
    p.add_argument("--mmax", type=int, default=4)
    p.add_argument("--count", type=int, default=6)

    p = sub.add_parser("verify", help="run residual-check suites")
    common(p)
    p.add_argument(
        "--suite", default=None, help="comma-separated suite names (default: all)"
    )
    return parser


def _load_config(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {line!r}")
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


def _resolve_scale(args, file_cfg: dict) -> dict:
    out = {}
    for key, default in (("kmax", 6), ("dmax", 6), ("gmax", 3)):
        flag = getattr(args, key, None)
        if flag is not None:
            out[key] = flag
        elif key in file_cfg:
            out[key] = int(file_cfg[key])
        else:
            out[key] = default
    return out


# ---------------------------------------------------------------------------
# renderers
# ---------------------------------------------------------------------------


def _exps_str(pairs) -> str:
    return " ".join(f"{i}^{e}" for i, e in pairs)


def _csv_row(cells) -> str:
    quoted = []
    for c in cells:
        c = str(c)
        if "," in c or '"' in c:
            c = '"' + c.replace('"', '""') + '"'
        quoted.append(c)
    return ",".join(quoted)


def _md_table(header, rows) -> str:
    lines = ["| " + " | ".join(header) + " |"]
    lines.append("|" + "|".join(" --- " for _ in header) + "|")
    for row in rows:
        lines.append("| " + " | ".join(str(c) for c in row) + " |")
    return "\n".join(lines)


def _series_rows(payload: dict):
    if "slots" in payload:
        for term in payload["terms"]:
            e = " ".join(str(x) for x in term["e"])
            for inner in term["series"]:
                yield (e, _exps_str(inner["t"]), inner["l"], inner["c"])
    else:
        for term in payload["terms"]:
            yield (_exps_str(term["t"]), term["l"], term["c"])


def render(command: str, fmt: str, data: dict) -> str:
    if fmt == "json":
        return json.dumps(data, separators=(",", ":"), sort_keys=False)
    if command == "correlators":
        header = ("indices", "genus", "value")
        rows = [
            (" ".join(str(i) for i in r["indices"]), r["genus"], r["value"])
            for r in data["rows"]
        ]
    elif command in ("free-energy", "series", "icoords", "npoint"):
        payload = data["payload"] if "payload" in data else data
        rows = list(_series_rows(payload))
        header = (
            ("slot_exponents", "t_exponents", "l", "coefficient")
            if rows and len(rows[0]) == 4
            else ("t_exponents", "l", "coefficient")
        )
    else:  # graphs / spectral / verify reports
        header = ("suite", "name", "ok", "detail")
        rows = [
            (c["suite"], c["name"], str(c["ok"]).lower(), c["detail"])
            for c in data["checks"]
        ]
    if fmt == "csv":
        return "\n".join([_csv_row(header)] + [_csv_row(r) for r in rows])
    return _md_table(header, rows)


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


def _request(args, scale: dict):
    body = dict(scale)
    command = args.command
    if command == "correlators":
        return "/correlators", body
    if command == "free-energy":
        return "/free-energy", body
    if command == "series":
        body.update(
            which=args.which, k=args.k, n=args.n, order=args.order, hat=args.hat
        )
        return "/series", body
    if command == "icoords":
        body.update(which="Ik", k=args.k)
        return "/icoords", body
    if command == "npoint":
        body.update(n=args.n, order=args.order, hat=args.hat, genus=args.genus)
        return "/npoint", body
    if command == "graphs":
        body.update(max_edges=args.max_edges, tree_degree=args.tree_degree)
        return "/graphs", body
    if command == "spectral":
        body.update(mmax=args.mmax, catalan_count=args.count)
        return "/spectral", body
    if command == "verify":
        if args.suite is None:
            suites = []  # all suites
        else:
            suites = [s.strip() for s in args.suite.split(",") if s.strip()]
            if not suites:
                raise ValueError("empty suite selection")
        body.update(suites=suites)
        return "/verify", body
    raise ValueError(f"unknown command {command!r}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code else 0
    try:
        file_cfg = _load_config(args.config) if args.config else {}
        scale = _resolve_scale(args, file_cfg)
        path, body = _request(args, scale)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    response = _post(path, body)
    if response.status_code == 422:
        print(f"error: {response.text}", file=sys.stderr)
        return USAGE_ERROR
    response.raise_for_status()
    data = response.json()
    text = render(args.command, args.format, data)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if args.command == "verify" and not data["ok"]:
        first = next(c for c in data["checks"] if not c["ok"])
        print(
            f"verification failed: {first['suite']}.{first['name']}"
            + (f" at {first['detail']}" if first["detail"] else ""),
            file=sys.stderr,
        )
        return CHECK_FAILURE
    return 0


if __name__ == "__main__":
    sys.exit(main())
