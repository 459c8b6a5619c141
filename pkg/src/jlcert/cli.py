"""Thin command-line client for the certification service.

Every subcommand except serve talks HTTP: against a remote server when
--server is given, otherwise against an in-process instance of the app, so
the CLI works standalone with identical behavior.

Exit codes: 0 success, 2 certification violation, 1 usage or I/O error.
"""

from __future__ import annotations

import argparse
import asyncio
import csv
import json
import sys
from pathlib import Path

import httpx

from .harness import derive_seed, row_from_dict, rows_csv_text, rows_json_text
from .service import create_app
from .transforms import FAMILIES


class _Parser(argparse.ArgumentParser):
    # usage errors exit 1; code 2 is reserved for certification violations
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


async def _request(server: str | None, path: str, payload: dict):
    if server is not None:
        async with httpx.AsyncClient(base_url=server, timeout=600.0) as client:
            resp = await client.post(path, json=payload)
            return resp.status_code, resp.json()
    transport = httpx.ASGITransport(app=create_app())
    async with httpx.AsyncClient(
        transport=transport, base_url="http://jlcert.internal", timeout=None
    ) as client:
        resp = await client.post(path, json=payload)
        return resp.status_code, resp.json()


def _call(args, path: str, payload: dict) -> dict:
    try:
        status, body = asyncio.run(_request(args.server, path, payload))
    except httpx.HTTPError as e:
        print(f"error: request failed: {e}", file=sys.stderr)
        raise SystemExit(1) from e
    if status == 200:
        return body
    detail = body.get("detail", body) if isinstance(body, dict) else body
    print(f"error: {detail}", file=sys.stderr)
    raise SystemExit(2 if status == 409 else 1)


def _instance_payload(args) -> dict:
    payload = {
        "family": args.family,
        "m": args.m,
        "d": args.d,
        "seed": args.seed,
    }
    for name in ("sparsity", "q", "steps"):
        value = getattr(args, name, None)
        if value is not None:
            payload[name] = value
    return payload


def _emit(body: dict) -> int:
    print(json.dumps(body))
    return 0


def cmd_sample(args) -> int:
    return _emit(_call(args, "/sample", _instance_payload(args)))


def _load_matrix_csv(path: str) -> list[list[float]]:
    """Matrix file: header line `m,d`, a dims line, then m rows of d values."""
    text = Path(path).read_text()
    rows = [r for r in csv.reader(text.splitlines()) if r and not r[0].startswith("#")]
    if len(rows) < 2 or [h.strip() for h in rows[0]] != ["m", "d"]:
        raise ValueError(f"{path}: expected a header line 'm,d' then dimensions")
    m, d = int(rows[1][0]), int(rows[1][1])
    data = [[float(v) for v in r] for r in rows[2:]]
    if len(data) != m or any(len(r) != d for r in data):
        raise ValueError(f"{path}: expected {m} rows of {d} values")
    return data


def cmd_spectra(args) -> int:
    payload: dict = {
        "epsilon": args.eps,
        "delta": args.delta,
        "exact_delta": args.exact_delta,
    }
    if args.matrix is not None:
        try:
            payload["matrix"] = _load_matrix_csv(args.matrix)
        except (OSError, ValueError) as e:
            print(f"error: {e}", file=sys.stderr)
            raise SystemExit(1) from e
        if args.scale is not None:
            payload["scale"] = args.scale
    elif args.family is not None:
        payload["instance"] = _instance_payload(args)
    else:
        print("error: provide --matrix or --family", file=sys.stderr)
        raise SystemExit(1)
    return _emit(_call(args, "/spectra", payload))


def cmd_distortion(args) -> int:
    payload = {
        "instance": _instance_payload(args),
        "epsilon": args.eps,
        "delta": args.delta,
        "samples": args.samples,
        "distribution": args.dist,
        "seed": derive_seed(args.seed, "distortion-inputs"),
    }
    if args.k is not None:
        payload["k"] = args.k
    return _emit(_call(args, "/distortion", payload))


def cmd_certify(args) -> int:
    body = _call(
        args,
        "/certify",
        {
            "instance": _instance_payload(args),
            "epsilon": args.eps,
            "delta": args.delta,
        },
    )
    _emit(body)
    if not body["passed"]:
        print("error: certification violation", file=sys.stderr)
        return 2
    return 0


def cmd_bench(args) -> int:
    payload = {"instance": _instance_payload(args), "repetitions": args.reps}
    return _emit(_call(args, "/bench", payload))


def cmd_run(args) -> int:
    try:
        config_json = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as e:
        print(f"error: cannot read config {args.config}: {e}", file=sys.stderr)
        raise SystemExit(1) from e
    out = args.out or config_json.get("output_dir")
    if out is None:
        print("error: no output directory (--out or config output_dir)", file=sys.stderr)
        raise SystemExit(1)
    body = _call(args, "/run", {"config": {**config_json, "output_dir": None}})
    rows = [row_from_dict(r) for r in body["rows"]]
    try:
        out_path = Path(out)
        out_path.mkdir(parents=True, exist_ok=True)
        (out_path / "rows.csv").write_text(rows_csv_text(rows))
        (out_path / "rows.json").write_text(rows_json_text(rows))
        (out_path / "meta.json").write_text(json.dumps(body["meta"], indent=2) + "\n")
    except OSError as e:
        print(f"error: failed writing outputs under {out}: {e}", file=sys.stderr)
        raise SystemExit(1) from e
    print(f"{len(rows)} rows -> {out} (rows.csv, rows.json, meta.json)")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def _add_instance_flags(sp, required: bool = True) -> None:
    sp.add_argument("--family", choices=FAMILIES, required=required)
    sp.add_argument("--m", type=int, required=required)
    sp.add_argument("--d", type=int, required=required)
    sp.add_argument("--sparsity", type=int, help="SparseKN signs per column")
    sp.add_argument("--q", type=float, help="FastJL projection density")
    sp.add_argument("--steps", type=int, help="Kac rotation count")
    sp.add_argument("--seed", type=int, default=0)


def _add_eps_delta(sp) -> None:
    sp.add_argument("--eps", type=float, default=0.25)
    sp.add_argument("--delta", type=float, default=1.0 / 36.0)


def build_parser() -> _Parser:
    parser = _Parser(prog="jlcert", description=__doc__)
    parser.add_argument(
        "--server",
        default=None,
        help="base URL of a running service; omitted means in-process",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sample", help="sample an instance, report planned gates")
    _add_instance_flags(sp)
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("spectra", help="spectrum report for an instance or matrix")
    _add_instance_flags(sp, required=False)
    sp.add_argument("--matrix", help="CSV matrix file (header m,d)")
    sp.add_argument("--scale", type=float, help="scale for --matrix input")
    _add_eps_delta(sp)
    sp.add_argument("--exact-delta", action="store_true",
                    help="add the exhaustive minor oracle (dims <= 8)")
    sp.set_defaults(func=cmd_spectra)

    sp = sub.add_parser("distortion", help="empirical failure-rate estimate")
    _add_instance_flags(sp)
    _add_eps_delta(sp)
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--dist", default="gaussian",
                    choices=("gaussian", "basis", "basis_vectors", "sparse_k"))
    sp.add_argument("--k", type=int, help="support size for sparse_k")
    sp.set_defaults(func=cmd_distortion)

    sp = sub.add_parser("certify", help="full chain: compile, bound, compare")
    _add_instance_flags(sp)
    _add_eps_delta(sp)
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("bench", help="time embeds against the gate count")
    _add_instance_flags(sp)
    sp.add_argument("--reps", type=int, default=5)
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("run", help="run a full experiment config")
    sp.add_argument("--config", required=True, help="experiment config JSON")
    sp.add_argument("--out", help="output directory (overrides config)")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("serve", help="start the HTTP service")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8000)
    sp.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except SystemExit as e:
        if e.code is None:
            return 0
        return e.code if isinstance(e.code, int) else 1


if __name__ == "__main__":
    sys.exit(main())
