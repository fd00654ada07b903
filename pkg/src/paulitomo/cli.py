"""Command-line client for the toolkit service.

Every subcommand posts a JSON spec to the corresponding service endpoint. By
default the service runs in-process; ``--server`` points the same client at a
remote instance instead.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import httpx
import numpy as np

from .harness import MetricsRow, RobustnessRow, write_case_study_csv, write_robustness_csv

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_VALIDATION = 2
EXIT_NONCONVERGENCE = 3

_ENDPOINTS = ("simulate", "estimate", "directions", "design", "casestudy", "robustness")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paulitomo",
        description="Simulation, estimation, and experiment design for Pauli channels.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("simulate", "sample measurement records for a channel and configurations"),
        ("estimate", "estimate channel parameters or a Choi matrix from counts"),
        ("directions", "estimate unknown channel directions from black-box access"),
        ("design", "compute or search optimal tomography configurations"),
        ("casestudy", "run a shot-grid case study and export CSV metrics"),
        ("robustness", "sweep direction mismatch angles and export CSV metrics"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--spec", required=True, help="path to the JSON request spec")
        p.add_argument("--seed", type=int, default=None, help="override the spec seed")
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        p.add_argument("--server", default=None, help="base URL of a running service")
    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    # in-process mode: drive the ASGI app through a synchronous portal
    import warnings

    with warnings.catch_warnings():
        # starlette flags its httpx-backed test client as deprecated
        warnings.simplefilter("ignore")
        from starlette.testclient import TestClient

    from .service import create_app

    return TestClient(create_app(), raise_server_exceptions=False)


def _emit_json(payload, out: str | None):
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _metrics_rows(dicts) -> list:
    return [
        MetricsRow(
            n_shots=d["n_shots"],
            trial_count=d["trial_count"],
            lambda_mean=np.asarray(d["lambda_mean"], dtype=float),
            lambda_var=np.asarray(d["lambda_var"], dtype=float),
            hs_error=d["hs_error"],
            complete=d.get("complete", True),
        )
        for d in dicts
    ]


def _write_casestudy(body: dict, spec: dict, out: str | None):
    if not out:
        _emit_json(body, None)
        return
    write_case_study_csv(_metrics_rows(body["rows"]), out)
    if body.get("closed_form_rows"):
        cf_path = Path(out).with_name(Path(out).stem + "_closed_form.csv")
        write_case_study_csv(_metrics_rows(body["closed_form_rows"]), cf_path)
    sidecar = Path(out).with_suffix(".json")
    sidecar.write_text(json.dumps(spec, indent=2, sort_keys=True) + "\n")


def _write_robustness(body: dict, out: str | None):
    if not out:
        _emit_json(body, None)
        return
    rows = [
        RobustnessRow(
            alpha=d["alpha"],
            trial_count=d["trial_count"],
            lambda_mean=np.asarray(d["lambda_mean"], dtype=float),
            lambda_var=np.asarray(d["lambda_var"], dtype=float),
            hs_error=d["hs_error"],
        )
        for d in body["rows"]
    ]
    write_robustness_csv(rows, out)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "serve":
        import uvicorn

        from .service import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return EXIT_OK

    try:
        spec = json.loads(Path(args.spec).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read spec: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if not isinstance(spec, dict):
        print("error: spec must be a JSON object", file=sys.stderr)
        return EXIT_VALIDATION
    if args.seed is not None:
        spec["seed"] = args.seed

    try:
        with _client(args.server) as client:
            response = client.post(f"/{args.command}", json=spec)
    except httpx.HTTPError as exc:
        print(f"error: request failed: {exc}", file=sys.stderr)
        return EXIT_UNEXPECTED
    except Exception as exc:  # unhandled service-side failure (in-process mode)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNEXPECTED

    if response.status_code in (400, 422):
        print(f"error: invalid request: {response.text}", file=sys.stderr)
        return EXIT_VALIDATION
    if response.status_code == 409:
        print(f"error: solver did not converge: {response.text}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    if response.status_code != 200:
        print(f"error: unexpected status {response.status_code}", file=sys.stderr)
        return EXIT_UNEXPECTED

    body = response.json()
    if args.command == "casestudy":
        _write_casestudy(body, spec, args.out)
    elif args.command == "robustness":
        _write_robustness(body, args.out)
    else:
        _emit_json(body, args.out)
    return EXIT_OK


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
