"""Command-line client of the burstlr service.

Every command builds a request model, sends it through the service API,
and writes the response to files.  Without ``--server`` the request is
routed through the FastAPI app in-process (same validation, same
handlers, no network); with ``--server URL`` it goes over HTTP to a
running instance.  Exit codes: 0 success, 1 configuration or parse
error, 2 numerical failure.

Options may come from ``--config`` (flat key=value lines or a JSON
object, keys named like the flags); explicit flags win over the file.
All randomized commands require an explicit seed; there is no
wall-clock default.
"""

from __future__ import annotations

import argparse
import asyncio
import csv
import json
import sys
from pathlib import Path

import httpx

from .binning import read_events

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_CONFIG):
        super().__init__(message)
        self.code = code


def _post(server: str | None, path: str, payload: dict) -> dict:
    """POST through the service; in-process ASGI when no server is given."""
    if server:
        resp = httpx.post(server.rstrip("/") + path, json=payload, timeout=None)
        return _handle(resp)

    async def go():
        from .service import app

        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(
            transport=transport, base_url="http://burstlr.local", timeout=None
        ) as client:
            return await client.post(path, json=payload)

    return _handle(asyncio.run(go()))


def _handle(resp: httpx.Response) -> dict:
    if resp.status_code == 200:
        return resp.json()
    try:
        body = resp.json()
        detail = body.get("detail")
    except Exception:
        detail = resp.text
    code = EXIT_NUMERICAL if resp.status_code >= 500 else EXIT_CONFIG
    raise CliError(f"service error ({resp.status_code}): {detail}", code)


# -- output helpers ------------------------------------------------------------


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- argument plumbing ----------------------------------------------------------


def _parse_theta(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        return [float(v) for v in str(text).split(",") if v.strip() != ""]
    except ValueError:
        raise CliError(f"cannot parse parameter vector {text!r}")


def _parse_null(text) -> dict[str, float]:
    if isinstance(text, dict):
        return {str(k): float(v) for k, v in text.items()}
    out: dict[str, float] = {}
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise CliError(f"null constraints look like name=value, got {part!r}")
        name, value = part.split("=", 1)
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise CliError(f"cannot parse null value in {part!r}")
    if not out:
        raise CliError("empty null constraint")
    return out


def _parse_counts(text) -> int | list[int]:
    if isinstance(text, int):
        return text
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    values = [int(v) for v in str(text).split(",") if v.strip() != ""]
    if not values:
        raise CliError("empty counts")
    return values[0] if len(values) == 1 else values


def _parse_offsets(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip() != ""]


def _load_config(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise CliError(f"config file not found: {path}")
    text = p.read_text(encoding="utf-8").strip()
    if text.startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CliError(f"{path}: {exc}")
    else:
        raw = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise CliError(f"{path}: line {lineno}: expected key=value")
            key, value = line.split("=", 1)
            raw[key.strip()] = value.strip()
    return {str(k).replace("-", "_"): v for k, v in raw.items()}


def _merge_config(cmd_parser: argparse.ArgumentParser, args, argv: list[str]) -> None:
    """Fill unset options from the config file; explicit flags always win."""
    if not getattr(args, "config", None):
        return
    defaults = _load_config(args.config)
    explicit = {
        a[2:].split("=", 1)[0].replace("-", "_") for a in argv if a.startswith("--")
    }
    for action in cmd_parser._actions:
        dest = action.dest
        if dest in ("help", "config") or dest not in defaults or dest in explicit:
            continue
        raw = defaults[dest]
        if isinstance(raw, str) and action.type is not None:
            try:
                raw = action.type(raw)
            except (TypeError, ValueError) as exc:
                raise CliError(f"config value for {dest}: {exc}")
        setattr(args, dest, raw)


def _require(args, *names: str) -> None:
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise CliError(f"missing required option(s): {flags}")


def _scenario_payload(args) -> dict:
    payload = {
        "family": args.model,
        "sigma": args.sigma,
        "theta0": _parse_theta(args.theta0),
        "null": _parse_null(args.null) if getattr(args, "null", None) else {},
        "P": args.P,
        "G": args.G,
        "k": getattr(args, "k", 1),
        "counts": _parse_counts(args.counts),
    }
    if getattr(args, "burst_start", None) is not None:
        if args.burst_end is None or args.burst_theta1 is None:
            raise CliError("a burst needs --burst-start, --burst-end and --burst-theta1")
        payload["burst"] = {
            "start": args.burst_start,
            "end": args.burst_end,
            "theta1": _parse_theta(args.burst_theta1),
        }
    return payload


# -- commands -------------------------------------------------------------------


def cmd_detect(args) -> int:
    _require(args, "model", "null", "input", "P", "G", "seed")
    if (args.alpha is None) == (args.level is None):
        raise CliError("give exactly one of --alpha / --level")
    events = read_events(args.input)
    payload = {
        "family": args.model,
        "sigma": args.sigma,
        "null": _parse_null(args.null),
        "P": args.P,
        "G": args.G,
        "k": args.k,
        "alpha": args.alpha,
        "level": args.level,
        "mc_count": args.mc_count,
        "seed": args.seed,
        "offset": args.offset,
        "events": [{"t": t, "x": x} for t, x in events],
    }
    result = _post(args.server, "/detect", payload)
    out = _outdir(args)
    report = {
        key: result[key]
        for key in ("standard", "sliding", "counts", "dropped", "P", "G", "k", "seed", "offset")
    }
    _write_json(out / "report.json", report)
    _write_csv(
        out / "windows.csv",
        ["kind", "i", "lambda", "xi", "bin_start", "bin_end", "skipped"],
        [
            [
                w["kind"],
                w["i"],
                "" if w["lambda"] is None else repr(w["lambda"]),
                "" if w["xi"] is None else repr(w["xi"]),
                w["bin_start"],
                w["bin_end"],
                int(w["skipped"]),
            ]
            for w in result["windows"]
        ],
    )
    verdicts = [f"sliding: {result['sliding']['verdict']}"]
    if result["standard"] is not None:
        verdicts.insert(0, f"standard: {result['standard']['verdict']}")
    print("; ".join(verdicts))
    print(f"wrote {out / 'report.json'} and {out / 'windows.csv'}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    _require(args, "procedure", "level")
    payload = {
        "procedure": args.procedure,
        "level": args.level,
        "k": args.k,
        "r": args.r,
        "N": args.N,
        "counts": None,
        "G": args.G,
        "mc_count": args.mc_count,
        "seed": args.seed,
    }
    if args.counts is not None:
        counts = _parse_counts(args.counts)
        if isinstance(counts, int):
            if args.P is None:
                raise CliError("constant --counts needs --P")
            counts = [counts] * args.P
        payload["counts"] = counts
    result = _post(args.server, "/calibrate", payload)
    out = _outdir(args)
    _write_json(out / "calibration.json", result)
    print(f"alpha = {result['alpha']:.6g} (c = {result['c']:.6g}, method = {result['method']})")
    print(f"wrote {out / 'calibration.json'}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    _require(args, "model", "theta0", "P", "seed")
    payload = _scenario_payload(args)
    payload["seed"] = args.seed
    result = _post(args.server, "/simulate", payload)
    out = _outdir(args)
    _write_csv(
        out / "events.csv",
        ["t", "x"],
        [[repr(float(e["t"])), repr(float(e["x"]))] for e in result["events"]],
    )
    _write_json(
        out / "simulation.json",
        {"counts": result["counts"], "P": result["P"], "seed": result["seed"],
         "events": len(result["events"])},
    )
    print(f"wrote {out / 'events.csv'} ({len(result['events'])} events)")
    return EXIT_OK


def cmd_validate(args) -> int:
    _require(args, "model", "theta0", "null", "P", "G", "seed")
    payload = _scenario_payload(args)
    payload.pop("burst", None)
    payload.update(
        {
            "replications": args.reps,
            "profile": args.profile,
            "theorem": args.theorem,
            "seed": args.seed,
            "threads": args.threads,
        }
    )
    result = _post(args.server, "/validate", payload)
    out = _outdir(args)
    _write_json(
        out / "validation.json",
        {k: result[k] for k in ("theorem2", "theorem1", "passed", "seed", "replications")},
    )
    if result.get("ks_csv"):
        (out / "ks.csv").write_text(result["ks_csv"], encoding="utf-8")
    if result.get("correlation_csv"):
        (out / "correlation.csv").write_text(result["correlation_csv"], encoding="utf-8")
    print(f"validation {'PASS' if result['passed'] else 'FAIL'}")
    print(f"wrote {out / 'validation.json'}")
    return EXIT_OK if result["passed"] else EXIT_NUMERICAL


def cmd_power(args) -> int:
    _require(args, "model", "theta0", "null", "P", "G", "seed",
             "burst_start", "burst_end", "burst_theta1")
    if (args.alpha is None) == (args.level is None):
        raise CliError("give exactly one of --alpha / --level")
    payload = _scenario_payload(args)
    payload.update(
        {
            "offsets": _parse_offsets(args.offsets),
            "alpha": args.alpha,
            "level": args.level,
            "replications": args.reps,
            "mc_count": args.mc_count,
            "seed": args.seed,
            "threads": args.threads,
        }
    )
    result = _post(args.server, "/power", payload)
    out = _outdir(args)
    _write_json(
        out / "power.json",
        {k: result[k] for k in (
            "rows", "alpha_equal", "alpha_standard", "alpha_sliding",
            "level", "seed", "replications",
        )},
    )
    (out / "power.csv").write_text(result["csv"], encoding="utf-8")
    print(f"wrote {out / 'power.json'} and {out / 'power.csv'}")
    return EXIT_OK


# -- parser ----------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--server", default=None, help="remote service URL (default: in-process)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--config", default=None, help="JSON or key=value config file; flags win")


def _add_model(p: argparse.ArgumentParser, *, theta0: bool) -> None:
    p.add_argument("--model", default=None,
                   choices=["poisson", "gaussian-known", "gaussian", "exponential"])
    p.add_argument("--sigma", type=float, default=1.0,
                   help="known standard deviation (gaussian-known only)")
    if theta0:
        p.add_argument("--theta0", default=None, help="comma-separated parameter vector")
    p.add_argument("--null", default=None, help="null constraints, e.g. rate=2.0")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="burstlr",
        description="Sliding-window multiple likelihood-ratio burst detection",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="run both rejection procedures on an event file")
    _add_model(p, theta0=False)
    p.add_argument("--input", default=None, help="CSV (t,x) or JSON-lines event file")
    p.add_argument("--P", type=int, default=None)
    p.add_argument("--G", type=int, default=None)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--level", type=float, default=None)
    p.add_argument("--offset", type=float, default=0.0)
    p.add_argument("--mc-count", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_detect, _parser=p)

    p = sub.add_parser("calibrate", help="solve for alpha at a target type-I error")
    p.add_argument("--procedure", choices=["standard", "sliding"], default=None)
    p.add_argument("--level", type=float, default=None)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--r", type=int, default=1, help="degrees of freedom of the null")
    p.add_argument("--N", type=int, default=None, help="number of disjoint windows")
    p.add_argument("--counts", default=None, help="bin counts (constant or comma list)")
    p.add_argument("--P", type=int, default=None)
    p.add_argument("--G", type=int, default=None)
    p.add_argument("--mc-count", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_calibrate, _parser=p)

    p = sub.add_parser("simulate", help="generate a synthetic event file")
    _add_model(p, theta0=True)
    p.add_argument("--P", type=int, default=None)
    p.add_argument("--G", type=int, default=1)
    p.add_argument("--counts", default="200")
    p.add_argument("--burst-start", type=float, default=None)
    p.add_argument("--burst-end", type=float, default=None)
    p.add_argument("--burst-theta1", default=None)
    p.add_argument("--seed", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_simulate, _parser=p)

    p = sub.add_parser("validate", help="check the limiting laws at desk scale")
    _add_model(p, theta0=True)
    p.add_argument("--P", type=int, default=None)
    p.add_argument("--G", type=int, default=None)
    p.add_argument("--counts", default="200")
    p.add_argument("--reps", type=int, default=2000)
    p.add_argument("--profile", choices=["desk", "deep"], default=None)
    p.add_argument("--theorem", choices=["1", "2", "both"], default="both")
    p.add_argument("--threads", type=int, default=0)
    p.add_argument("--seed", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_validate, _parser=p)

    p = sub.add_parser("power", help="origin-offset power sweep for both procedures")
    _add_model(p, theta0=True)
    p.add_argument("--P", type=int, default=None)
    p.add_argument("--G", type=int, default=None)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--counts", default="200")
    p.add_argument("--burst-start", type=float, default=None)
    p.add_argument("--burst-end", type=float, default=None)
    p.add_argument("--burst-theta1", default=None)
    p.add_argument("--offsets", default="0")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--level", type=float, default=None)
    p.add_argument("--reps", type=int, default=2000)
    p.add_argument("--mc-count", type=int, default=100_000)
    p.add_argument("--threads", type=int, default=0)
    p.add_argument("--seed", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_power, _parser=p)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _merge_config(args._parser, args, argv)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
