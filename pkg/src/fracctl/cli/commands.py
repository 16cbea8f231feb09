"""Implementations of the batch verbs. Each returns a process exit code."""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .. import __version__
from ..fixtures import design_plant_name, get_plant, load_controllers, plant_names
from ..lti import (
    CsvFormatError,
    FractionalTf,
    RationalTf,
    closed_loop,
    dc_gain,
    is_stable,
    read_signals_csv,
    simulate,
    system_from_dict,
    system_to_dict,
    tustin_d2c,
)
from ..modred import NioptdI, NioptdII, ReductionSettings, Template, reduce, reduce_all_templates
from ..sysid import (
    DataRecord,
    EstimatorSpec,
    IdentifiedModel,
    NoiseSpec,
    Structure,
    estimate,
    generate_stepback_data,
    order_sweep,
)
from ..tuner import FopidParams, TuningSpec, achieved_spec, phase_flatness, step_metrics, tune_fopid, tune_pid
from .config import ProjectConfig
from .svg import plot_csv

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class InputError(Exception):
    """Bad user input: exit code 2."""


class NumericalFailure(Exception):
    """A computation could not produce a usable result: exit code 3."""


def warn(msg: str) -> None:
    print(f"fracctl: warning: {msg}", file=sys.stderr)


# --------------------------------------------------------------------------
# output helpers


def _jsonable(v):
    if isinstance(v, float):
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, np.generic):
        return _jsonable(v.item())
    return v


def write_json(out_dir: Path, name: str, payload: dict, cfg: ProjectConfig) -> Path:
    path = out_dir / name
    body = {"meta": cfg.meta(), **payload}
    path.write_text(json.dumps(_jsonable(body), indent=2, allow_nan=False) + "\n")
    return path


def csv_text(header: list[str], rows, cfg: ProjectConfig, comments: tuple[str, ...] = ()) -> str:
    buf = io.StringIO()
    buf.write(f"# fracctl {__version__} config_hash={cfg.hash}\n")
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _write(out_dir: Path, name: str, text: str) -> Path:
    path = out_dir / name
    path.write_text(text)
    return path


def _svg_note(cfg: ProjectConfig) -> str:
    return f"fracctl {__version__} config_hash={cfg.hash}"


# --------------------------------------------------------------------------
# input resolution


def resolve(path: str, base: str) -> Path:
    """Relative input paths are taken relative to the configured directory."""
    p = Path(path)
    return p if p.is_absolute() else Path(base) / p


def _read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc


def _identified_to_continuous(m: IdentifiedModel) -> RationalTf:
    try:
        return tustin_d2c(m.system_num, m.system_den, m.Ts)
    except ValueError as exc:
        raise InputError(f"identified model has no continuous equivalent: {exc}") from exc


def _reduced_params(d: dict):
    kind = d.get("kind")
    fields = {k: v for k, v in d.items() if k != "kind"}
    if kind == "NioptdI":
        return NioptdI(**fields)
    if kind == "NioptdII":
        return NioptdII(**fields)
    raise InputError(f"unknown reduced-model kind {kind!r}")


def system_from_json(d: dict, source: str, prefer_template: str = "NIOPTD-II") -> tuple[str, RationalTf | FractionalTf]:
    """Accept a system description, an identified model, a ``model.json`` or a ``reduced.json``."""
    try:
        if "type" in d and "num_terms" in d:
            return source, system_from_dict(d)
        if "structure" in d and "coeffs" in d:
            return source, _identified_to_continuous(IdentifiedModel.from_dict(d))
        if "models" in d and "selected" in d:
            return source, _identified_to_continuous(IdentifiedModel.from_dict(d["models"][d["selected"]]))
        if "sources" in d:
            src = d["sources"][0]
            for r in src["results"]:
                if r["template"] == prefer_template and r["params"] is not None:
                    return f"{src['name']}:{prefer_template}", _reduced_params(r["params"]).to_fractional_tf()
            raise InputError(f"{source}: no {prefer_template} result to use")
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{source}: malformed model file: {exc}") from exc
    raise InputError(f"{source}: not a recognised model file")


def fixture_system(name: str, which: str):
    try:
        f = get_plant(name)
    except KeyError as exc:
        raise InputError(str(exc.args[0])) from exc
    if which == "identified":
        return f.identified
    if which == "nioptd1":
        return f.nioptd1.to_fractional_tf()
    return f.nioptd2.to_fractional_tf()


def expand_fixtures(names: list[str] | None) -> list[str]:
    out = []
    for n in names or []:
        out += plant_names() if n == "all" else [n]
    return out


def gather_systems(paths, fixtures, which: str, model_dir: str = ".", prefer_template: str = "NIOPTD-II"):
    systems = [(n, fixture_system(n, which)) for n in expand_fixtures(fixtures)]
    for p in paths or []:
        systems.append(system_from_json(_read_json(resolve(p, model_dir)), Path(p).stem, prefer_template))
    if not systems:
        raise InputError("no systems given (pass model files or --fixture NAME|all)")
    return systems


def load_controller(ref: str, model_dir: str = ".") -> tuple[str, FopidParams]:
    bundled = load_controllers()
    if ref in bundled:
        return ref, bundled[ref]
    d = _read_json(resolve(ref, model_dir))
    try:
        return Path(ref).stem, FopidParams.from_dict(d.get("params", d))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{ref}: malformed controller file: {exc}") from exc


def _parse_floats(text: str, what: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"{what}: {exc}") from exc
    if not vals:
        raise InputError(f"{what}: empty list")
    return vals


# --------------------------------------------------------------------------
# identify


_STRUCTS = ("ARX", "ARMAX", "OE", "BJ")


def _matched_spec(structure: Structure, den: int, num: int, noise: int, nk: int) -> EstimatorSpec:
    if structure is Structure.ARX:
        return EstimatorSpec(structure, na=den, nb=num, nk=nk)
    if structure is Structure.ARMAX:
        return EstimatorSpec(structure, na=den, nb=num, nc=noise, nk=nk)
    if structure is Structure.OE:
        return EstimatorSpec(structure, nb=num, nf=den, nk=nk)
    return EstimatorSpec(structure, nb=num, nf=den, nc=noise, nd=noise, nk=nk)


def cmd_identify(args, cfg: ProjectConfig, out_dir: Path) -> int:
    if args.data and args.synthetic:
        raise InputError("give either a data file or --synthetic, not both")
    if args.data:
        try:
            text = resolve(args.data, cfg.data_dir).read_text()
        except OSError as exc:
            raise InputError(f"cannot read {args.data}: {exc.strerror or exc}") from exc
        try:
            sig = read_signals_csv(text)
        except CsvFormatError as exc:
            raise InputError(f"{args.data}: {exc}") from exc
        if sig.t.size < 2:
            raise InputError(f"{args.data}: need at least two samples")
        Ts = float(np.median(np.diff(sig.t)))
        if Ts <= 0 or np.max(np.abs(np.diff(sig.t) - Ts)) > 1e-6 * Ts:
            raise InputError(f"{args.data}: time column must be uniformly increasing")
        data, source = DataRecord(Ts, sig.u, sig.y), args.data
    elif args.synthetic:
        plant = fixture_system(args.synthetic, "identified")
        noise = NoiseSpec.off() if args.noise_free else NoiseSpec(True, cfg.noise_sigma_fraction, cfg.noise_num, cfg.noise_den, cfg.seed)
        data = generate_stepback_data(plant, cfg.drop_fraction, cfg.ramp_time, cfg.total_time, cfg.Ts, noise, method=args.method)
        source = f"synthetic:{args.synthetic}"
    else:
        raise InputError("no data: pass a t,u,y CSV file or --synthetic FIXTURE")

    structures = [Structure(s.upper()) for s in (args.structure or _STRUCTS)]
    den = args.na if args.na is not None else args.nf
    num = args.nb
    noise = args.nc if args.nc is not None else (args.nd if args.nd is not None else cfg.noise_order)
    nk = cfg.nk if args.nk is None else args.nk
    rows, models = [], {}
    try:
        if den is not None and num is not None:
            for s in structures:
                try:
                    m = estimate(data, _matched_spec(s, den, num, noise, nk))
                except ValueError as exc:
                    raise InputError(f"{s.value}: {exc}") from exc
                models[s.value] = m
        else:
            for s in structures:
                sweep = order_sweep(data, s, cfg.order_range, noise_order=noise, nk=nk)
                good = [e for e in sweep if e.model is not None]
                if good:
                    models[s.value] = good[0].model
                else:
                    warn(f"{s.value}: no order in the sweep produced a fit")
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"estimation failed: {exc}") from exc
    if not models:
        raise NumericalFailure("no structure produced a model")

    def key(item):
        m = item[1]
        return (math.inf if m.aic is None else m.aic, m.V)

    ranked = sorted(models.items(), key=key)
    for rank, (name, m) in enumerate(ranked, start=1):
        s = m.spec
        rows.append([rank, name, s.na, s.nb, s.nc, s.nd, s.nf, s.nk, s.n_params, float(m.V), "" if m.aic is None else float(m.aic)])
    header = ["rank", "structure", "na", "nb", "nc", "nd", "nf", "nk", "n_params", "V", "aic"]
    _write(out_dir, "aic_table.csv", csv_text(header, rows, cfg, (f"data={source} N={data.N} Ts={data.Ts!r}",)))
    selected = ranked[0][0]
    payload = {
        "data": {"source": source, "N": data.N, "Ts": data.Ts},
        "selected": selected,
        "models": {n: {**m.to_dict(), "continuous": _continuous_or_none(m)} for n, m in ranked},
    }
    write_json(out_dir, "model.json", payload, cfg)
    for name, m in ranked:
        if not m.converged:
            warn(f"{name}: estimator stopped before converging ({m.message})")
    print(f"selected {selected} (AIC {ranked[0][1].aic})")
    return EXIT_OK


def _continuous_or_none(m: IdentifiedModel):
    try:
        return system_to_dict(tustin_d2c(m.system_num, m.system_den, m.Ts))
    except ValueError:
        return None


# --------------------------------------------------------------------------
# reduce


def _templates(names: list[str] | None) -> list[Template]:
    if not names or "all" in names:
        return list(Template)
    try:
        return [Template.parse(n) for n in names]
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def cmd_reduce(args, cfg: ProjectConfig, out_dir: Path) -> int:
    systems = gather_systems(args.model, args.fixture, "identified", cfg.model_dir)
    templates = _templates(args.template)
    n_starts = args.starts or cfg.n_starts
    if n_starts < 1:
        raise InputError("--starts must be at least 1")
    settings = ReductionSettings(cfg.oustaloup_order, tuple(cfg.band), cfg.pade_order, cfg.max_evals, cfg.xtol)
    sources, rows = [], []
    any_feasible = False
    for name, sys_ in systems:
        if isinstance(sys_, FractionalTf):
            if not sys_.is_integer_order():
                raise InputError(f"{name}: reduction source must be an integer-order model")
            sys_ = sys_.to_rational()
        if not is_stable(sys_):
            raise InputError(f"{name}: source model is unstable, so its H2 distance to any stable template is undefined")
        try:
            dc = dc_gain(sys_)
        except ValueError as exc:
            raise InputError(f"{name}: {exc}") from exc
        if set(templates) == set(Template):
            results = reduce_all_templates(sys_, n_starts, cfg.seed, settings)
        else:
            results = {t: reduce(sys_, t, n_starts, cfg.seed, settings) for t in templates}
        entries = []
        for t in templates:
            r = results[t]
            any_feasible |= r.feasible
            if not r.feasible:
                warn(f"{name} {t.value}: {'; '.join(r.diagnostics) or 'no feasible candidate'}")
            e = r.to_dict()
            e["system"] = None if r.params is None else system_to_dict(r.params.to_fractional_tf())
            entries.append(e)
        sources.append({"name": name, "dc_gain": dc, "source": system_to_dict(sys_), "results": entries})
        rows.append([name, dc] + [float(results[t].J_normalized) for t in templates])
    if not any_feasible:
        raise NumericalFailure("no template produced a stable candidate")
    write_json(out_dir, "reduced.json", {"n_starts": n_starts, "seed": cfg.seed, "sources": sources}, cfg)
    header = ["plant", "dc_gain"] + [f"J_normalized_{t.value}" for t in templates]
    _write(out_dir, "table2.csv", csv_text(header, rows, cfg))
    return EXIT_OK


# --------------------------------------------------------------------------
# tune


def _tune_plant(args, cfg: ProjectConfig):
    if args.plant and args.fixture:
        raise InputError("give either a plant file or --fixture, not both")
    if args.plant:
        return system_from_json(_read_json(resolve(args.plant, cfg.model_dir)), Path(args.plant).stem)
    name = args.fixture or design_plant_name()
    return name, fixture_system(name, "nioptd2")


def cmd_tune(args, cfg: ProjectConfig, out_dir: Path) -> int:
    if bool(args.spec) == bool(args.backout):
        raise InputError("give exactly one of --spec FILE or --backout fopid|pid")
    name, plant = _tune_plant(args, cfg)
    if args.spec:
        try:
            spec = TuningSpec.from_dict(_read_json(resolve(args.spec, cfg.spec_dir)))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{args.spec}: invalid tuning spec: {exc}") from exc
        spec_source = args.spec
    else:
        ref = load_controllers()[args.backout]
        try:
            spec = achieved_spec(plant, ref, cfg.omega_gc, cfg.omega_t, cfg.omega_s)
        except ValueError as exc:
            raise NumericalFailure(f"cannot extract the achieved targets: {exc}") from exc
        spec_source = f"achieved by bundled {args.backout} controller"
    tune = tune_fopid if args.controller == "fopid" else tune_pid
    report = tune(plant, spec, seed=cfg.seed, max_restarts=cfg.max_restarts)
    if not np.all(np.isfinite(report.params.as_vector())):
        raise NumericalFailure("tuner produced non-finite parameters")
    try:
        slope, width = phase_flatness(plant, report.params, spec.omega_gc, cfg.flatness_half_decades)
    except ValueError:
        slope, width = math.nan, math.nan
    write_json(out_dir, "controller.json", {"controller": args.controller, "plant": name, "params": report.params.to_dict()}, cfg)
    rep = report.to_dict()
    rep["phase_flatness"] = {"slope": slope, "flat_band_width": width}
    write_json(out_dir, "tune_report.json", {"plant": name, "spec_source": spec_source, "spec": spec.to_dict(), "report": rep}, cfg)
    if not report.converged:
        warn(f"tuning targets not met: {report.message}")
    return EXIT_OK


# --------------------------------------------------------------------------
# simulate


def cmd_simulate(args, cfg: ProjectConfig, out_dir: Path) -> int:
    fixtures = args.fixture if (args.fixture or args.plant) else ["all"]
    plants = gather_systems(args.plant, fixtures, "nioptd2", cfg.model_dir)
    controllers = [load_controller(c, cfg.model_dir) for c in (args.controller or ["fopid"])]
    gains = _parse_floats(args.gains, "--gains")
    if not (0.0 <= args.drop <= 1.0):
        raise InputError("--drop must lie in [0, 1]")
    Ts, t_final = cfg.sim_Ts, cfg.sim_t_final
    n = int(round(t_final / Ts)) + 1
    t = np.arange(n) * Ts
    stride = max(1, int(round(args.trace_dt / Ts)))
    columns, traces, metrics, unstable = [], [], [], []
    for cname, params in controllers:
        for pname, plant in plants:
            for g in gains:
                label = f"{cname}/{pname}/x{g:g}"
                entry = {"controller": cname, "plant": pname, "gain_scale": g}
                if g == 0.0:
                    y = np.zeros(n)
                    entry.update(stable=True, degenerate=True, overshoot_pct=0.0, settling_time=math.inf, steady_state_error=1.0)
                else:
                    try:
                        cl = closed_loop(plant, params.scaled(g).to_fractional_tf(), cfg.oustaloup_order, tuple(cfg.band), cfg.pade_order)
                    except ValueError as exc:
                        raise InputError(f"{label}: {exc}") from exc
                    if not cl.is_stable():
                        unstable.append(label)
                        y = np.full(n, math.nan)
                        entry.update(stable=False, degenerate=False, overshoot_pct=math.nan, settling_time=math.inf, steady_state_error=math.nan)
                    else:
                        unit = simulate(cl.complementary_ss, np.ones(n), Ts)
                        ov, st, sse = step_metrics(t, unit)
                        y = args.drop * unit
                        entry.update(stable=True, degenerate=False, overshoot_pct=ov, settling_time=st, steady_state_error=sse)
                metrics.append(entry)
                columns.append(label)
                traces.append(y[::stride])
    ts = t[::stride]
    rows = [[float(ts[i])] + [float(tr[i]) for tr in traces] for i in range(ts.size)]
    comments = [f"scenario=stepback drop={args.drop!r}"] + [f"UNSTABLE {u}" for u in unstable]
    text = csv_text(["t"] + columns, rows, cfg, tuple(comments))
    _write(out_dir, "transients.csv", text)
    spreads = {}
    for cname, _ in controllers:
        for pname, _ in plants:
            ovs = [m["overshoot_pct"] for m in metrics if m["controller"] == cname and m["plant"] == pname and m["stable"] and not m.get("degenerate")]
            spreads[f"{cname}/{pname}"] = (max(ovs) - min(ovs)) if ovs else math.nan
    write_json(out_dir, "metrics.json", {"scenario": "stepback", "drop": args.drop, "gains": gains, "traces": metrics, "overshoot_spread": spreads}, cfg)
    title = f"Step-back response, drop {args.drop:g}"
    if unstable:
        title += f" ({len(unstable)} unstable trace(s) omitted)"
    _write(out_dir, "plot.svg", plot_csv(text, "t", [(columns, "output")], logx=False, title=title, note=_svg_note(cfg)))
    for u in unstable:
        warn(f"closed loop unstable: {u}")
    return EXIT_OK


# --------------------------------------------------------------------------
# bode


def _unwrapped_phase_deg(values: np.ndarray) -> np.ndarray:
    return np.degrees(np.unwrap(np.angle(values)))


def cmd_bode(args, cfg: ProjectConfig, out_dir: Path) -> int:
    systems = gather_systems(args.system, args.fixture, "nioptd2", cfg.model_dir)
    if cfg.bode_min <= 0 or cfg.bode_max <= cfg.bode_min:
        raise InputError("bode grid needs 0 < bode_min < bode_max")
    w = np.geomspace(cfg.bode_min, cfg.bode_max, cfg.bode_points)
    ctrl = load_controller(args.controller, cfg.model_dir) if args.controller else None
    if args.mode == "st" and ctrl is None:
        raise InputError("--mode st needs --controller")
    if args.flatness and ctrl is None:
        raise InputError("--flatness needs --controller")
    header, cols, comments = ["omega"], [w], []
    mag_cols, ph_cols = [], []
    for name, sys_ in systems:
        vals, valid = sys_.evaluate_jw(w)
        if not np.all(valid):
            raise InputError(f"{name}: response undefined on the grid")
        if ctrl is not None:
            cname, params = ctrl
            vals = vals * params.evaluate_jw(w)
            name = f"{cname}*{name}"
        if args.mode == "st":
            s = 1.0 / (1.0 + vals)
            for lab, v in ((f"|S| {name}", s), (f"|T| {name}", vals * s)):
                header.append(lab + " dB")
                cols.append(20.0 * np.log10(np.abs(v)))
                mag_cols.append(lab + " dB")
        else:
            header += [f"{name} mag dB", f"{name} phase deg"]
            cols += [20.0 * np.log10(np.abs(vals)), _unwrapped_phase_deg(vals)]
            mag_cols.append(f"{name} mag dB")
            ph_cols.append(f"{name} phase deg")
        if args.flatness:
            slope, width = phase_flatness(sys_, ctrl[1], cfg.omega_gc, cfg.flatness_half_decades)
            comments.append(f"flatness {name} omega_gc={cfg.omega_gc!r} slope={slope!r} flat_band_width={width!r}")
    rows = [[float(c[i]) for c in cols] for i in range(w.size)]
    text = csv_text(header, rows, cfg, tuple(comments))
    _write(out_dir, "bode.csv", text)
    panels = [(mag_cols, "magnitude (dB)")]
    if ph_cols:
        panels.append((ph_cols, "phase (deg)"))
    title = "Sensitivity and complementary sensitivity" if args.mode == "st" else "Bode diagram"
    if comments and args.flatness:
        title += f", flat phase at omega = {cfg.omega_gc:g}"
    _write(out_dir, "bode.svg", plot_csv(text, "omega", panels, logx=True, title=title, note=_svg_note(cfg) + ("; " + "; ".join(comments) if comments else "")))
    return EXIT_OK
