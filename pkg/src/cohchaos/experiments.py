"""Configured experiment runs: JSON config, energy-shell projection, CSV output.

Every run writes its data files plus a run_manifest.json with the fully
expanded configuration, achieved energies, and the conventions version, so
a result directory is self-describing and byte-reproducible.
"""

from __future__ import annotations

import csv
import difflib
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .algebra import CONVENTIONS_VERSION, CohChaosError
from .corrections import build_kernel, entropy_series, save_kernel_csv
from .dynamics import (
    IntegratorConfig,
    ProductState,
    integrate,
    label_distances,
    lyapunov_series,
    mf_overlap,
    trajectory_energy,
)
from .model import BilinearHamiltonian, MaserParams, classical_energy, maser_hamiltonian
from .oracle import (
    ExactEvolver,
    build_hamiltonian_matrix,
    exact_overlap_pair,
    field_annihilation_expectation,
    hilbert_for_labels,
    product_coherent_vector,
    reduced_linear_entropy,
)


class ConfigError(CohChaosError):
    """Malformed or inconsistent experiment configuration."""


class EnergyProjectionError(CohChaosError):
    """No crossing of the target energy along the requested direction."""


VERBS = ("trajectory", "overlap-pair", "entropy", "lyapunov", "oracle-compare", "fig1")

_TOP_KEYS = {
    "preset",
    "model",
    "pairs",
    "t_final",
    "sampling_dt",
    "energy_target",
    "n_max",
    "rel_tol",
    "abs_tol",
    "lyapunov",
}
_MODEL_KEYS = {"epsilon", "omega", "g", "g_prime", "j"}
_LYAP_KEYS = {"delta0", "window", "t_total"}

_ROOT2 = math.sqrt(2.0)

# Demonstration set: two nearby initial pairs on the E = 8.5 shell of the
# resonant maser, the first pair deep in the chaotic sea and the second on
# a regular island. Field labels are quoted as real plane coordinates q
# with x = q / sqrt(2), and the couplings 0.5 and 0.2 are quoted in the
# matching normalization, hence the same sqrt(2) divisor.
_FIG1_PLANE = (
    (5.7263433, -0.24253563),
    (5.7778567, -0.26845243),
    (3.615516, 0.53452248),
    (3.68977334, 0.50086791),
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved run description."""

    model: MaserParams
    states: tuple[ProductState, ...]
    t_final: float = 25.0
    sampling_dt: float = 0.05
    energy_target: float | None = None
    n_max: int | None = None
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    lyapunov_delta0: float = 1e-6
    lyapunov_window: float = 1.0
    lyapunov_t_total: float = 300.0

    def __post_init__(self) -> None:
        if not self.states:
            raise ConfigError("config needs at least one initial state in 'pairs'")
        if not (self.t_final > 0.0 and self.sampling_dt > 0.0):
            raise ConfigError("t_final and sampling_dt must be positive")


def expand_preset(name: str) -> dict:
    if name != "fig1":
        raise ConfigError(f"unknown preset '{name}'; available presets: fig1")
    return {
        "model": {"epsilon": 1.0, "omega": 1.0, "g": 0.5 / _ROOT2, "g_prime": 0.2 / _ROOT2, "j": 4.5},
        "pairs": [[q / _ROOT2, 0.0, y, 0.0] for q, y in _FIG1_PLANE],
        "t_final": 25.0,
        "sampling_dt": 0.05,
        "energy_target": 8.5,
        "n_max": 120,
    }


def _check_keys(given, allowed: set, prefix: str = "") -> None:
    unknown = sorted(set(given) - allowed)
    if not unknown:
        return
    parts = []
    for key in unknown:
        hint = difflib.get_close_matches(key, sorted(allowed), n=1)
        suffix = f" (did you mean '{hint[0]}'?)" if hint else ""
        parts.append(f"'{prefix}{key}'{suffix}")
    raise ConfigError(f"unknown config key(s) {', '.join(parts)}; allowed: {sorted(allowed)}")


def _require_number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{where}' must be a number, got {value!r}")
    return float(value)


def config_from_dict(data: dict) -> ExperimentConfig:
    """Validate a raw mapping and build the run description.

    A 'preset' key expands first; any other keys given alongside it
    override the expansion. Unknown keys anywhere are an error.
    """
    if not isinstance(data, dict):
        raise ConfigError(f"config root must be an object, got {type(data).__name__}")
    _check_keys(data, _TOP_KEYS)
    data = dict(data)
    preset = data.pop("preset", None)
    if preset is not None:
        base = expand_preset(preset)
        base.update(data)
        data = base

    model_raw = data.get("model", {})
    if not isinstance(model_raw, dict):
        raise ConfigError("'model' must be an object")
    _check_keys(model_raw, _MODEL_KEYS, prefix="model.")
    model = MaserParams(**{k: _require_number(v, f"model.{k}") for k, v in model_raw.items()})

    pairs = data.get("pairs")
    if not isinstance(pairs, list) or not pairs:
        raise ConfigError("'pairs' must be a non-empty list of [re_x, im_x, re_y, im_y] rows")
    states = []
    for i, row in enumerate(pairs):
        if not isinstance(row, list) or len(row) != 4:
            raise ConfigError(f"'pairs[{i}]' must be a list of four numbers [re_x, im_x, re_y, im_y]")
        vals = [_require_number(v, f"pairs[{i}][{k}]") for k, v in enumerate(row)]
        states.append(ProductState(x=complex(vals[0], vals[1]), y=complex(vals[2], vals[3])))

    lyap_raw = data.get("lyapunov", {})
    if not isinstance(lyap_raw, dict):
        raise ConfigError("'lyapunov' must be an object")
    _check_keys(lyap_raw, _LYAP_KEYS, prefix="lyapunov.")

    n_max = data.get("n_max")
    if n_max is not None:
        if isinstance(n_max, bool) or not isinstance(n_max, int):
            raise ConfigError(f"'n_max' must be an integer, got {n_max!r}")

    energy_target = data.get("energy_target")
    if energy_target is not None:
        energy_target = _require_number(energy_target, "energy_target")

    return ExperimentConfig(
        model=model,
        states=tuple(states),
        t_final=_require_number(data.get("t_final", 25.0), "t_final"),
        sampling_dt=_require_number(data.get("sampling_dt", 0.05), "sampling_dt"),
        energy_target=energy_target,
        n_max=n_max,
        rel_tol=_require_number(data.get("rel_tol", 1e-10), "rel_tol"),
        abs_tol=_require_number(data.get("abs_tol", 1e-12), "abs_tol"),
        lyapunov_delta0=_require_number(lyap_raw.get("delta0", 1e-6), "lyapunov.delta0"),
        lyapunov_window=_require_number(lyap_raw.get("window", 1.0), "lyapunov.window"),
        lyapunov_t_total=_require_number(lyap_raw.get("t_total", 300.0), "lyapunov.t_total"),
    )


def load_raw(path) -> dict:
    """Read a config file into a raw mapping, with located JSON errors."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path} at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config root in {path} must be an object, got {type(data).__name__}")
    return data


def load_config(path) -> ExperimentConfig:
    return config_from_dict(load_raw(path))


def apply_overrides(data: dict, overrides) -> dict:
    """Apply 'dotted.key=json_value' items onto a raw config mapping."""
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override '{item}' must have the form key=value")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            nxt = node.setdefault(part, {})
            if not isinstance(nxt, dict):
                raise ConfigError(f"override '{key}' descends into non-object '{part}'")
            node = nxt
        node[parts[-1]] = value
    return data


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return {
        "model": {
            "epsilon": cfg.model.epsilon,
            "omega": cfg.model.omega,
            "g": cfg.model.g,
            "g_prime": cfg.model.g_prime,
            "j": cfg.model.j,
        },
        "pairs": [[s.x.real, s.x.imag, s.y.real, s.y.imag] for s in cfg.states],
        "t_final": cfg.t_final,
        "sampling_dt": cfg.sampling_dt,
        "energy_target": cfg.energy_target,
        "n_max": cfg.n_max,
        "rel_tol": cfg.rel_tol,
        "abs_tol": cfg.abs_tol,
        "lyapunov": {
            "delta0": cfg.lyapunov_delta0,
            "window": cfg.lyapunov_window,
            "t_total": cfg.lyapunov_t_total,
        },
    }


def project_to_energy(
    s: ProductState,
    h: BilinearHamiltonian,
    target: float,
    direction: str = "im_x",
    span: float = 8.0,
    samples: int = 161,
) -> ProductState:
    """Shift one real coordinate of the field label onto the target energy shell.

    The shift closest to zero is found by scanning for a sign change and
    polishing it with a bracketing root solve. If the energy never crosses
    the target along the direction, the scanned interval and attained range
    are reported.
    """
    if direction == "im_x":
        def shifted(u: float) -> ProductState:
            return replace(s, x=s.x + 1j * u)
    elif direction == "re_x":
        def shifted(u: float) -> ProductState:
            return replace(s, x=s.x + u)
    else:
        raise ValueError(f"direction must be 'im_x' or 're_x', got {direction!r}")

    def gap(u: float) -> float:
        cand = shifted(u)
        return classical_energy(h, cand.x, cand.y) - target

    g0 = gap(0.0)
    if abs(g0) <= 1e-12 * max(1.0, abs(target)):
        return s
    us = np.linspace(-span, span, samples)
    vals = np.array([gap(u) for u in us])
    best = None
    for i in range(len(us) - 1):
        if vals[i] * vals[i + 1] <= 0.0:
            center = abs(0.5 * (us[i] + us[i + 1]))
            if best is None or center < best[0]:
                best = (center, us[i], us[i + 1])
    if best is None:
        raise EnergyProjectionError(
            f"no {direction} shift in [{-span}, {span}] reaches energy {target}: "
            f"attained range [{vals.min() + target:.6g}, {vals.max() + target:.6g}]"
        )
    root = brentq(gap, best[1], best[2], xtol=1e-14, rtol=8.9e-16)
    return shifted(float(root))


def project_with_fallback(
    s: ProductState, h: BilinearHamiltonian, target: float
) -> tuple[ProductState, str]:
    """Project along im_x, falling back to re_x when the shell is one-sided there."""
    failures = []
    for direction in ("im_x", "re_x"):
        try:
            return project_to_energy(s, h, target, direction=direction), direction
        except EnergyProjectionError as exc:
            failures.append(str(exc))
    raise EnergyProjectionError("; ".join(failures))


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.12g}"


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _pair_rows(h, s1, s2, t_final, icfg):
    t1 = integrate(h, s1, t_final, icfg)
    t2 = integrate(h, s2, t_final, icfg)
    rows = []
    for i, t in enumerate(t1.times):
        a, b = t1.state_at(i), t2.state_at(i)
        ov = abs(mf_overlap(a, b, h.group_a, h.group_b)) ** 2
        d_f, d_s = label_distances(a, b, h.group_a, h.group_b)
        rows.append((t, ov, d_f, d_s))
    return rows


def run_experiment(verb: str, cfg: ExperimentConfig, out_dir) -> dict:
    """Execute one verb, write its CSVs and manifest under out_dir."""
    if verb not in VERBS:
        raise ConfigError(f"unknown verb '{verb}'; available: {', '.join(VERBS)}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    h = maser_hamiltonian(cfg.model)
    icfg = IntegratorConfig(rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol, dense_output_dt=cfg.sampling_dt)

    states = list(cfg.states)
    manifest: dict = {
        "verb": verb,
        "conventions_version": CONVENTIONS_VERSION,
        "config": config_to_dict(cfg),
        "initial_energies": [float(classical_energy(h, s.x, s.y)) for s in states],
        "outputs": [],
    }
    if cfg.energy_target is not None:
        projected = [project_with_fallback(s, h, cfg.energy_target) for s in states]
        states = [p[0] for p in projected]
        manifest["projection_directions"] = [p[1] for p in projected]
        manifest["achieved_energies"] = [float(classical_energy(h, s.x, s.y)) for s in states]
        manifest["initial_condition_note"] = (
            "configured label coordinates are real parts; imaginary parts were set "
            "by shifting one field coordinate onto the target energy shell"
        )

    def emit(name: str, header, rows) -> None:
        _write_csv(out / name, header, rows)
        manifest["outputs"].append(name)

    if verb == "trajectory":
        drifts = []
        for i, s in enumerate(states):
            traj = integrate(h, s, cfg.t_final, icfg)
            energy = trajectory_energy(h, traj)
            drifts.append(float(np.max(np.abs(energy - energy[0]))))
            emit(
                f"trajectory_{i}.csv",
                ["t", "re_x", "im_x", "re_y", "im_y", "eta_x", "eta_y", "s0", "s1", "energy"],
                zip(
                    traj.times, traj.x.real, traj.x.imag, traj.y.real, traj.y.imag,
                    traj.eta_x, traj.eta_y, traj.s0, traj.s1, energy,
                ),
            )
        manifest["energy_drift"] = drifts

    elif verb == "overlap-pair":
        if len(states) < 2:
            raise ConfigError("overlap-pair needs two initial states")
        emit(
            "overlap_pair.csv",
            ["t", "overlap_sq", "d_field", "d_spin"],
            _pair_rows(h, states[0], states[1], cfg.t_final, icfg),
        )

    elif verb == "entropy":
        traj = integrate(h, states[0], cfg.t_final, icfg)
        kernel = build_kernel(traj, h)
        delta2 = entropy_series(kernel)
        save_kernel_csv(kernel, out / "kernel.csv")
        manifest["outputs"].append("kernel.csv")
        if cfg.n_max is None:
            emit("entropy.csv", ["t", "delta2"], zip(traj.times, delta2))
        else:
            s = states[0]
            hcfg = hilbert_for_labels([s.x], cfg.model.j, n_max=cfg.n_max)
            manifest["hilbert"] = {"n_max": hcfg.n_max, "j": hcfg.j, "dim": hcfg.dim}
            evolver = ExactEvolver(build_hamiltonian_matrix(cfg.model, hcfg))
            psi0 = product_coherent_vector(s.x, s.y, hcfg)
            manifest["truncation_deficits"] = [psi0.truncation_deficit]
            delta_exact = [
                reduced_linear_entropy(evolver.evolve(psi0, float(t))) for t in traj.times
            ]
            emit("entropy.csv", ["t", "delta2", "delta_exact"], zip(traj.times, delta2, delta_exact))

    elif verb == "lyapunov":
        estimates = []
        for i, s in enumerate(states):
            series = lyapunov_series(
                h, s,
                delta0=cfg.lyapunov_delta0,
                t_total=cfg.lyapunov_t_total,
                renorm_interval=cfg.lyapunov_window,
                cfg=icfg,
            )
            estimates.append(float(series.running[-1]))
            emit(
                f"lyapunov_{i}.csv",
                ["window_end", "running_exponent"],
                zip(series.window_ends, series.running),
            )
        manifest["lyapunov_estimates"] = estimates

    elif verb == "oracle-compare":
        if len(states) < 2:
            raise ConfigError("oracle-compare needs two initial states")
        labels = [s.x for s in states[:2]]
        hcfg = hilbert_for_labels(labels, cfg.model.j, n_max=cfg.n_max)
        manifest["hilbert"] = {"n_max": hcfg.n_max, "j": hcfg.j, "dim": hcfg.dim}
        evolver = ExactEvolver(build_hamiltonian_matrix(cfg.model, hcfg))
        trajs = [integrate(h, s, cfg.t_final, icfg) for s in states[:2]]
        psi0 = [product_coherent_vector(s.x, s.y, hcfg) for s in states[:2]]
        manifest["truncation_deficits"] = [p.truncation_deficit for p in psi0]
        rows = []
        for i, t in enumerate(trajs[0].times):
            evolved = [evolver.evolve(p, float(t)) for p in psi0]
            ov_exact = abs(exact_overlap_pair(evolved[0], evolved[1]))
            ov_mf = abs(
                mf_overlap(trajs[0].state_at(i), trajs[1].state_at(i), h.group_a, h.group_b)
            )
            rows.append(
                (t, abs(field_annihilation_expectation(evolved[0]) - trajs[0].x[i]), ov_exact, ov_mf)
            )
        emit("oracle_compare.csv", ["t", "field_err", "abs_overlap_exact", "abs_overlap_mf"], rows)

    elif verb == "fig1":
        if len(states) < 4:
            raise ConfigError("fig1 needs the four preset initial states (two pairs)")
        for name, (i, k) in (("chaotic", (0, 1)), ("regular", (2, 3))):
            emit(
                f"fig1_{name}.csv",
                ["t", "overlap_sq", "d_field", "d_spin"],
                _pair_rows(h, states[i], states[k], cfg.t_final, icfg),
            )

    with open(out / "run_manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
