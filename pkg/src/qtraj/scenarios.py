"""Scenario execution behind ``qtraj run``."""
from __future__ import annotations

import numpy as np

from . import capacity, channels, superpose, switchsim, vacuum
from .channels import KrausChannel, channel_distance, identity_channel
from .linops import TOLERANCES, fourier_basis, matrix_from_json, matrix_to_json, max_abs, projector
from .schema import SCENARIO, schema_errors


class ScenarioError(ValueError):
    """Invalid scenario content; ``problems`` holds ``{path, message}`` records."""

    def __init__(self, problems: list[dict]):
        self.problems = problems
        super().__init__("; ".join(f"{p['path'] or '/'}: {p['message']}" for p in problems))


class _Reader:
    """Decodes scenario fields, tagging failures with their JSON pointer."""

    def __init__(self, data: dict):
        self.data = data

    def _wrap(self, pointer: str, fn, value):
        try:
            return fn(value)
        except (ValueError, KeyError, TypeError) as exc:
            raise ScenarioError([{"path": pointer, "message": str(exc)}]) from exc

    def matrix(self, key: str, pointer: str | None = None, value=None):
        value = self.data[key] if value is None else value
        return self._wrap(pointer or f"/{key}", matrix_from_json, value)

    def channel(self, key: str, value=None, pointer: str | None = None) -> KrausChannel:
        value = self.data[key] if value is None else value
        return self._wrap(pointer or f"/{key}", KrausChannel.from_dict, value)

    def extension(self, value, pointer: str) -> vacuum.VacuumExtension:
        return self._wrap(pointer, vacuum.VacuumExtension.from_dict, value)

    def step(self, value, pointer: str) -> switchsim.MemoryStep:
        return self._wrap(pointer, switchsim.MemoryStep.from_dict, value)

    def path_config(self, key: str = "omega") -> superpose.PathConfig:
        return self._wrap(f"/{key}", superpose.PathConfig, self.matrix(key))

    def call(self, pointer: str, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ValueError, TypeError) as exc:
            raise ScenarioError([{"path": pointer, "message": str(exc)}]) from exc


def _round(obj, digits: int | None):
    if digits is None:
        return obj
    if isinstance(obj, float):
        return float(f"{obj:.{digits}g}")
    if isinstance(obj, dict):
        return {k: _round(v, digits) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_round(v, digits) for v in obj]
    return obj


def _path_basis(choice, n: int):
    if choice is None or choice == "fourier":
        f = fourier_basis(n)
        return [projector(f[:, k]) for k in range(n)]
    if choice == "computational":
        return [np.diag(np.eye(n)[k]).astype(complex) for k in range(n)]
    if choice == "uniform_vs_rest":
        e0 = projector(np.ones(n))
        return [e0, np.eye(n) - e0]
    return [matrix_from_json(m) for m in choice]


def _decode(r: _Reader, eff: superpose.EffectiveChannel, opts: dict | None, tol: float, ptr: str) -> dict:
    opts = opts or {}
    basis = r._wrap(f"{ptr}/path_basis", lambda s: _path_basis(s, eff.n_paths), opts.get("path_basis"))
    corr = opts.get("corrections", "search_unitary")
    if corr != "search_unitary":
        corr = [r.channel("", value=c, pointer=f"{ptr}/corrections/{i}") for i, c in enumerate(corr)]
    rep = r.call(ptr, capacity.measure_path_decode, eff, basis, corr)
    dist = channel_distance(rep.best_effort_channel, identity_channel(eff.d))
    perfect = rep.perfectly_correctable and dist < tol
    return {
        "branches": [
            {
                "probability": fx.probability,
                "choi_purity": fx.purity,
                "unitary_fidelity": fx.unitary_fidelity,
                "unitary_correctable": fx.correctable,
                "correction": matrix_to_json(fx.correction.kraus[0]) if fx.correction.n_kraus == 1 else None,
            }
            for fx in rep.corrections
        ],
        "corrected_distance_to_identity": dist,
        "verdict": "perfectly correctable" if perfect else "not perfectly correctable",
    }


def _effective_summary(eff: superpose.EffectiveChannel) -> dict:
    return {
        "d": eff.d,
        "n_paths": eff.n_paths,
        "cptp": bool(channels.validate_cptp(eff.chan)),
        "channel": eff.chan.to_dict(),
    }


# --------------------------------------------------------------------------
# kinds


def _run_validate(r: _Reader, tol: float, seed) -> dict:
    if "channel" in r.data:
        ch = r.channel("channel")
        rep = channels.validate_cptp(ch)
        return {"cptp": rep.ok, "max_deviation": rep.max_deviation}
    ext = r.extension(r.data["extension"], "/extension")
    rep = channels.validate_cptp(ext.channel)
    try:
        vacuum.check_extension_sectors(ext)
        leak_ok = True
    except channels.NoLeakageViolation:
        leak_ok = False
    return {
        "cptp": rep.ok,
        "max_deviation": rep.max_deviation,
        "no_leakage": leak_ok,
        "extremality": vacuum.is_extreme_extension(ext).to_dict(),
    }


def _run_superpose(r: _Reader, tol: float, seed) -> dict:
    exts = [r.extension(e, f"/extensions/{i}") for i, e in enumerate(r.data["extensions"])]
    cfg = r.path_config()
    route = r.data.get("route", "independent")
    if route == "closed_form":
        first = np.array(exts[0].extended_kraus())
        if any(
            np.shape(e.extended_kraus()) != first.shape or max_abs(np.array(e.extended_kraus()) - first) > tol
            for e in exts
        ):
            raise ScenarioError([{"path": "/route", "message": "closed form needs identical extensions"}])
        if max_abs(cfg.omega - superpose.PathConfig.uniform(len(exts)).omega) > tol:
            raise ScenarioError([{"path": "/omega", "message": "closed form needs the uniform path state"}])
        eff = r.call("/extensions", superpose.closed_form_identical, exts[0], len(exts))
    elif route == "cswap":
        sup = r.call("/extensions", superpose.cswap_realization, *exts)
        eff = r.call("/omega", superpose.effective_channel, sup, cfg)
    else:
        sup = r.call("/extensions", superpose.superpose_independent, exts)
        eff = r.call("/omega", superpose.effective_channel, sup, cfg)
    out = _effective_summary(eff)
    out["route"] = route
    if all(e.vac_dim == 1 for e in exts):
        out["interference_operators"] = [matrix_to_json(vacuum.vacuum_interference_operator(e)) for e in exts]
    if "decode" in r.data:
        out["decode"] = _decode(r, eff, r.data["decode"], tol, "/decode")
    return out


def _run_switch(r: _Reader, tol: float, seed) -> dict:
    a, b = r.channel("a"), r.channel("b")
    sw = r.call("/a", switchsim.switch_channel, a, b)
    eff = r.call("/omega", superpose.effective_channel, sw, r.path_config())
    out = _effective_summary(eff)
    out["decode"] = _decode(r, eff, r.data.get("decode"), tol, "/decode")
    return out


def _run_switch_circuit(r: _Reader, tol: float, seed) -> dict:
    sa = r.step(r.data["stepA"], "/stepA")
    sb = r.step(r.data["stepB"], "/stepB")
    eta_e, eta_f = r.matrix("etaE"), r.matrix("etaF")
    full = r.call("/etaE", switchsim.switch_circuit_channel, sa, sb, eta_e, eta_f)
    eff = r.call("/omega", superpose.effective_channel, full, r.path_config())
    a = r.call("/stepA", switchsim.induced_channel, sa, eta_e)
    b = r.call("/stepB", switchsim.induced_channel, sb, eta_f)
    dist = channel_distance(full, switchsim.switch_channel(a, b))
    out = _effective_summary(eff)
    out["distance_to_switch_of_induced_channels"] = dist
    out["matches_switch"] = dist < TOLERANCES["multi_stage_circuit"]
    return out


def _run_correlated(r: _Reader, tol: float, seed) -> dict:
    v, w, sigma = r.matrix("V_AE"), r.matrix("W_BF"), r.matrix("sigma_EF")
    dims = tuple(r.data["env_dims"])
    eff = r.call("/V_AE", superpose.correlated_env_channel, v, w, sigma, r.path_config(), dims)
    return _effective_summary(eff)


def _run_capacity(r: _Reader, tol: float, seed) -> dict:
    method = r.data["method"]
    if method == "blahut_arimoto":
        if "stochastic" not in r.data:
            raise ScenarioError([{"path": "/stochastic", "message": "required for blahut_arimoto"}])
        p = r._wrap("/stochastic", capacity.StochasticMatrix, r.data["stochastic"])
        rep = capacity.blahut_arimoto(p, tol=tol, max_iter=r.data.get("max_iter", 100_000))
    elif method == "coherent_info_max":
        if "channel" not in r.data:
            raise ScenarioError([{"path": "/channel", "message": "required for coherent_info_max"}])
        ch = r.channel("channel")
        rep = r.call("/channel", capacity.coherent_information_max, ch,
                     restarts=r.data.get("restarts", 32), seed=seed)
    else:
        missing = [k for k in ("extensions", "omega", "inputs", "povm") if k not in r.data]
        if missing:
            raise ScenarioError([{"path": f"/{k}", "message": "required for induced_classical"} for k in missing])
        exts = [r.extension(e, f"/extensions/{i}") for i, e in enumerate(r.data["extensions"])]
        eff = r.call("/omega", superpose.effective_channel,
                     r.call("/extensions", superpose.superpose_independent, exts), r.path_config())
        inputs = [r.matrix("", f"/inputs/{i}", m) for i, m in enumerate(r.data["inputs"])]
        povm = [r.matrix("", f"/povm/{i}", m) for i, m in enumerate(r.data["povm"])]
        stoch = r.call("/povm", capacity.induced_classical_channel, eff, inputs, povm)
        rep = capacity.blahut_arimoto(stoch, tol=tol, max_iter=r.data.get("max_iter", 100_000))
    out = rep.to_dict()
    out["note"] = (
        "lower bound on the quantum capacity (coherent information of one use)"
        if method == "coherent_info_max"
        else "classical capacity of the stated discrete channel"
    )
    if not rep.converged:
        raise capacity.NonConvergence(rep)
    return out


def _run_memory_comb(r: _Reader, tol: float, seed) -> dict:
    sa = [r.step(s, f"/stepsA/{i}") for i, s in enumerate(r.data["stepsA"])]
    sb = [r.step(s, f"/stepsB/{i}") for i, s in enumerate(r.data["stepsB"])]
    reps = []
    for i, rep in enumerate(r.data["repeaters"]):
        if "joint" in rep:
            reps.append(r.channel("", value=rep["joint"], pointer=f"/repeaters/{i}/joint"))
        else:
            reps.append((
                r.channel("", value=rep["message"], pointer=f"/repeaters/{i}/message"),
                r.channel("", value=rep["path"], pointer=f"/repeaters/{i}/path"),
            ))
    eta_e = r.matrix("etaE") if "etaE" in r.data else None
    eta_f = r.matrix("etaF") if "etaF" in r.data else None
    eff = r.call("/repeaters", switchsim.superpose_memory_channels, sa, sb, reps, r.matrix("omega"), eta_e, eta_f)
    return _effective_summary(eff)


RUNNERS = {
    "validate": _run_validate,
    "superpose": _run_superpose,
    "switch": _run_switch,
    "switch_circuit": _run_switch_circuit,
    "correlated_env": _run_correlated,
    "capacity": _run_capacity,
    "memory_comb": _run_memory_comb,
}


def run_scenario_data(data, tol: float | None = None, seed: int | None = None) -> dict:
    """Validate and execute a parsed scenario; returns the ``outputs`` block.

    Raises
    ------
    ScenarioError
        Schema or content problems.
    capacity.NonConvergence
        An iterative method hit its iteration cap.
    """
    problems = schema_errors(data, SCENARIO)
    if problems:
        raise ScenarioError(problems)
    tol = tol if tol is not None else data.get("tol", 1e-10)
    seed = seed if seed is not None else data.get("seed", 0)
    out = RUNNERS[data["kind"]](_Reader(data), tol, seed)
    return _round(out, data.get("precision"))
