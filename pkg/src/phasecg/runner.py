"""Batch execution of a parsed run configuration."""
from __future__ import annotations

import json
import math
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig
from .diagnostics import coupling_term_E, locality_fit
from .evolution import ClassicalPropagator, PotentialSpec
from .grid import ConfigurationError, GridSpec
from .io import read_field, write_csv, write_field
from .observables import (MomentRequest, classical_expectation, classical_marginals, energy,
                          momentum_distribution, position_distribution, quantum_expectation,
                          sharpened_position_distribution, statistical_moments)
from .states import (ClassicalWaveFunction, DensityMatrix, InvalidStateError, QuantumWaveFunction,
                     gaussian_packet, harmonic_eigenstate)
from .transforms import (coarse_grain, extract_pure_state, mixed_state_embed, partial_fourier,
                         pure_state_embed, wigner_of_density)


def build_potential(cfg: RunConfig, grid: GridSpec) -> PotentialSpec:
    p = cfg["potential"]
    if p["kind"] == "tabulated":
        values = np.loadtxt(cfg.resolve_path(p["values_file"]), ndmin=1)
        if values.shape != (grid.n_z,):
            raise ConfigError(f"tabulated potential has {values.size} values, grid has {grid.n_z}",
                              cfg.line_of("potential", "values_file"))
        return PotentialSpec.tabulated(values, mass=p["mass"])
    return PotentialSpec(p["kind"], a=p["a"], b=p["b"], c=p["c"], lam=p["lam"], mass=p["mass"])


def _embed(cfg: RunConfig, psi_q: QuantumWaveFunction, grid: GridSpec) -> ClassicalWaveFunction:
    if cfg["initial"]["embed"] == "mixed":
        return mixed_state_embed(DensityMatrix.pure(psi_q, 2), grid)
    return pure_state_embed(psi_q, grid)


def build_initial(cfg: RunConfig, grid: GridSpec, potential: PotentialSpec):
    """Returns (psi_C, note dict)."""
    ini = cfg["initial"]
    kind = ini["kind"]
    if kind == "gaussian":
        psi = gaussian_packet(grid, ini["x_mean"], ini["p_mean"], ini["delta_x"], ini["delta_p"])
    elif kind == "eigenstate":
        psi = _embed(cfg, harmonic_eigenstate(grid, ini["n"], potential.mass, ini["omega"]), grid)
    elif kind == "quantum-file":
        data = np.loadtxt(cfg.resolve_path(ini["file"]), ndmin=2)
        if data.shape[0] != grid.n_z or data.shape[1] not in (1, 2):
            raise ConfigError("quantum-file must have n_z rows of 're' or 're im'",
                              cfg.line_of("initial", "file"))
        vals = data[:, 0] + (1j * data[:, 1] if data.shape[1] == 2 else 0)
        psi = _embed(cfg, QuantumWaveFunction.on_grid(grid, vals), grid)
    elif kind == "classical-file":
        field = read_field(cfg.resolve_path(ini["file"]))
        if field.grid != grid or field.axes != "zp":
            raise ConfigError("classical-file grid or axes do not match [grid]",
                              cfg.line_of("initial", "file"))
        vals = np.real(field.values)
        norm = math.sqrt(np.sum(vals ** 2) * grid.weight("zp"))
        if not norm > 0 or not math.isfinite(norm):
            raise InvalidStateError("classical-file holds a zero or non-finite field")
        psi = ClassicalWaveFunction.from_values(grid, vals / norm, renorm_factor=1 / norm)
    elif kind == "random":
        rng = np.random.default_rng(ini["seed"])
        c = rng.normal(size=6) + 1j * rng.normal(size=6)
        vals = sum(c[k] * harmonic_eigenstate(grid, k, potential.mass, ini["omega"]).values
                   for k in range(6))
        psi = _embed(cfg, QuantumWaveFunction.on_grid(grid, vals), grid)
    else:
        raise ConfigError(f"initial kind {kind!r} has no evolution path")
    return psi


class Outputs:
    def __init__(self, directory: Path):
        self.dir = directory
        self.files = []

    def path(self, name):
        self.files.append(name)
        return self.dir / name


def run(cfg: RunConfig, out_dir=None) -> dict:
    """Execute a run and return the manifest (also written to manifest.json)."""
    start = time.perf_counter()
    out = Path(out_dir) if out_dir else cfg.resolve_path(cfg["output"]["directory"])
    out.mkdir(parents=True, exist_ok=True)
    outputs = Outputs(out)
    manifest = {"tool": "phasecg", "version": __version__, "config": cfg.manifest(),
                "status": "running", "notes": [], "outputs": outputs.files}
    try:
        if cfg["initial"]["kind"] == "gaussian-sweep":
            _run_sweep(cfg, outputs, manifest)
        else:
            _run_evolution(cfg, outputs, manifest)
        manifest["status"] = "ok"
    except Exception as exc:
        manifest["status"] = "failed"
        manifest["error"] = f"{type(exc).__name__}: {exc}"
        manifest["notes"].append("partial outputs; run aborted")
        raise
    finally:
        manifest["wall_time_s"] = round(time.perf_counter() - start, 3)
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                           encoding="utf-8")
    return manifest


def _run_sweep(cfg, outputs, manifest):
    from .oracles import _moments
    grid = cfg.grid()
    header = ["s", "delta", "var_x_Q", "var_p_Q", "product_Q", "expected", "purity"]
    rows = []
    for s in cfg["initial"]["products"]:
        d = math.sqrt(s)
        psi = gaussian_packet(grid, cfg["initial"]["x_mean"], cfg["initial"]["p_mean"], d, d)
        rho = coarse_grain(partial_fourier(psi))
        _, _, vx, vp = _moments(wigner_of_density(rho, grid))
        rows.append([s, d, vx, vp, math.sqrt(vx * vp), s + 1 / (16 * s), rho.purity()])
    write_csv(outputs.path("sweep.csv"), header, rows)
    if cfg["output"]["figures"]:
        from .plotting import plot_curves
        arr = np.array(rows)
        plot_curves(outputs.path("sweep.png"), arr[:, 0],
                    {"measured": arr[:, 4], "s + 1/(16 s)": arr[:, 5]},
                    xlabel="classical product s", ylabel="quantum width product")


def _run_evolution(cfg, outputs, manifest):
    grid = cfg.grid()
    potential = build_potential(cfg, grid)
    psi = build_initial(cfg, grid, potential)
    if "renorm_factor" in psi.meta:
        manifest["renorm_factor"] = psi.meta["renorm_factor"]
    ev, obs, diag = cfg["evolution"], cfg["observables"], cfg["diagnostics"]
    requests = [MomentRequest.parse(t) for t in obs["moments"]]
    prop = ClassicalPropagator(grid, potential, ev["dt"], ev["law"])

    header = ["step", "time", "norm", "imag_fraction"]
    if obs["classical"]:
        header += [f"cl:{r.name}" for r in requests]
    if obs["quantum"]:
        header += [f"q:{r.name}" for r in requests]
    if obs["statistical"]:
        header += ["p2_s", "x2_s"]
    if obs["energy"]:
        header += ["energy"]
    if diag["purity"]:
        header += ["purity", "trace"]
    dheader = ["step", "time", "e_norm", "locality_residual"]
    want_e = diag["coupling"] or diag["locality"]
    if want_e and potential.kind == "tabulated":
        manifest["notes"].append("coupling diagnostics skipped for tabulated potential")
        want_e = False

    rows, drows = [], []
    v = np.asarray(psi.values, dtype=complex)
    state = psi
    for step in range(ev["n_steps"] + 1):
        if step:
            v = prop.step_values(v)
        if step % ev["sample_every"] and step != ev["n_steps"]:
            continue
        if not np.all(np.isfinite(v)):
            raise FloatingPointError(f"non-finite values at step {step}")
        t = step * ev["dt"]
        imag = float(np.max(np.abs(v.imag)) / max(np.max(np.abs(v.real)), 1e-300))
        state = ClassicalWaveFunction.from_values(grid, v.real, check=False)
        psi_t = partial_fourier(state)
        rho = coarse_grain(psi_t)
        wig = wigner_of_density(rho, grid)
        row = [step, t, state.norm(), imag]
        if obs["classical"]:
            row += [classical_expectation(state, r) for r in requests]
        if obs["quantum"]:
            row += [quantum_expectation(wig, r) for r in requests]
        if obs["statistical"]:
            sm = statistical_moments(state)
            row += [sm.p2_s, sm.x2_s]
        if obs["energy"]:
            row += [energy(rho, potential, grid)]
        if diag["purity"]:
            row += [rho.purity(), rho.trace()]
        rows.append(row)
        if want_e:
            E = coupling_term_E(psi_t, potential)
            res = locality_fit(E, rho).residual if diag["locality"] else math.nan
            drows.append([step, t, float(np.linalg.norm(E) * grid.dz * grid.dr), res])
        if cfg["output"]["snapshots"]:
            write_field(outputs.path(f"psi_c_{step:06d}.bin"), state.field)

    write_csv(outputs.path("timeseries.csv"), header, rows)
    if drows:
        write_csv(outputs.path("diagnostics.csv"), dheader, drows)

    final_rho = coarse_grain(partial_fourier(state))
    final_wig = wigner_of_density(final_rho, grid)
    if obs["marginals"]:
        m = classical_marginals(state)
        wq_x = position_distribution(final_rho)
        pq, wq_p = momentum_distribution(final_rho)
        write_csv(outputs.path("marginals_x.csv"), ["x", "w_C", "w_Q"],
                  zip(grid.z, m.x, wq_x))
        write_csv(outputs.path("marginals_p.csv"), ["p", "w_C", "w_Q"],
                  zip(grid.p, m.p, np.interp(grid.p, pq, wq_p)))
    sharp = None
    if obs["sharpened_beta"]:
        if final_rho.purity() > 1 - 1e-6:
            psi_q = extract_pure_state(final_rho, grid)
            sharp = [sharpened_position_distribution(psi_q, b, grid)
                     for b in obs["sharpened_beta"]]
            write_csv(outputs.path("sharpened.csv"),
                      ["x"] + [f"beta={b:.17g}" for b in obs["sharpened_beta"]],
                      zip(grid.z, *sharp))
        else:
            manifest["notes"].append("sharpened distributions need a pure final state; skipped")

    if cfg["output"]["figures"]:
        _figures(outputs, grid, header, rows, dheader, drows, state, final_wig, obs, sharp)


def _figures(outputs, grid, header, rows, dheader, drows, state, wig, obs, sharp):
    from .plotting import plot_curves, plot_phase_space, plot_series
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        plot_series(outputs.path("timeseries.png"), header, rows)
        if drows:
            plot_series(outputs.path("diagnostics.png"), dheader, drows)
        plot_phase_space(outputs.path("wigner_final.png"), grid, wig.values,
                         title="quantum transform (final)")
        plot_phase_space(outputs.path("density_final.png"), grid, state.values ** 2,
                         title="classical density w (final)", cmap="viridis", symmetric=False)
        if obs["marginals"]:
            m = classical_marginals(state)
            plot_curves(outputs.path("marginals.png"), grid.z,
                        {"classical w_C(x)": m.x,
                         "quantum w_Q(x)": position_distribution(
                             coarse_grain(partial_fourier(state)))}, xlabel="x")
        if sharp is not None:
            plot_curves(outputs.path("sharpened.png"), grid.z,
                        {f"beta={b:.3g}": s for b, s in zip(obs["sharpened_beta"], sharp)},
                        xlabel="x", ylabel="p(x)")


__all__ = ["run", "build_initial", "build_potential", "ConfigurationError"]
