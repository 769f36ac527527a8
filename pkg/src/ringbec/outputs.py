"""Deterministic file writers: CSV, JSON reports, PGM images, manifests.

All floating-point values are written in the shortest decimal form that
round-trips to the same 64-bit float (Python ``repr``), so repeated runs
with identical inputs produce byte-identical files.
"""
from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .dynamics import ConservationReport
from .observables import GrowthFit, OnsetReport, Trajectory
from .tof import TofImage

__all__ = [
    "config_hash",
    "fmt",
    "sha256_file",
    "write_json",
    "write_manifest",
    "write_onset_json",
    "write_pgm16",
    "write_spectrum_csv",
    "write_tof_csv",
    "write_trajectory_csv",
]


def fmt(x) -> str:
    """Shortest round-trip decimal representation of a 64-bit float."""
    v = float(x)
    if math.isnan(v) or math.isinf(v):
        return repr(v)
    return repr(v)


def _write_text(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Columns: tau, per-ring mode occupations, then the derived traces."""
    m_max = traj.m_max
    cols = (["tau"]
            + [f"nu_{m}" for m in range(-m_max, m_max + 1)]
            + [f"nd_{m}" for m in range(-m_max, m_max + 1)]
            + ["lz_u", "lz_d", "n_u", "n_d", "norm", "energy", "lz_total"])
    occ_u, occ_d = traj.occupations_u, traj.occupations_d
    lz_u, lz_d = traj.lz_u, traj.lz_d
    n_u, n_d, norm = traj.n_u, traj.n_d, traj.norm
    m = traj.modes
    lz_tot = (occ_u * m).sum(axis=1) + (occ_d * m).sum(axis=1)
    lines = [",".join(cols)]
    for i, tau in enumerate(traj.taus):
        row = ([fmt(tau)]
               + [fmt(v) for v in occ_u[i]]
               + [fmt(v) for v in occ_d[i]]
               + [fmt(lz_u[i]), fmt(lz_d[i]), fmt(n_u[i]), fmt(n_d[i]),
                  fmt(norm[i]), fmt(traj.energy[i]), fmt(lz_tot[i])])
        lines.append(",".join(row))
    _write_text(path, "\n".join(lines) + "\n")


def write_spectrum_csv(chart: dict, path) -> None:
    """Columns: kappa, m, re_omega_minus, im_omega_minus, growth_rate."""
    lines = ["kappa,m,re_omega_minus,im_omega_minus,growth_rate"]
    for i in range(len(chart["kappa"])):
        lines.append(",".join([
            fmt(chart["kappa"][i]),
            str(int(chart["m"][i])),
            fmt(chart["re_omega_minus"][i]),
            fmt(chart["im_omega_minus"][i]),
            fmt(chart["growth_rate"][i]),
        ]))
    _write_text(path, "\n".join(lines) + "\n")


def write_tof_csv(image: TofImage, path) -> None:
    """Columns: kx, ky, intensity (row-major over ky, then kx)."""
    lines = ["kx,ky,intensity"]
    for iy, ky in enumerate(image.ky_grid):
        for ix, kx in enumerate(image.kx_grid):
            lines.append(f"{fmt(kx)},{fmt(ky)},{fmt(image.intensity[iy, ix])}")
    _write_text(path, "\n".join(lines) + "\n")


def write_pgm16(image: TofImage, path) -> None:
    """16-bit binary PGM (big-endian), intensity scaled to [0, 65535].

    Rows run over ky ascending, columns over kx ascending.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = np.round(image.intensity * 65535.0).astype(">u2")
    header = f"P5\n{image.kx_grid.size} {image.ky_grid.size}\n65535\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())


def write_json(obj, path) -> None:
    _write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def onset_record(onset: OnsetReport, fit: GrowthFit | None,
                 gamma_analytic: float | None) -> dict:
    """JSON record combining onset detection and the growth-rate fit."""
    return {
        "tau_osc": onset.tau_osc,
        "reached": onset.reached,
        "max_imbalance": onset.max_imbalance,
        "lz_amplitude": onset.lz_amplitude,
        "gamma_fit": None if fit is None else fit.gamma_fit,
        "gamma_analytic": gamma_analytic,
        "residual": None if fit is None else fit.residual,
    }


def write_onset_json(onset: OnsetReport, fit: GrowthFit | None,
                     gamma_analytic: float | None, path) -> None:
    write_json(onset_record(onset, fit, gamma_analytic), path)


def config_hash(spec: dict) -> str:
    """Hash of the semantically meaningful part of an experiment spec."""
    semantic = {k: v for k, v in spec.items()
                if k in ("schema", "mode", "run", "integrator", "spectrum",
                         "tof", "physical", "onset", "sweep", "preset")}
    blob = json.dumps(semantic, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, spec: dict, files: list[dict],
                   conservation: ConservationReport | None = None,
                   units: dict | None = None,
                   extra: dict | None = None) -> Path:
    """Manifest listing every produced file with its hash and the run config."""
    out_dir = Path(out_dir)
    entries = []
    for f in files:
        p = out_dir / f["name"]
        entries.append({"name": f["name"], "kind": f["kind"],
                        "sha256": sha256_file(p)})
    manifest = {
        "schema": 1,
        "spec": spec,
        "config_hash": config_hash(spec),
        "files": entries,
        "status": "flagged" if (conservation is not None and conservation.flagged) else "ok",
    }
    if conservation is not None:
        manifest["conservation"] = conservation.as_dict()
    if units is not None:
        manifest["units"] = units
    if extra:
        manifest.update(extra)
    path = out_dir / "manifest.json"
    write_json(manifest, path)
    return path
