"""Loaders for the structured-text input formats and atomic output writing.

Formats:
  fleet file    JSON list of device objects with noise-model fields
  graph file    first line: node count; one "u v" edge per following line
  hamiltonian   one "coefficient pauli_string" per line
  scenario file JSON object with queue-simulation parameters

Output files are written to a temporary sibling and renamed into place, so
a failed run never leaves a partial file at the target path.
"""

from __future__ import annotations

import csv
import json
import os
from importlib import resources
from pathlib import Path

from .cloudsim import SimDevice, make_fleet
from .qoncord import DeviceProfile
from .qsim import NoiseModel, ValidationError
from .vqa import MaxCutProblem, PauliHamiltonian

_NOISE_FIELDS = ("p1", "p2", "readout", "t_g1", "t_g2", "T1", "T2")


def load_fleet(path: str | Path) -> list[DeviceProfile]:
    with open(path) as fh:
        raw = json.load(fh)
    fleet = []
    for entry in raw:
        noise = NoiseModel(**{k: entry[k] for k in _NOISE_FIELDS if k in entry})
        noise.validate()
        fleet.append(
            DeviceProfile(
                id=str(entry["id"]),
                noise=noise,
                display_fidelity=float(entry.get("display_fidelity", 1.0)),
                pending_load=int(entry.get("pending_load", 0)),
            )
        )
    ids = [d.id for d in fleet]
    if len(set(ids)) != len(ids):
        raise ValidationError("device ids must be unique within a fleet")
    return fleet


def load_graph(path: str | Path) -> MaxCutProblem:
    lines = [
        ln.strip()
        for ln in Path(path).read_text().splitlines()
        if ln.strip() and not ln.strip().startswith("#")
    ]
    if not lines:
        raise ValidationError(f"empty graph file {path}")
    n = int(lines[0])
    edges = []
    for ln in lines[1:]:
        u, v = ln.split()
        edges.append((int(u), int(v)))
    return MaxCutProblem(n=n, edges=tuple(edges))


def load_hamiltonian(path: str | Path) -> PauliHamiltonian:
    terms = []
    for ln in Path(path).read_text().splitlines():
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        coeff, pauli = ln.split()
        terms.append((float(coeff), pauli))
    return PauliHamiltonian(terms=tuple(terms))


def load_scenario(path: str | Path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def scenario_fleet(scenario: dict, seed: int) -> list[SimDevice]:
    return make_fleet(
        n_devices=int(scenario.get("n_devices", 10)),
        seed=seed,
        fidelity_range=tuple(scenario.get("fidelity_range", (0.3, 0.9))),
        base_exec_range=tuple(scenario.get("base_exec_range", (0.5, 1.5))),
    )


def bundled_path(name: str) -> Path:
    """Path of a data file shipped inside the package."""
    return Path(str(resources.files("vqsched") / "data" / name))


def write_text_atomic(path: str | Path, text: str):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_json_atomic(path: str | Path, payload):
    write_text_atomic(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_csv_atomic(path: str | Path, header: list[str], rows: list[list]):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    os.replace(tmp, path)
