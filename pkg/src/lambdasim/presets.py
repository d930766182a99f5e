"""Named run configurations.

Loss rates follow the figure they reproduce. Photon numbers are scaled down
(``desk_scale = true``) so that the truncated space fits a single workstation;
time limits are shortened where the scaled dynamics settles sooner.
"""
from __future__ import annotations

from copy import deepcopy

from .config import RunConfig, from_sections
from .initial_states import ConfigurationError

# snapshot time inside the first collapse for two coherent fields of mean 3:
# the mean-10 value 23.21 scaled by the revival-time factor sqrt(3 / 10)
COLLAPSE_TIME_MEAN3 = 12.71

_FIG2_LOSSES = {"kappa": 0.001, "r13": 0.01, "r23": 0.01, "r12": 0.002,
                "g31": 0.01, "g32": 0.01, "g21": 0.002}
_CPT_LOSSES = {"r13": 0.05, "r23": 0.05, "r12": 0.0}


def _coherent(mean):
    return {"kind": "coherent", "mean": mean}


def _squeezed(mean):
    return {"kind": "squeezed", "mean": mean}


_PRESETS = {
    "fig2_losses": ("Fig. 2", "all three loss channels, two coherent fields, long-time return to level 1", {
        "run": {"scenario": "evolve", "desk_scale": "true"},
        "losses": _FIG2_LOSSES,
        "probe": _coherent(3), "coupling": _coherent(3),
        "truncation": {"k_max": 14, "m_max": 14},
        "grid": {"t_end": 1500, "dt": 0.02, "record_every": 50},
        "observables": {"probes": "populations, means, quantum_polarization",
                        "coherence_order": 0},
    }),
    "fig3a_cpt": ("Fig. 3(a)", "radiative losses drive two coherent fields into CPT", {
        "run": {"scenario": "evolve", "desk_scale": "true"},
        "losses": _CPT_LOSSES,
        "probe": _coherent(4), "coupling": _coherent(4),
        "truncation": {"k_max": 16, "m_max": 16},
        "grid": {"t_end": 400, "dt": 0.01, "record_every": 10},
        "observables": {"coherence_order": "auto"},
    }),
    "fig3b_cpt_r12": ("Fig. 3(b)", "as fig3a_cpt with r12 = 0.01 breaking the trapping", {
        "run": {"scenario": "evolve", "desk_scale": "true"},
        "losses": {"r13": 0.05, "r23": 0.05, "r12": 0.01},
        "probe": _coherent(4), "coupling": _coherent(4),
        "truncation": {"k_max": 16, "m_max": 16},
        "grid": {"t_end": 400, "dt": 0.01, "record_every": 10},
    }),
    "fig4_squeezed": ("Fig. 4", "two squeezed vacua under radiative losses: mixed, no CPT", {
        "run": {"scenario": "evolve", "desk_scale": "true"},
        "losses": _CPT_LOSSES,
        "probe": _squeezed(4), "coupling": _squeezed(2),
        "truncation": {"k_max": 38, "m_max": 22},
        "grid": {"t_end": 400, "dt": 0.01, "record_every": 10},
    }),
    "fig5_statistics": ("Fig. 5", "photon statistics of both coherent fields under strong radiative losses", {
        "run": {"scenario": "evolve", "desk_scale": "true"},
        "losses": {"r13": 0.5, "r23": 0.5, "r12": 0.1},
        "probe": _coherent(3), "coupling": _coherent(3),
        "truncation": {"k_max": 14, "m_max": 14},
        "grid": {"t_end": 600, "dt": 0.02, "record_every": 50},
        "observables": {"probes": "populations, means, photon_statistics", "coherence_order": 0},
    }),
    "fig6_transfer": ("Fig. 6(a)", "r12 alone moves the coherent probe statistics into field 2", {
        "run": {"scenario": "transfer", "desk_scale": "true"},
        "losses": {"r12": 0.5},
        "probe": _coherent(3), "coupling": {"kind": "vacuum"},
        "truncation": {"k_max": 14, "m_max": 14},
        "grid": {"t_end": 600, "dt": 0.02, "record_every": 50},
        "observables": {"probes": "populations, means, photon_statistics", "coherence_order": 0},
    }),
    "fig6_transfer_squeezed": ("Fig. 6(b)", "statistics transfer for a squeezed probe", {
        "run": {"scenario": "transfer", "desk_scale": "true"},
        "losses": {"r12": 0.5},
        "probe": _squeezed(3), "coupling": {"kind": "vacuum"},
        "truncation": {"k_max": 30, "m_max": 30},
        "grid": {"t_end": 600, "dt": 0.02, "record_every": 50},
        "observables": {"probes": "populations, means, photon_statistics", "coherence_order": 0},
    }),
    "fig9_eit": ("Fig. 9(a)", "EIT absorption spectrum, coherent probe and coupling", {
        "run": {"scenario": "sweep", "desk_scale": "true"},
        "probe": _coherent(2), "coupling": _coherent(20),
        "truncation": {"k_max": 9, "m_max": 39},
        "grid": {"t_end": 100, "dt": 0.02, "record_every": 1},
        "observables": {"probes": "populations, quantum_polarization", "coherence_order": 0},
        "sweep": {"deltas": "-10:-6:1, -5:5:0.25, 6:10:1",
                  "window": "0, 100"},
    }),
    "fig9_eit_squeezed": ("Fig. 9(a)", "EIT absorption spectrum, squeezed probe, coherent coupling", {
        "run": {"scenario": "sweep", "desk_scale": "true"},
        "probe": _squeezed(2), "coupling": _coherent(20),
        "truncation": {"k_max": 26, "m_max": 39},
        "grid": {"t_end": 100, "dt": 0.02, "record_every": 1},
        "observables": {"probes": "populations, quantum_polarization", "coherence_order": 0},
        "sweep": {"deltas": "-5:5:0.5", "window": "0, 100"},
    }),
    "fig12_bipartite": ("Fig. 12", "joint photon distribution of level 3 in the first collapse", {
        "run": {"scenario": "evolve", "desk_scale": "true"},
        "probe": _coherent(3), "coupling": _coherent(3),
        "truncation": {"k_max": 14, "m_max": 14},
        "grid": {"t_end": COLLAPSE_TIME_MEAN3, "dt": 0.01, "record_every": 10},
        "observables": {"probes": "populations, bipartite", "coherence_order": 0,
                        "snapshots": COLLAPSE_TIME_MEAN3},
    }),
    "fig13_losses": ("Fig. 13(c)", "joint photon distribution under cavity losses kappa = 0.05", {
        "run": {"scenario": "evolve", "desk_scale": "true"},
        "losses": {"kappa": 0.05},
        "probe": _coherent(3), "coupling": _coherent(3),
        "truncation": {"k_max": 14, "m_max": 14},
        "grid": {"t_end": COLLAPSE_TIME_MEAN3, "dt": 0.01, "record_every": 10},
        "observables": {"probes": "populations, bipartite", "coherence_order": 0,
                        "snapshots": COLLAPSE_TIME_MEAN3},
    }),
    "fig13_radiative": ("Fig. 13(h)", "joint photon distribution under radiative losses r = 0.05", {
        "run": {"scenario": "evolve", "desk_scale": "true"},
        "losses": {"r13": 0.05, "r23": 0.05, "r12": 0.01},
        "probe": _coherent(3), "coupling": _coherent(3),
        "truncation": {"k_max": 14, "m_max": 14},
        "grid": {"t_end": COLLAPSE_TIME_MEAN3, "dt": 0.01, "record_every": 10},
        "observables": {"probes": "populations, bipartite", "coherence_order": 0,
                        "snapshots": COLLAPSE_TIME_MEAN3},
    }),
    "cpt_coherent": ("Fig. 3(a)", "short CPT check: coherent fields of mean 4, K near 1", {
        "run": {"scenario": "evolve", "desk_scale": "true"},
        "losses": _CPT_LOSSES,
        "probe": _coherent(4), "coupling": _coherent(4),
        "truncation": {"k_max": 16, "m_max": 16},
        "grid": {"t_end": 400, "dt": 0.01, "record_every": 10},
        "observables": {"probes": "populations, means, classical_polarization, schmidt",
                        "coherence_order": 1},
    }),
    "transfer_ideal": ("Fig. 6(a)", "complete statistics transfer with r12 = 0.5 only", {
        "run": {"scenario": "transfer", "desk_scale": "true"},
        "losses": {"r12": 0.5},
        "probe": _coherent(3), "coupling": {"kind": "vacuum"},
        "truncation": {"k_max": 14, "m_max": 14},
        "grid": {"t_end": 600, "dt": 0.02, "record_every": 50},
        "observables": {"probes": "populations, means, photon_statistics", "coherence_order": 0},
    }),
    "validate_small": ("none", "envelope propagator against the generic Lindblad oracle", {
        "run": {"scenario": "validate"},
        "electronic": {"c1": 0.6, "c2": 0, "c3": 0.8},
        "probe": _coherent(1), "coupling": _coherent(0.5),
        "truncation": {"k_max": 2, "m_max": 2, "max_tail": 0.1},
        "grid": {"t_end": 2, "dt": 0.001},
        "validate": {"channels": "lossless, detuned, cavity, radiative, dephasing_matched",
                     "tolerance": 1e-6, "checkpoints": 10},
    }),
}


def names() -> list:
    return list(_PRESETS)


def sections(name: str) -> dict:
    if name not in _PRESETS:
        raise ConfigurationError(f"unknown preset {name!r}; available: {', '.join(_PRESETS)}")
    figure, description, body = _PRESETS[name]
    body = deepcopy(body)
    body["run"] = {"name": name, "description": description, **body["run"]}
    return body


def load(name: str) -> RunConfig:
    return from_sections(sections(name))


def table() -> list:
    """(name, figure, scenario, description) for every preset."""
    return [(name, fig, body["run"]["scenario"], desc) for name, (fig, desc, body) in _PRESETS.items()]
