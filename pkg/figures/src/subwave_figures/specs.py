"""Figure definitions: inputs, drawing, and qualitative checklists."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict

import numpy as np

from . import checks as C

RATE_WG = "laser detuning (guided-rate units)"
RATE_FS = "laser detuning (free-space-rate units)"
SPACING = "spacing (wavelengths)"


@dataclass(frozen=True)
class FigureSpec:
    figure_id: str
    inputs: Dict[str, str]            # logical name -> file name inside --in
    draw: Callable                    # (tables, fig) -> None
    checklist: Callable               # (tables) -> list[CheckResult]
    description: str


REGISTRY: Dict[str, FigureSpec] = {}


def register(spec: FigureSpec) -> FigureSpec:
    REGISTRY[spec.figure_id] = spec
    return spec


# -- two-emitter guided spectrum --------------------------------------------

def _draw_two_emitter_spectrum(tables, fig):
    ax = fig.subplots()
    base, shifted = tables["base"], tables["shifted"]
    ax.plot(base["Delta_L"], base["T"], label="no global shift", color="tab:green")
    ax.plot(shifted["Delta_L"], shifted["T"], label="uniform shift +0.2",
            color="tab:olive")
    ax.set_xlabel(RATE_WG)
    ax.set_ylabel("transmittance")
    ax.set_ylim(-0.02, 1.05)
    ax.legend()


def _check_two_emitter_spectrum(tables):
    base, shifted = tables["base"], tables["shifted"]
    out = [
        C.has_deep_dip(base["Delta_L"], base["T"], floor=0.05),
        C.has_unit_peak(base["Delta_L"], base["T"], level=0.99),
        C.sharp_feature(base["Delta_L"], base["T"], within=0.1),
        # a +0.2 uniform shift on the emitters moves the features down-detuning
        C.peak_shifted_by(base["Delta_L"], base["T"],
                          shifted["Delta_L"], shifted["T"],
                          shift=-0.2, tol=0.02),
    ]
    return out


register(FigureSpec(
    "two_emitter_spectrum",
    {"base": "pair_spectrum.csv", "shifted": "pair_spectrum_shifted.csv"},
    _draw_two_emitter_spectrum, _check_two_emitter_spectrum,
    "Guided two-emitter transmittance with its narrow transparency spike, "
    "with and without a global detuning"))


# -- two-emitter peak sensitivity vs spacing ---------------------------------

def _draw_two_emitter_sensitivity(tables, fig):
    ax = fig.subplots()
    sweep = tables["sweep"]
    ref = float(tables["single"]["S_star"][0])
    ax.semilogy(sweep["x"], sweep["S_max"], marker="o", label="two emitters")
    ax.axhline(ref, linestyle="--", color="k", label="single emitter")
    ax.set_xlabel(SPACING)
    ax.set_ylabel("peak |dT/dDelta|")
    ax.legend()


def _check_two_emitter_sensitivity(tables):
    sweep = tables["sweep"]
    ref = float(tables["single"]["S_star"][0])
    return [
        C.monotone(sweep["S_max"], "decreasing", name="sensitivity_vs_spacing"),
        C.all_above(sweep["S_max"], ref, name="beats_single_emitter"),
    ]


register(FigureSpec(
    "two_emitter_sensitivity",
    {"sweep": "pair_smax_sweep.csv", "single": "single_emitter_max.csv"},
    _draw_two_emitter_sensitivity, _check_two_emitter_sensitivity,
    "Peak sensitivity of a guided emitter pair vs spacing against the "
    "single-emitter bound"))


# -- dark-state spectra -------------------------------------------------------

def _draw_dark_state_spectrum(tables, fig):
    ax = fig.subplots()
    ax.plot(tables["bare"]["Delta_L"], tables["bare"]["T"], "k--",
            label="degenerate pair, no control detuning")
    ax.plot(tables["pair"]["Delta_L"], tables["pair"]["T"], color="tab:green",
            label="degenerate pair, +-0.1 control detuning")
    ax.plot(tables["lattice"]["Delta_L"], tables["lattice"]["T"],
            color="tab:olive", label="lattice two-mode model, a=0.55")
    ax.set_xlabel(RATE_FS)
    ax.set_ylabel("transmittance")
    ax.set_ylim(-0.02, 1.05)
    ax.legend(fontsize=8)


def _check_dark_state_spectrum(tables):
    bare, pair, lattice = tables["bare"], tables["pair"], tables["lattice"]
    window = np.abs(bare["Delta_L"]) <= 0.5
    out = [
        C.check("bare_is_featureless_dip",
                bare["T"][window].max() < 0.3,
                f"max T within half a linewidth {bare['T'][window].max():.3g}"),
        C.has_unit_peak(pair["Delta_L"], pair["T"], level=0.999,
                        name="pair_unit_peak"),
        C.sharp_feature(pair["Delta_L"], pair["T"], high=0.999, low=1e-4,
                        within=0.15, name="pair_peak_between_zeros"),
        C.has_unit_peak(lattice["Delta_L"], lattice["T"], level=0.9,
                        name="lattice_peak"),
        C.sharp_feature(lattice["Delta_L"], lattice["T"], high=0.9, low=0.1,
                        within=0.1, name="lattice_sharp_rise"),
        C.asymmetric_about_peak(lattice["Delta_L"], lattice["T"],
                                min_asymmetry=0.05),
    ]
    return out


register(FigureSpec(
    "dark_state_spectrum",
    {"bare": "dicke_pair_bare.csv", "pair": "dicke_pair_detuned.csv",
     "lattice": "lattice_model_spectrum.csv"},
    _draw_dark_state_spectrum, _check_dark_state_spectrum,
    "Transmittance with a control detuning coupling bright and dark modes: "
    "degenerate emitter pair and infinite-lattice two-mode model"))


# -- lattice sensitivity vs spacing -------------------------------------------

def _draw_lattice_sensitivity(tables, fig):
    ax = fig.subplots()
    for key, label in (("d020", "coupling 0.2"), ("d010", "coupling 0.1"),
                       ("d005", "coupling 0.05")):
        ax.semilogy(tables[key]["x"], tables[key]["S_max"], marker=".",
                    label=label)
    ax.set_xlabel(SPACING)
    ax.set_ylabel("peak |dT/dDelta|")
    ax.legend()


def _check_lattice_sensitivity(tables):
    curves = [tables[k]["S_max"] for k in ("d020", "d010", "d005")]
    out = [C.ordered_curves(curves, name="smaller_coupling_more_sensitive")]
    for key in ("d020", "d010", "d005"):
        v = tables[key]["S_max"]
        i = int(np.argmin(v))
        interior = 0 < i < len(v) - 1
        elevated = v[0] > 1.3 * v[i] and v[-1] > 1.3 * v[i]
        out.append(C.check(
            f"{key}_enhanced_toward_small_spacing_and_degeneracy",
            interior and elevated,
            f"argmin index {i}, end/min ratios {v[0] / v[i]:.2f}, {v[-1] / v[i]:.2f}"))
    return out


register(FigureSpec(
    "lattice_sensitivity",
    {"d020": "lattice_smax_d020.csv", "d010": "lattice_smax_d010.csv",
     "d005": "lattice_smax_d005.csv"},
    _draw_lattice_sensitivity, _check_lattice_sensitivity,
    "Infinite-lattice peak sensitivity vs spacing for several control-"
    "detuning amplitudes"))


# -- site-resolved sensitivity ------------------------------------------------

_SITE_KEYS = ("none", "sinusoidal", "linear")


def _value_col(tab):
    return [c for c in tab.columns if c not in ("x", "stderr")][0]


def _draw_site_resolved(tables, fig):
    axes = fig.subplots(1, 2)
    for ax, wrt in zip(axes, ("det", "pos")):
        for key, color in zip(_SITE_KEYS, ("tab:blue", "tab:olive", "tab:red")):
            tab = tables[f"{wrt}_{key}"]
            ax.semilogy(tab["x"], tab[_value_col(tab)], marker=".",
                        color=color, label=f"control: {key}")
        ax.set_xlabel(SPACING)
    axes[0].set_ylabel("integrated detuning-gradient norm")
    axes[1].set_ylabel("integrated position-gradient norm")
    axes[0].legend(fontsize=8)


def _check_site_resolved(tables):
    out = []
    for wrt in ("det", "pos"):
        for key in _SITE_KEYS:
            tab = tables[f"{wrt}_{key}"]
            vals = tab[_value_col(tab)]
            out.append(C.check(f"{wrt}_{key}_positive", bool(np.all(vals > 0)),
                               f"min {vals.min():.3g}"))
            out.append(C.check(f"{wrt}_{key}_spacing_dependent",
                               float(np.ptp(vals)) > 0.05 * float(np.max(vals)),
                               f"relative variation {np.ptp(vals) / np.max(vals):.2%}"))
    return out


register(FigureSpec(
    "site_resolved_sensitivity",
    {f"{wrt}_{key}": f"site_{wrt}_{key}.csv"
     for wrt in ("det", "pos") for key in _SITE_KEYS},
    _draw_site_resolved, _check_site_resolved,
    "Frequency-integrated gradient norms of a four-emitter chain vs spacing "
    "for different control detunings (detunings and positions)"))


# -- imperfection sensitivity -------------------------------------------------

def _draw_imperfections(tables, fig):
    axes = fig.subplots(1, 2)
    for key, label in (("loss0", "no loss"), ("loss001", "loss 0.01"),
                       ("loss01", "loss 0.1")):
        axes[0].semilogy(tables[key]["x"], tables[key]["S_max"], marker=".",
                         label=label)
    for key, label in (("sigma0", "static"), ("sigma001", "spread 0.01"),
                       ("sigma005", "spread 0.05")):
        axes[1].semilogy(tables[key]["x"], tables[key]["S_max"], marker=".",
                         label=label)
    ref = float(tables["single"]["S_star"][0])
    for ax, title in zip(axes, ("non-guided loss", "position spread")):
        ax.axhline(ref, linestyle="--", color="k", lw=0.8)
        ax.set_xlabel(SPACING)
        ax.set_title(title, fontsize=9)
        ax.legend(fontsize=7)
    axes[0].set_ylabel("peak |dT/dDelta|")


def _check_imperfections(tables):
    ideal_loss = tables["loss0"]["S_max"]
    ideal_sigma = tables["sigma0"]["S_max"]
    out = [C.monotone(ideal_loss, "decreasing", name="ideal_sensitivity_vs_spacing")]
    for key in ("loss001", "loss01"):
        tab = tables[key]
        out.append(C.interior_maximum(tab["x"], tab["S_max"],
                                      name=f"{key}_optimal_spacing"))
        out.append(C.check(f"{key}_below_ideal",
                           bool(np.all(tab["S_max"] <= ideal_loss + 1e-12)),
                           ""))
    for key in ("sigma001", "sigma005"):
        tab = tables[key]
        out.append(C.check(
            f"{key}_suppressed_near_degeneracy",
            float(tab["S_max"][0]) < float(ideal_sigma[0]),
            f"{tab['S_max'][0]:.3g} vs static {ideal_sigma[0]:.3g}"))
    return out


register(FigureSpec(
    "imperfection_sensitivity",
    {"loss0": "loss_gp0.csv", "loss001": "loss_gp001.csv", "loss01": "loss_gp01.csv",
     "sigma0": "motion_sigma0.csv", "sigma001": "motion_sigma001.csv",
     "sigma005": "motion_sigma005.csv", "single": "single_emitter_max.csv"},
    _draw_imperfections, _check_imperfections,
    "Two-emitter peak sensitivity vs spacing under non-guided loss and "
    "motional position spread"))


# -- missing atoms -------------------------------------------------------------

def _draw_missing(tables, fig):
    ax = fig.subplots()
    tab = tables["sweep"]
    ax.errorbar(100 * tab["x"], tab["S_max"], yerr=tab["stderr"], marker="o",
                capsize=3)
    ax.set_xlabel("missing sites (%)")
    ax.set_ylabel("averaged peak |dT/dDelta|")


def _check_missing(tables):
    tab = tables["sweep"]
    return [
        C.non_increasing_within_error(tab["S_max"], tab["stderr"]),
        C.check("stochastic_points_report_errors",
                bool(np.all(tab["stderr"][tab["x"] > 0] > 0)), ""),
    ]


register(FigureSpec(
    "missing_atoms",
    {"sweep": "missing_sweep.csv"},
    _draw_missing, _check_missing,
    "Realization-averaged peak sensitivity of a lattice vs the fraction of "
    "missing sites"))


# -- bright/dark mode crossing --------------------------------------------------

def _draw_mode_crossing(tables, fig):
    axes = fig.subplots(1, 2)
    tab = tables["modes"]
    axes[0].plot(tab["a"], tab["J_B"], label="bright shift")
    axes[0].plot(tab["a"], tab["J_D"], label="dark shift")
    axes[0].set_xlabel(SPACING)
    axes[0].set_ylabel("collective shift (rate units)")
    axes[0].legend(fontsize=8)
    axes[1].plot(tab["a"], tab["abs_JB_minus_JD"])
    if "mode_crossing_spacing" in tab.comments:
        axes[1].axvline(float(tab.comments["mode_crossing_spacing"]),
                        linestyle=":", color="k")
    axes[1].set_xlabel(SPACING)
    axes[1].set_ylabel("|shift difference|")


def _check_mode_crossing(tables):
    tab = tables["modes"]
    signed = tab["J_B"] - tab["J_D"]
    return [
        C.sign_change_inside(tab["a"], signed, 0.26, 0.30,
                             name="crossing_in_window"),
        C.folded_kink_at_crossing(tab["a"], signed),
        C.check("corner_mode_stays_dark",
                bool(np.all(tab["Gamma_D"] < 1e-6)),
                f"max dark rate {tab['Gamma_D'].max():.2e}"),
    ]


register(FigureSpec(
    "mode_crossing",
    {"modes": "lattice.csv"},
    _draw_mode_crossing, _check_mode_crossing,
    "Bright/dark collective shifts of the infinite lattice vs spacing, with "
    "the shift-difference kink at their crossing"))


# -- finite-size scaling ---------------------------------------------------------

def _draw_size_scaling(tables, fig):
    ax = fig.subplots()
    tab = tables["sweep"]
    ref = float(tables["infinite"]["S_star"][0])
    ax.plot(tab["x"], tab["S_max"], marker="o", label="finite array")
    ax.axhline(ref, linestyle="--", color="k", label="infinite-array model")
    ax.set_xlabel("emitters per side")
    ax.set_ylabel("peak |dT/dDelta|")
    ax.legend(fontsize=8)


def _check_size_scaling(tables):
    tab = tables["sweep"]
    ref = float(tables["infinite"]["S_star"][0])
    vals = tab["S_max"]
    return [
        C.all_below(vals, ref, name="finite_below_infinite"),
        C.non_monotone(vals, name="growth_not_monotone"),
        C.check("overall_growth", float(vals[-1]) > float(vals[0]), ""),
    ]


register(FigureSpec(
    "size_scaling",
    {"sweep": "size_sweep.csv", "infinite": "infinite_reference.csv"},
    _draw_size_scaling, _check_size_scaling,
    "Peak sensitivity of finite lattices vs side length against the "
    "infinite-array two-mode value"))
