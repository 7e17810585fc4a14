"""Needle tip, friction and shaft forces along an insertion.

Force model
-----------
Tip force is piecewise:

* approaching an unpunctured boundary into a stiffer layer, the boundary
  behaves as a membrane: the tip presses it forward and the force ramps as
  stiffness_next * deformation, capped at the next layer's rupture force.
  When the ramp reaches the rupture force the boundary punctures, the
  deformation resets and the tip finds itself inside the new layer.
* otherwise the tip cuts at the plateau given by the containing layer's
  cutting force. Over the tip-protrusion millimetres after crossing a
  tissue-to-gelatin boundary the plateau unloads linearly from the tissue
  cutting force down to the gelatin one (the protruding tip is not yet
  fully beyond the interface).
* at the surface, and while retracting, the tip force is zero.

Friction accumulates per traversed segment: each layer is assigned one
slope (N/mm) for the whole insertion, drawn uniformly from the layer's
friction_slope_range, and contributes slope * covered_length. While the
needle is stationary the total friction relaxes exponentially toward a
fraction of its held value. Shaft force is tip + friction, floored at 0.

All functions are pure: they take a state and return values or a new
state, never mutating their inputs. Determinism: the per-insertion slope
draw is seeded by phantom.seed XOR the insertion counter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import RetractionBelowZero
from .phantom import InterfaceKind, Material, PhantomSpec, interfaces

DEFAULT_V_MAX = 20.0          # mm/s, safety clamp on commanded motion
RELAX_FRACTION = 0.7          # stationary friction decays toward this fraction
RELAX_TAU = 2.0               # s


@dataclass(frozen=True)
class NeedleGeometry:
    sheath_outer_diameter: float = 2.05   # mm
    tip_protrusion: float = 5.0           # mm beyond the sheath
    fiber_gap_rest: float = 0.5           # mm, unloaded sensing cavity

    def validate(self) -> None:
        if min(self.sheath_outer_diameter, self.tip_protrusion,
               self.fiber_gap_rest) <= 0:
            raise ValueError("needle geometry values must be positive")


@dataclass(frozen=True)
class MechState:
    depth: float                       # mm, tip position below surface
    velocity: float                    # mm/s of the last step
    punctured_boundaries: frozenset    # depths of ruptured membranes
    pending_deformation: float         # mm of membrane indentation
    segment_slopes: tuple              # friction slope per layer, N/mm
    relax: float                       # friction relaxation factor in (0, 1]
    t: float                           # s


def membranes(phantom: PhantomSpec) -> list[tuple[float, float, float]]:
    """Interior boundaries that rupture: (depth, stiffness, rupture_force)
    of the stiffer layer below. The surface is never a membrane."""
    out = []
    for above, below in zip(phantom.layers, phantom.layers[1:]):
        if below.stiffness > above.stiffness:
            out.append((above.end_depth, below.stiffness, below.rupture_force))
    return out


def new_insertion(phantom: PhantomSpec, insertion: int = 0) -> MechState:
    """Fresh state at the surface; draws this insertion's friction slopes."""
    rng = np.random.default_rng(phantom.seed ^ insertion)
    slopes = tuple(
        float(rng.uniform(*layer.friction_slope_range))
        for layer in phantom.layers
    )
    return MechState(depth=0.0, velocity=0.0,
                     punctured_boundaries=frozenset(),
                     pending_deformation=0.0, segment_slopes=slopes,
                     relax=1.0, t=0.0)


def _active_membrane(depth: float, punctured: frozenset,
                     phantom: PhantomSpec):
    """Shallowest unpunctured membrane the tip has reached, or None."""
    for b, stiffness, rupture in membranes(phantom):
        if b in punctured:
            continue
        if depth >= b - 1e-12:
            return b, stiffness, rupture
        break  # membranes are sorted; deeper ones are not reached yet
    return None


def step(state: MechState, dx: float, dt: float, phantom: PhantomSpec,
         geometry: NeedleGeometry, v_max: float = DEFAULT_V_MAX) -> MechState:
    """Advance the needle by dx over dt and update puncture bookkeeping.

    Requires dt > 0 and |dx| <= v_max * dt. Raises RetractionBelowZero if
    the motion would pull the tip above the surface.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if abs(dx) > v_max * dt + 1e-9:
        raise ValueError(f"|dx|={abs(dx):.4f} exceeds v_max*dt="
                         f"{v_max * dt:.4f}")
    depth = state.depth + dx
    if depth < -1e-12:
        raise RetractionBelowZero(f"depth {state.depth} + dx {dx} < 0")
    depth = max(depth, 0.0)

    punctured = state.punctured_boundaries
    while True:
        active = _active_membrane(depth, punctured, phantom)
        if active is None:
            pending = 0.0
            break
        b, stiffness, rupture = active
        pending = max(depth - b, 0.0)
        if stiffness * pending >= rupture - 1e-12:
            punctured = punctured | {b}
            continue
        break

    if dx == 0.0:
        relax = RELAX_FRACTION + (state.relax - RELAX_FRACTION) * math.exp(
            -dt / RELAX_TAU)
    else:
        relax = 1.0
    return replace(state, depth=depth, velocity=dx / dt,
                   punctured_boundaries=punctured,
                   pending_deformation=pending, relax=relax,
                   t=state.t + dt)


def tip_force(state: MechState, phantom: PhantomSpec,
              geometry: NeedleGeometry) -> float:
    """Force acting on the needle tip alone, in newtons."""
    if state.depth <= 0.0 or state.velocity < 0.0:
        return 0.0

    active = _active_membrane(state.depth, state.punctured_boundaries,
                              phantom)
    if active is not None:
        b, stiffness, rupture = active
        return min(stiffness * (state.depth - b), rupture)

    idx = phantom.layer_index_at(state.depth)
    layer = phantom.layers[idx]
    force = layer.cutting_force

    # Exit unloading: within one tip protrusion past a tissue->gelatin
    # boundary, part of the tissue load still acts on the protruding tip.
    if layer.material is Material.GELATIN and idx > 0:
        prev = phantom.layers[idx - 1]
        past = state.depth - layer.start_depth
        if (prev.material is Material.EX_VIVO_TISSUE
                and past < geometry.tip_protrusion):
            span = prev.cutting_force - layer.cutting_force
            force = prev.cutting_force - (past / geometry.tip_protrusion) * span
    return force


def friction_base(depth: float, state: MechState,
                  phantom: PhantomSpec) -> float:
    """Friction accumulated by the shaft at the given depth, before any
    stationary relaxation: sum over layers of slope * covered length."""
    total = 0.0
    for layer, slope in zip(phantom.layers, state.segment_slopes):
        covered = min(depth, layer.end_depth) - layer.start_depth
        if covered <= 0.0:
            break
        total += slope * covered
    return total


def friction_force(state: MechState, phantom: PhantomSpec) -> float:
    """Current friction force on the shaft, in newtons."""
    return state.relax * friction_base(state.depth, state, phantom)


def shaft_force(state: MechState, phantom: PhantomSpec,
                geometry: NeedleGeometry) -> float:
    """Total axial force: tip + friction, floored at zero."""
    return max(tip_force(state, phantom, geometry)
               + friction_force(state, phantom), 0.0)


def deformation_limit(phantom: PhantomSpec, boundary_depth: float) -> float:
    """Deformation at which the membrane at boundary_depth ruptures
    (rupture_force / stiffness of the layer below)."""
    for b, stiffness, rupture in membranes(phantom):
        if abs(b - boundary_depth) < 1e-9:
            return rupture / stiffness
    raise KeyError(f"no membrane at depth {boundary_depth}")


def entry_exit_windows(phantom: PhantomSpec,
                       geometry: NeedleGeometry) -> list[tuple[float, float]]:
    """Depth windows [entry, exit + protrusion + deformation_limit] around
    each tissue layer, inside which the tip force may exceed the gelatin
    level. Used by property tests."""
    windows = []
    events = interfaces(phantom)
    entries = [e for e in events if e.kind is InterfaceKind.ENTRY]
    exits = [e for e in events if e.kind is InterfaceKind.EXIT]
    for entry, exit_ in zip(entries, exits):
        windows.append((entry.depth,
                        exit_.depth + geometry.tip_protrusion
                        + deformation_limit(phantom, entry.depth)))
    return windows
