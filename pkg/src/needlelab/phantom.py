"""Layered tissue phantoms with ground-truth interface locations.

A phantom is an ordered stack of material layers, each carrying the
mechanical parameters the insertion model needs: the post-puncture
tip-force plateau (cutting force), the pre-puncture ramp stiffness, the
peak force at which a layer boundary ruptures, and the admissible range
of friction-per-unit-length slopes for the needle shaft.

Depths are millimetres below the surface, forces are newtons.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ContiguityError, RangeError, SchemaError

SCHEMA_VERSION = 1

# Default draw ranges for generated phantoms. The paper-style quantities
# (tissue plateau > 1 N, gelatin < 1 N, entry-deformation of a few mm)
# constrain these; the friction ranges are additionally narrowed so the
# worst-case cumulative friction stays positive at every depth.
DEFAULT_THICKNESS_MM = (10.0, 35.0)
DEFAULT_SKIN = dict(cutting=(0.4, 0.6), stiffness=(0.5, 0.8),
                    rupture=(0.65, 0.9), friction=(0.35, 0.45))
DEFAULT_GELATIN = dict(cutting=(0.3, 0.55), stiffness=(0.2, 0.4),
                       rupture=(0.6, 0.8), friction=(-0.08, 0.05))
DEFAULT_TISSUE = dict(cutting=(1.3, 2.2), stiffness=(0.7, 1.2),
                      rupture_over_cutting=(0.7, 1.0), friction=(0.25, 0.54))


class Material(str, Enum):
    SKIN_FOAM = "SkinFoam"
    SILICONE = "Silicone"
    GELATIN = "Gelatin"
    EX_VIVO_TISSUE = "ExVivoTissue"

    @property
    def group(self) -> str:
        """Reporting group: skin / gelatin / tissue."""
        if self in (Material.SKIN_FOAM, Material.SILICONE):
            return "skin"
        return "gelatin" if self is Material.GELATIN else "tissue"


class InterfaceKind(str, Enum):
    ENTRY = "Entry"
    EXIT = "Exit"


@dataclass(frozen=True)
class TissueLayer:
    material: Material
    start_depth: float
    end_depth: float
    cutting_force: float
    stiffness: float
    rupture_force: float
    friction_slope_range: tuple[float, float]

    @property
    def thickness(self) -> float:
        return self.end_depth - self.start_depth

    def validate(self) -> None:
        if not self.end_depth > self.start_depth:
            raise RangeError(
                f"layer {self.material.value}: end_depth {self.end_depth} "
                f"must exceed start_depth {self.start_depth}")
        if self.cutting_force < 0:
            raise RangeError(f"cutting_force {self.cutting_force} < 0")
        if self.stiffness < 0:
            raise RangeError(f"stiffness {self.stiffness} < 0")
        if self.rupture_force < self.cutting_force:
            raise RangeError(
                f"rupture_force {self.rupture_force} below cutting_force "
                f"{self.cutting_force}")
        lo, hi = self.friction_slope_range
        if lo > hi:
            raise RangeError(f"friction_slope_range ({lo}, {hi}) inverted")


@dataclass(frozen=True)
class InterfaceEvent:
    depth: float
    kind: InterfaceKind
    from_material: Material
    to_material: Material


@dataclass(frozen=True)
class PhantomSpec:
    name: str
    layers: tuple[TissueLayer, ...]
    total_depth: float
    seed: int

    def validate(self) -> None:
        if not self.layers:
            raise SchemaError("phantom has no layers")
        for layer in self.layers:
            layer.validate()
        if abs(self.layers[0].start_depth) > 1e-9:
            raise ContiguityError(
                f"first layer starts at {self.layers[0].start_depth}, not 0")
        for a, b in zip(self.layers, self.layers[1:]):
            if abs(a.end_depth - b.start_depth) > 1e-9:
                raise ContiguityError(
                    f"gap or overlap between {a.end_depth} and {b.start_depth}")
        if abs(self.layers[-1].end_depth - self.total_depth) > 1e-9:
            raise ContiguityError(
                f"last layer ends at {self.layers[-1].end_depth}, "
                f"total_depth is {self.total_depth}")
        if not any(l.material is Material.GELATIN for l in self.layers):
            raise RangeError("phantom must contain at least one gelatin layer")
        n_events = len(interfaces(self))
        if n_events > 4:
            raise RangeError(
                f"{n_events} interface events exceed the 4 per insertion limit")

    def layer_at(self, depth: float) -> TissueLayer:
        """Layer containing the given depth; boundaries belong to the deeper
        layer's predecessor, i.e. depth d lies in the layer with
        start < d <= end. Depth 0 maps to the first layer."""
        if depth <= 0:
            return self.layers[0]
        for layer in self.layers:
            if depth <= layer.end_depth + 1e-12:
                return layer
        return self.layers[-1]

    def layer_index_at(self, depth: float) -> int:
        if depth <= 0:
            return 0
        for i, layer in enumerate(self.layers):
            if depth <= layer.end_depth + 1e-12:
                return i
        return len(self.layers) - 1

    @property
    def skin_end(self) -> float:
        """Depth where the topmost contiguous skin block ends (0 if none)."""
        end = 0.0
        for layer in self.layers:
            if layer.material.group != "skin":
                break
            end = layer.end_depth
        return end


def interfaces(spec: PhantomSpec) -> list[InterfaceEvent]:
    """Ground-truth detection targets: material changes to or from ex-vivo
    tissue. Skin-internal boundaries and skin/gelatin transitions are not
    part of the detection task."""
    events = []
    for a, b in zip(spec.layers, spec.layers[1:]):
        tissue_involved = (a.material is Material.EX_VIVO_TISSUE
                           or b.material is Material.EX_VIVO_TISSUE)
        if a.material is b.material or not tissue_involved:
            continue
        kind = (InterfaceKind.ENTRY if b.material is Material.EX_VIVO_TISSUE
                else InterfaceKind.EXIT)
        events.append(InterfaceEvent(depth=a.end_depth, kind=kind,
                                     from_material=a.material,
                                     to_material=b.material))
    return events


def serialize(spec: PhantomSpec) -> str:
    """Serialize to the phantom schema (JSON text)."""
    doc = {
        "version": SCHEMA_VERSION,
        "name": spec.name,
        "seed": spec.seed,
        "layers": [
            {
                "material": l.material.value,
                "start_mm": l.start_depth,
                "end_mm": l.end_depth,
                "cutting_force_n": l.cutting_force,
                "stiffness_n_per_mm": l.stiffness,
                "rupture_force_n": l.rupture_force,
                "friction_slope_n_per_mm": list(l.friction_slope_range),
            }
            for l in spec.layers
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


_REQUIRED_LAYER_FIELDS = ("material", "start_mm", "end_mm", "cutting_force_n",
                          "stiffness_n_per_mm", "rupture_force_n",
                          "friction_slope_n_per_mm")


def load_phantom(document: str | dict) -> PhantomSpec:
    """Parse and validate a phantom schema document.

    Raises SchemaError for missing fields, ContiguityError for layer
    gaps/overlaps and RangeError for out-of-range physical values.
    """
    if isinstance(document, str):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as e:
            raise SchemaError(f"not valid JSON: {e}") from e
    else:
        doc = document
    for field in ("name", "seed", "layers"):
        if field not in doc:
            raise SchemaError(f"missing field {field!r}")
    layers = []
    for i, entry in enumerate(doc["layers"]):
        for field in _REQUIRED_LAYER_FIELDS:
            if field not in entry:
                raise SchemaError(f"layer {i}: missing field {field!r}")
        try:
            material = Material(entry["material"])
        except ValueError as e:
            raise SchemaError(f"layer {i}: unknown material "
                              f"{entry['material']!r}") from e
        rng = entry["friction_slope_n_per_mm"]
        if not isinstance(rng, (list, tuple)) or len(rng) != 2:
            raise SchemaError(f"layer {i}: friction_slope_n_per_mm must be "
                              f"a [min, max] pair")
        layers.append(TissueLayer(
            material=material,
            start_depth=float(entry["start_mm"]),
            end_depth=float(entry["end_mm"]),
            cutting_force=float(entry["cutting_force_n"]),
            stiffness=float(entry["stiffness_n_per_mm"]),
            rupture_force=float(entry["rupture_force_n"]),
            friction_slope_range=(float(rng[0]), float(rng[1])),
        ))
    spec = PhantomSpec(name=str(doc["name"]), layers=tuple(layers),
                       total_depth=layers[-1].end_depth if layers else 0.0,
                       seed=int(doc["seed"]))
    spec.validate()
    return spec


def load_phantom_file(path) -> PhantomSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return load_phantom(fh.read())


def save_phantom_file(spec: PhantomSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize(spec))


def _draw(rng: np.random.Generator, lo_hi: tuple[float, float]) -> float:
    return float(rng.uniform(lo_hi[0], lo_hi[1]))


def _make_layer(material: Material, start: float, thickness: float,
                rng: np.random.Generator) -> TissueLayer:
    if material.group == "skin":
        p = DEFAULT_SKIN
        cutting = _draw(rng, p["cutting"])
        rupture = _draw(rng, p["rupture"])
    elif material is Material.GELATIN:
        p = DEFAULT_GELATIN
        cutting = _draw(rng, p["cutting"])
        rupture = _draw(rng, p["rupture"])
    else:
        p = DEFAULT_TISSUE
        cutting = _draw(rng, p["cutting"])
        rupture = cutting + _draw(rng, p["rupture_over_cutting"])
    return TissueLayer(
        material=material,
        start_depth=start,
        end_depth=start + thickness,
        cutting_force=cutting,
        stiffness=_draw(rng, p["stiffness"]),
        rupture_force=rupture,
        friction_slope_range=p["friction"],
    )


#: layer stack of the generated phantoms: skin on top, two tissue layers
#: embedded in gelatin.
DEFAULT_TOPOLOGY = (Material.SKIN_FOAM, Material.GELATIN,
                    Material.EX_VIVO_TISSUE, Material.GELATIN,
                    Material.EX_VIVO_TISSUE, Material.GELATIN)


def default_phantoms(seed: int, count: int = 4) -> list[PhantomSpec]:
    """Generate the standard phantom set: `count` specs with the
    skin/G1/T1/G2/T2/G3 topology, layer thicknesses drawn uniformly from
    DEFAULT_THICKNESS_MM. Pure function of the seed."""
    rng = np.random.default_rng(seed)
    specs = []
    for i in range(count):
        phantom_seed = int(rng.integers(0, 2**63 - 1))
        thicknesses = rng.uniform(*DEFAULT_THICKNESS_MM,
                                  size=len(DEFAULT_TOPOLOGY))
        layers = []
        start = 0.0
        for material, thickness in zip(DEFAULT_TOPOLOGY, thicknesses):
            layer = _make_layer(material, start, float(thickness), rng)
            layers.append(layer)
            start = layer.end_depth
        spec = PhantomSpec(name=f"phantom_{seed}_{i}", layers=tuple(layers),
                           total_depth=start, seed=phantom_seed)
        spec.validate()
        _check_friction_floor(spec)
        specs.append(spec)
    return specs


def _check_friction_floor(spec: PhantomSpec) -> None:
    """Generated phantoms must keep worst-case cumulative friction positive
    below the skin so the shaft-force floor can never engage."""
    worst = 0.0
    for layer in spec.layers:
        end_worst = worst + layer.friction_slope_range[0] * layer.thickness
        if layer.start_depth > 0 and min(worst, end_worst) <= 0.0:
            raise RangeError(
                f"{spec.name}: friction ranges allow non-positive cumulative "
                f"friction ({min(worst, end_worst):.2f} N) within "
                f"[{layer.start_depth}, {layer.end_depth}] mm")
        worst = end_worst
