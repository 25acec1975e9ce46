"""Station electrical architecture: a capacity tree over charging ports.

The station is a tree whose leaves are EVSE ports and whose internal nodes
model splitters/cables/transformers, each with an ampacity limit and an
efficiency coefficient.  A node's load is the signed net sum of the leaf
currents below it, scaled by 1/eta when drawing from the grid and by eta
when exporting; the magnitude of that load may never exceed the node's
capacity.  When a set of requested currents violates a node limit, all leaf
currents under that node are scaled by a common factor, deepest nodes first,
so relative proportions inside the subtree are preserved.

Trees are immutable after construction and safe to share across
environments; all functions here are pure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import StationError
from .vehicles import BatterySpec

KIND_AC = "ac"
KIND_DC = "dc"

LAYOUT_SINGLE = "single_type"
LAYOUT_MULTI = "multi_type"
LAYOUT_NESTED = "nested_splitters"


@dataclass(frozen=True)
class EvseSpec:
    """One charging port (tree leaf).

    voltage_v already encodes the phase product, so power = V * I directly.
    """

    id: int
    voltage_v: float
    i_max_charge_a: float
    i_max_discharge_a: float = 0.0
    eta_charge: float = 1.0
    eta_discharge: float = 1.0
    kind: str = KIND_AC

    def __post_init__(self):
        if self.voltage_v <= 0:
            raise StationError(f"EVSE {self.id}: voltage must be positive")
        if self.i_max_charge_a < 0 or self.i_max_discharge_a < 0:
            raise StationError(f"EVSE {self.id}: current limits must be >= 0")
        for name in ("eta_charge", "eta_discharge"):
            eta = getattr(self, name)
            if not 0.0 < eta <= 1.0:
                raise StationError(f"EVSE {self.id}: {name} must be in (0, 1]")
        if self.kind not in (KIND_AC, KIND_DC):
            raise StationError(f"EVSE {self.id}: kind must be 'ac' or 'dc'")


@dataclass(frozen=True)
class ArchNode:
    """Internal node: capacity limit (amps) plus an efficiency coefficient."""

    capacity_a: float
    eta: float = 1.0
    children: tuple = ()
    id: int | None = None

    def __post_init__(self):
        if self.capacity_a < 0:
            raise StationError("node capacity must be >= 0")
        if not 0.0 < self.eta <= 1.0:
            raise StationError("node eta must be in (0, 1]")
        object.__setattr__(self, "children", tuple(self.children))


@dataclass(frozen=True)
class StationTree:
    """Validated station architecture, fixed for the lifetime of an env.

    ``evses`` is the leaf enumeration (left-to-right traversal order) and
    ``parking_order`` gives the first-fit scan order as indices into it.
    """

    root: ArchNode
    evses: tuple[EvseSpec, ...]
    parking_order: tuple[int, ...]
    battery: BatterySpec | None = None
    _tables: "TreeTables" = field(repr=False, compare=False, default=None)

    @property
    def n_ports(self) -> int:
        return len(self.evses)

    def tables(self, include_battery: bool = False) -> "TreeTables":
        if not include_battery and self._tables is not None:
            return self._tables
        return compile_tree(self, include_battery=include_battery)


@dataclass(frozen=True)
class TreeTables:
    """Flat arrays for the stepping kernels.

    Nodes are enumerated in pre-order; ``order_desc`` lists node indices
    deepest-first for the rescaling sweep.  ``node_leaf[node_ptr[m]:
    node_ptr[m+1]]`` are the leaf slots under node m.  When the station
    battery participates in the constraints it occupies slot ``n_ports``
    and is attached at the root.
    """

    n_slots: int
    node_cap: np.ndarray
    node_eta: np.ndarray
    node_ptr: np.ndarray
    node_leaf: np.ndarray
    order_desc: np.ndarray
    depth: int


def build_station(
    root: ArchNode,
    evse_order: list[int] | None = None,
    battery: BatterySpec | None = None,
) -> StationTree:
    """Validate a node tree and fix the leaf enumeration.

    Raises StationError on an empty tree, duplicate EVSE ids, or a node
    object appearing more than once (cycle / shared subtree).
    """
    leaves: list[EvseSpec] = []
    seen_nodes: set[int] = set()
    seen_ids: set[int] = set()

    def walk(node) -> None:
        if id(node) in seen_nodes:
            raise StationError("node appears more than once in the tree (cycle or shared subtree)")
        seen_nodes.add(id(node))
        if isinstance(node, EvseSpec):
            if node.id in seen_ids:
                raise StationError(f"duplicate EVSE id {node.id}")
            seen_ids.add(node.id)
            leaves.append(node)
        elif isinstance(node, ArchNode):
            for child in node.children:
                walk(child)
        else:
            raise StationError(f"unexpected tree element {type(node).__name__}")

    walk(root)
    if not leaves:
        raise StationError("station tree has no EVSE leaves")

    if evse_order is None:
        order = tuple(range(len(leaves)))
    else:
        by_id = {e.id: i for i, e in enumerate(leaves)}
        if sorted(evse_order) != sorted(by_id):
            raise StationError("evse_order must be a permutation of all leaf ids")
        order = tuple(by_id[eid] for eid in evse_order)

    tree = StationTree(root=root, evses=tuple(leaves), parking_order=order, battery=battery)
    object.__setattr__(tree, "_tables", compile_tree(tree, include_battery=False))
    return tree


def compile_tree(tree: StationTree, include_battery: bool = False) -> TreeTables:
    """Flatten the node hierarchy into kernel-ready arrays."""
    n_ports = tree.n_ports
    n_slots = n_ports + 1 if include_battery else n_ports

    caps: list[float] = []
    etas: list[float] = []
    depths: list[int] = []
    members: list[list[int]] = []
    counter = iter(range(n_ports))

    def walk(node, depth: int) -> list[int]:
        if isinstance(node, EvseSpec):
            return [next(counter)]
        m = len(caps)
        caps.append(float(node.capacity_a))
        etas.append(float(node.eta))
        depths.append(depth)
        members.append([])
        got: list[int] = []
        for child in node.children:
            got.extend(walk(child, depth + 1))
        members[m] = got
        return got

    walk(tree.root, 0)
    if include_battery:
        members[0] = members[0] + [n_ports]

    ptr = np.zeros(len(caps) + 1, dtype=np.int64)
    flat: list[int] = []
    for m, leaf_list in enumerate(members):
        flat.extend(leaf_list)
        ptr[m + 1] = len(flat)
    order_desc = np.array(
        sorted(range(len(caps)), key=lambda m: -depths[m]), dtype=np.int64
    )
    return TreeTables(
        n_slots=n_slots,
        node_cap=np.asarray(caps, dtype=np.float64),
        node_eta=np.asarray(etas, dtype=np.float64),
        node_ptr=ptr,
        node_leaf=np.asarray(flat, dtype=np.int64),
        order_desc=order_desc,
        depth=max(depths) + 1,
    )


def _check_lengths(tables: TreeTables, currents: np.ndarray) -> np.ndarray:
    cur = np.asarray(currents, dtype=np.float64)
    if cur.shape != (tables.n_slots,):
        raise ValueError(
            f"expected {tables.n_slots} leaf currents, got shape {cur.shape}"
        )
    return cur


def node_load(tree: StationTree, leaf_currents) -> np.ndarray:
    """Net load at every internal node (pre-order), efficiency applied.

    Positive net flow (draw) is divided by eta; negative net flow (export)
    is multiplied by eta, mirroring the per-port convention.
    """
    t = tree.tables()
    cur = _check_lengths(t, leaf_currents)
    out = np.empty(len(t.node_cap), dtype=np.float64)
    for m in range(len(t.node_cap)):
        s = 0.0
        for a in range(t.node_ptr[m], t.node_ptr[m + 1]):
            s += cur[t.node_leaf[a]]
        out[m] = s / t.node_eta[m] if s > 0.0 else s * t.node_eta[m]
    return out


def enforce_limits(tree: StationTree, leaf_currents) -> np.ndarray:
    """Rescale leaf currents so every node satisfies |load| <= capacity.

    Violating subtrees are scaled uniformly (proportions preserved),
    deepest nodes first, iterating to a fixed point.  Never increases a
    current's magnitude and never flips its sign.
    """
    t = tree.tables()
    cur = _check_lengths(t, leaf_currents).copy()
    rescale_tree(t, cur)
    return cur


def violation_excess(tree: StationTree, leaf_currents) -> float:
    """Worst constraint violation in amps: max over nodes of |load| - cap."""
    t = tree.tables()
    cur = _check_lengths(t, leaf_currents)
    return tree_excess(t, cur)


# --- flat implementations shared with the pure-Python kernel ---------------

def tree_excess(t: TreeTables, cur: np.ndarray) -> float:
    worst = 0.0
    for m in range(len(t.node_cap)):
        s = 0.0
        for a in range(t.node_ptr[m], t.node_ptr[m + 1]):
            s += cur[t.node_leaf[a]]
        load = s / t.node_eta[m] if s > 0.0 else s * t.node_eta[m]
        over = (load if load >= 0.0 else -load) - t.node_cap[m]
        if over > worst:
            worst = over
    return worst


def rescale_tree(t: TreeTables, cur: np.ndarray) -> None:
    """In-place proportional rescaling; mirrors the compiled kernel."""
    max_passes = 2 * t.depth + 4
    n_nodes = len(t.node_cap)
    for _ in range(max_passes):
        changed = False
        for k in range(n_nodes):
            m = t.order_desc[k]
            s = 0.0
            for a in range(t.node_ptr[m], t.node_ptr[m + 1]):
                s += cur[t.node_leaf[a]]
            load = s / t.node_eta[m] if s > 0.0 else s * t.node_eta[m]
            mag = load if load >= 0.0 else -load
            if mag > t.node_cap[m]:
                f = t.node_cap[m] / mag
                for a in range(t.node_ptr[m], t.node_ptr[m + 1]):
                    j = t.node_leaf[a]
                    scaled = cur[j] * f
                    if scaled != cur[j]:
                        cur[j] = scaled
                        changed = True
        if not changed:
            return


# --- presets ----------------------------------------------------------------

@dataclass(frozen=True)
class StationParams:
    """Per-port electrical defaults and node-capacity headroom fractions."""

    ac_voltage_v: float = 230.0
    ac_i_max_a: float = 50.0  # 11.5 kW
    dc_voltage_v: float = 400.0
    dc_i_max_a: float = 375.0  # 150 kW
    v2g_capable: bool = True
    port_eta_charge: float = 0.95
    port_eta_discharge: float = 0.95
    node_eta: float = 1.0
    group_headroom: float = 0.9
    type_headroom: float = 0.75
    root_headroom: float = 0.6
    leaves_per_group: int = 2


def preset_station(
    layout: str,
    ac_count: int,
    dc_count: int,
    params: StationParams = StationParams(),
    battery: BatterySpec | None = None,
) -> StationTree:
    """Build one of the bundled architectures.

    single_type: one node over one kind of port.
    multi_type: one splitter per charger type under the root (the default
        station used elsewhere: 6 AC + 10 DC).
    nested_splitters: type splitters subdivided into fixed-size groups.
    """
    if ac_count < 0 or dc_count < 0:
        raise StationError("charger counts must be >= 0")
    if ac_count + dc_count < 1:
        raise StationError("station needs at least one charger")

    next_id = iter(range(ac_count + dc_count))

    def make_leaf(kind: str) -> EvseSpec:
        if kind == KIND_AC:
            v, imax = params.ac_voltage_v, params.ac_i_max_a
        else:
            v, imax = params.dc_voltage_v, params.dc_i_max_a
        return EvseSpec(
            id=next(next_id),
            voltage_v=v,
            i_max_charge_a=imax,
            i_max_discharge_a=imax if params.v2g_capable else 0.0,
            eta_charge=params.port_eta_charge,
            eta_discharge=params.port_eta_discharge,
            kind=kind,
        )

    def leaf_amps(leaves) -> float:
        return sum(l.i_max_charge_a for l in leaves)

    if layout == LAYOUT_SINGLE:
        if ac_count > 0 and dc_count > 0:
            raise StationError("single_type takes exactly one charger kind")
        kind = KIND_AC if ac_count > 0 else KIND_DC
        leaves = [make_leaf(kind) for _ in range(ac_count + dc_count)]
        root = ArchNode(
            capacity_a=params.root_headroom * leaf_amps(leaves),
            eta=params.node_eta,
            children=tuple(leaves),
        )
        return build_station(root, battery=battery)

    if layout not in (LAYOUT_MULTI, LAYOUT_NESTED):
        raise StationError(f"unknown layout {layout!r}")

    type_nodes = []
    all_amps = 0.0
    for kind, count in ((KIND_AC, ac_count), (KIND_DC, dc_count)):
        if count == 0:
            continue
        leaves = [make_leaf(kind) for _ in range(count)]
        all_amps += leaf_amps(leaves)
        if layout == LAYOUT_MULTI:
            children: tuple = tuple(leaves)
        else:
            g = params.leaves_per_group
            groups = [leaves[i : i + g] for i in range(0, len(leaves), g)]
            children = tuple(
                ArchNode(
                    capacity_a=params.group_headroom * leaf_amps(grp),
                    eta=params.node_eta,
                    children=tuple(grp),
                )
                for grp in groups
            )
        type_nodes.append(
            ArchNode(
                capacity_a=params.type_headroom * leaf_amps(leaves),
                eta=params.node_eta,
                children=children,
            )
        )
    root = ArchNode(
        capacity_a=params.root_headroom * all_amps,
        eta=params.node_eta,
        children=tuple(type_nodes),
    )
    return build_station(root, battery=battery)


def default_station(battery: BatterySpec | None = None) -> StationTree:
    """The 16-charger reference station: 6 AC + 10 DC, one splitter per type."""
    return preset_station(LAYOUT_MULTI, ac_count=6, dc_count=10, battery=battery)


# --- JSON interchange --------------------------------------------------------

def station_to_dict(tree: StationTree) -> dict:
    def node_dict(node):
        if isinstance(node, EvseSpec):
            return {
                "voltage_v": node.voltage_v,
                "i_max_charge_a": node.i_max_charge_a,
                "i_max_discharge_a": node.i_max_discharge_a,
                "eta_charge": node.eta_charge,
                "eta_discharge": node.eta_discharge,
                "kind": node.kind,
            }
        return {
            "capacity_a": node.capacity_a,
            "eta": node.eta,
            "children": [node_dict(c) for c in node.children],
        }

    out = {"root": node_dict(tree.root)}
    if tree.parking_order != tuple(range(tree.n_ports)):
        out["evse_order"] = [tree.evses[i].id for i in tree.parking_order]
    if tree.battery is not None:
        b = tree.battery
        out["battery"] = {
            "voltage_v": b.voltage_v,
            "capacity_kwh": b.capacity_kwh,
            "r_max_kw": b.r_max_kw,
            "tau": b.tau,
            "eta_charge": b.eta_charge,
            "eta_discharge": b.eta_discharge,
        }
    return out


def station_from_dict(obj: dict) -> StationTree:
    """Parse the nested-node station schema (see README for the format).

    Leaves are objects with voltage/current/efficiency fields; internal
    nodes carry capacity_a, eta and children.  Leaf ids are assigned in
    traversal order unless an explicit "id" is present.
    """
    counter = iter(range(1 << 20))
    if "root" in obj:
        root_obj, evse_order, battery_obj = obj["root"], obj.get("evse_order"), obj.get("battery")
    else:
        root_obj, evse_order, battery_obj = obj, None, None

    def parse(node_obj: dict):
        if "children" in node_obj:
            return ArchNode(
                capacity_a=float(node_obj["capacity_a"]),
                eta=float(node_obj.get("eta", 1.0)),
                children=tuple(parse(c) for c in node_obj["children"]),
            )
        return EvseSpec(
            id=int(node_obj.get("id", next(counter))),
            voltage_v=float(node_obj["voltage_v"]),
            i_max_charge_a=float(node_obj["i_max_charge_a"]),
            i_max_discharge_a=float(node_obj.get("i_max_discharge_a", 0.0)),
            eta_charge=float(node_obj.get("eta_charge", 1.0)),
            eta_discharge=float(node_obj.get("eta_discharge", 1.0)),
            kind=str(node_obj.get("kind", KIND_AC)),
        )

    root = parse(root_obj)
    if not isinstance(root, ArchNode):
        raise StationError("station root must be an internal node")
    battery = None
    if battery_obj is not None:
        battery = BatterySpec(
            voltage_v=float(battery_obj["voltage_v"]),
            capacity_kwh=float(battery_obj["capacity_kwh"]),
            r_max_kw=float(battery_obj["r_max_kw"]),
            tau=float(battery_obj.get("tau", 0.8)),
            eta_charge=float(battery_obj.get("eta_charge", 1.0)),
            eta_discharge=float(battery_obj.get("eta_discharge", 1.0)),
        )
    return build_station(root, evse_order=evse_order, battery=battery)


def load_station(path) -> StationTree:
    with open(path, "r", encoding="utf-8") as fh:
        return station_from_dict(json.load(fh))


def save_station(tree: StationTree, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(station_to_dict(tree), fh, indent=2, sort_keys=True)
        fh.write("\n")
